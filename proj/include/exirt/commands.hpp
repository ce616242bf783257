#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "exirt/irt_fit.hpp"
#include "exirt/metrics.hpp"

namespace exirt {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kDomain = 1;  // invalid data, unfittable input, schema mismatch
inline constexpr int kIo = 2;      // unreadable input or bad usage
}  // namespace exit_code

enum class OutputFormat { Csv, Json };

struct CurveSpec {
  double lo = -4.0;
  double hi = 4.0;
  double step = 0.05;

  friend bool operator==(const CurveSpec&, const CurveSpec&) = default;
};

/// Everything a subcommand needs. Command-line flags override values read
/// from a config file, which override these defaults.
struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
  double threshold = 0.70;
  std::optional<std::filesystem::path> grouping;
  FitConfig fit;
  bool table2_compat = false;
  Pooling pooling = Pooling::Pooled;
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::Csv;
  CurveSpec curves;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  /// Throws InvalidSpec.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// $EXIRT_OUT_DIR when set, else "exirt-out".
std::filesystem::path default_out_dir();

// Each command writes its files under config.out_dir, prints a short
// summary to `console`, and returns one of the exit codes above.

int cmd_validate(const RunConfig& config, std::ostream& console);
int cmd_metrics(const RunConfig& config, std::ostream& console);
int cmd_fit(const RunConfig& config, std::ostream& console);
/// inputs[0] is a parameters file; inputs[1], when present, a metrics file.
int cmd_classify(const RunConfig& config, std::ostream& console);
int cmd_simulate(const RunConfig& config, std::ostream& console);
/// inputs[0] is either a scenario (.json) or an event log.
int cmd_pipeline(const RunConfig& config, std::ostream& console);

}  // namespace exirt
