#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "exirt/log_ingest.hpp"

namespace exirt {

enum class Band { Q1, Q2, Q3, Q4 };

std::string_view to_string(Band band);
Band band_from_string(std::string_view text);

/// How hint and incorrect ratios combine students of one exercise.
enum class Pooling {
  Pooled,          // ratio of summed counts
  PerStudentMean,  // mean of per-student ratios
};

/// dl, hr, ir are absent when their denominators vanish (for example a
/// hint-only exercise has hr but no dl or ir).
struct ExerciseMetrics {
  std::string exercise_id;
  std::string module_id;
  std::int64_t n_students = 0;
  std::optional<double> dl;
  std::optional<double> hr;
  std::optional<double> ir;
  std::optional<Band> band;
};

double correct_ratio(const StudentExerciseSummary& summary);

/// Mean incorrectness 1 - mean(r) over the students that attempted the
/// exercise. Summaries with no attempts are ignored. Accumulated in exact
/// rational arithmetic, so the result is independent of input order.
double difficulty_level(std::span<const StudentExerciseSummary> summaries);

double hint_ratio(std::span<const StudentExerciseSummary> summaries,
                  Pooling pooling = Pooling::Pooled);
double incorrect_ratio(std::span<const StudentExerciseSummary> summaries,
                       Pooling pooling = Pooling::Pooled);

/// [0, 0.12) -> Q1, [0.12, 0.21) -> Q2, [0.21, 0.34] -> Q3, (0.34, 1] -> Q4.
Band quartile_band(double dl);

struct MetricsOptions {
  Pooling pooling = Pooling::Pooled;
  // Warn when the two pooling modes disagree by more than this.
  double divergence_warning = 0.05;
};

struct MetricsTable {
  std::vector<ExerciseMetrics> rows;  // sorted by exercise_id
  std::vector<std::string> warnings;
};

MetricsTable compute_metrics(std::span<const StudentExerciseSummary> summaries,
                             const MetricsOptions& options = {});

inline constexpr std::string_view kDlNote =
    "dl = 1 - (sum of r_i)/N over students with at least one attempt";

void write_metrics_csv(std::ostream& out, const MetricsTable& table);
nlohmann::ordered_json to_json(const MetricsTable& table);
/// Reads either the CSV or the JSON form.
MetricsTable read_metrics(std::istream& in, bool json);

}  // namespace exirt
