// exirt: difficulty metrics, 2PL calibration and quality classification for
// exercise interaction logs.
//
//   exirt validate --input log.csv --out dir
//   exirt metrics  --input log.csv --out dir
//   exirt fit      --input log.csv --grouping chapters.json --out dir
//   exirt classify --input parameters.csv [--input metrics.csv] --out dir
//   exirt simulate --input scenario.json --out dir
//   exirt pipeline --input scenario.json|log.csv --out dir

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exirt/commands.hpp"
#include "exirt/errors.hpp"

namespace {

struct Flags {
  std::vector<std::string> inputs;
  std::string out;
  std::string config;
  std::optional<double> threshold;
  std::string grouping;
  std::optional<std::uint64_t> seed;
  bool table2_compat = false;
  std::string format;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input,-i", f.inputs, "Input file(s)")->required();
  cmd->add_option("--out,-o", f.out, "Output directory (default: $EXIRT_OUT_DIR or exirt-out)");
  cmd->add_option("--config,-c", f.config, "JSON run configuration");
  cmd->add_option("--threshold", f.threshold, "Dichotomization threshold on r, in (0, 1]");
  cmd->add_option("--grouping", f.grouping, "JSON map of exercise to chapter");
  cmd->add_option("--seed", f.seed, "Seed override for simulation");
  cmd->add_flag("--table2-compat", f.table2_compat, "Treat b < 0 as Easy when classifying");
  cmd->add_option("--format", f.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

exirt::RunConfig resolve(const Flags& f) {
  exirt::RunConfig config;
  if (!f.config.empty()) config = exirt::RunConfig::load(f.config);
  if (!f.inputs.empty()) config.inputs.assign(f.inputs.begin(), f.inputs.end());
  if (!f.out.empty()) {
    config.out_dir = f.out;
  } else if (config.out_dir.empty()) {
    config.out_dir = exirt::default_out_dir();
  }
  if (f.threshold) config.threshold = *f.threshold;
  if (!f.grouping.empty()) config.grouping = f.grouping;
  if (f.seed) {
    config.seed = *f.seed;
    config.fit.seed = *f.seed;
  }
  if (f.table2_compat) config.table2_compat = true;
  if (f.format == "csv") config.format = exirt::OutputFormat::Csv;
  if (f.format == "json") config.format = exirt::OutputFormat::Json;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exercise difficulty and quality analysis with 2PL IRT"};
  app.require_subcommand(1);

  using Command = int (*)(const exirt::RunConfig&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"validate", "Check an event log and write validation.json", exirt::cmd_validate},
      {"metrics", "Per-exercise dl, hr, ir and quartile band", exirt::cmd_metrics},
      {"fit", "Fit the 2PL model per chapter; write parameters, curves, diagnostics", exirt::cmd_fit},
      {"classify", "Label parameters and flag poor exercises", exirt::cmd_classify},
      {"simulate", "Generate a synthetic log and ground truth from a scenario", exirt::cmd_simulate},
      {"pipeline", "validate, metrics, fit, classify (+ recovery for scenarios)", exirt::cmd_pipeline},
  };

  Flags flags;
  std::vector<std::pair<CLI::App*, Command>> handlers;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(sub, flags);
    handlers.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exirt::exit_code::kIo;
  }

  exirt::RunConfig config;
  try {
    config = resolve(flags);
  } catch (const exirt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == exirt::ErrorCode::UnreadableStream ? exirt::exit_code::kIo
                                                          : exirt::exit_code::kDomain;
  }
  for (const auto& [sub, fn] : handlers) {
    if (sub->parsed()) return fn(config, std::cout);
  }
  return exirt::exit_code::kIo;
}
