#include "exirt/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "exirt/csv.hpp"
#include "exirt/curves.hpp"
#include "exirt/errors.hpp"
#include "exirt/log_ingest.hpp"
#include "exirt/quality.hpp"
#include "exirt/report_io.hpp"
#include "exirt/response_matrix.hpp"
#include "exirt/simulator.hpp"

namespace exirt {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

int exit_for(const Error& e) {
  return e.code() == ErrorCode::UnreadableStream ? exit_code::kIo : exit_code::kDomain;
}

/// Files written by a command, relative to the output directory.
struct Outputs {
  fs::path root;
  std::vector<std::string> files;

  std::ofstream open(const fs::path& relative) {
    const auto full = root / relative;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary);
    if (!out) throw Error(ErrorCode::UnreadableStream, "cannot write '" + full.string() + "'");
    files.push_back(relative.generic_string());
    return out;
  }

  void json(const fs::path& relative, const ojson& j) { open(relative) << j.dump(2) << '\n'; }
};

std::string safe_name(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out.empty() ? std::string("_") : out;
}

const fs::path& require_input(const RunConfig& config, std::size_t index, const char* what) {
  if (config.inputs.size() <= index)
    throw Error(ErrorCode::UnreadableStream, std::string("missing input: ") + what);
  return config.inputs[index];
}

bool is_json_path(const fs::path& p) { return p.extension() == ".json"; }

void echo_config(Outputs& out, const RunConfig& config) {
  auto j = config.to_json();
  j.erase("out_dir");
  out.json("effective_config.json", j);
}

// Stages ---------------------------------------------------------------

struct ValidateStage {
  ParsedLog log;
  ValidationReport report;
};

ValidateStage stage_validate(const fs::path& log_path, Outputs& out, std::ostream& console) {
  ValidateStage st;
  st.log = read_event_log(log_path);
  st.report = validate_log(st.log.events, st.log.issues);
  out.json("validation.json", to_json(st.report));
  console << "validate: " << st.report.n_events << " events, " << st.report.n_students << " students, "
          << st.report.n_exercises << " exercises, " << st.report.violations.size() << " violations\n";
  for (const auto& w : st.report.warnings) console << "warning: " << w << '\n';
  return st;
}

std::vector<StudentExerciseSummary> valid_summaries(const fs::path& log_path) {
  const auto log = read_event_log(log_path);
  if (!log.issues.empty()) {
    const auto& first = log.issues.front();
    throw Error(first.code, "log has " + std::to_string(log.issues.size()) +
                                " malformed rows (first at line " + std::to_string(first.line) +
                                "); run validate for the full report");
  }
  const auto report = validate_log(log.events);
  if (!report.clean())
    throw Error(ErrorCode::MalformedRow, "log has invariant violations; run validate for the report");
  if (log.events.empty()) throw Error(ErrorCode::NoActivity, "log contains no events");
  return aggregate(log.events);
}

MetricsTable stage_metrics(std::span<const StudentExerciseSummary> summaries, const RunConfig& config,
                           Outputs& out, std::ostream& console) {
  const auto table = compute_metrics(summaries, {config.pooling, 0.05});
  if (config.format == OutputFormat::Csv) {
    auto f = out.open("metrics.csv");
    write_metrics_csv(f, table);
  } else {
    out.json("metrics.json", to_json(table));
  }
  console << "metrics: " << table.rows.size() << " exercises\n";
  for (const auto& w : table.warnings) console << "warning: " << w << '\n';
  return table;
}

struct FitStage {
  std::vector<ItemParameters> params;  // fitted groups, by group then column
  std::vector<std::string> fitted_groups;
  std::vector<std::string> skipped_groups;
  std::string parameters_file;
};

FitStage stage_fit(std::span<const StudentExerciseSummary> summaries, const RunConfig& config,
                   Outputs& out, std::ostream& console) {
  std::optional<Grouping> grouping;
  if (config.grouping) grouping = Grouping::load(*config.grouping);
  const auto set = build_matrices(summaries, grouping, config.threshold);
  for (const auto& w : set.warnings) console << "warning: " << w << '\n';

  FitStage st;
  st.skipped_groups = set.skipped_groups;
  ojson groups = ojson::array();
  const auto grid = theta_grid(config.curves.lo, config.curves.hi, config.curves.step);
  for (const auto& matrix : set.matrices) {
    const fs::path dir = fs::path("fit") / safe_name(matrix.group_id);
    {
      auto f = out.open(dir / "matrix.csv");
      write_matrix_csv(f, matrix);
    }
    FitResult fit;
    try {
      fit = fit_2pl(matrix, config.fit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateMatrix) throw;
      console << "warning: " << e.what() << '\n';
      st.skipped_groups.push_back(matrix.group_id);
      continue;
    }
    if (config.format == OutputFormat::Csv) {
      auto f = out.open(dir / "parameters.csv");
      write_parameters_csv(f, fit.items);
    } else {
      out.json(dir / "parameters.json", parameters_json(fit.items));
    }
    std::vector<ItemParameters> plotted;
    std::copy_if(fit.items.begin(), fit.items.end(), std::back_inserter(plotted),
                 [](const ItemParameters& p) { return !p.degenerate; });
    {
      auto f = out.open(dir / "curves.csv");
      write_curves_csv(f, sample_curves(plotted, grid));
    }
    {
      auto f = out.open(dir / "abilities.csv");
      write_abilities_csv(f, fit.abilities);
    }
    out.json(dir / "diagnostics.json", to_json(fit.diagnostics));
    console << "fit " << matrix.group_id << ": " << matrix.n_students() << " students x "
            << matrix.n_items() << " items, " << fit.diagnostics.n_iterations << " iterations, "
            << (fit.diagnostics.converged ? "converged" : "NOT converged") << ", log-likelihood "
            << csv::format_fixed(fit.diagnostics.log_likelihood, 4) << '\n';
    groups.push_back({{"group_id", matrix.group_id},
                      {"students", matrix.n_students()},
                      {"items", matrix.n_items()},
                      {"converged", fit.diagnostics.converged},
                      {"directory", dir.generic_string()}});
    st.fitted_groups.push_back(matrix.group_id);
    st.params.insert(st.params.end(), fit.items.begin(), fit.items.end());
  }

  ojson summary;
  summary["schema_version"] = csv::kSchemaVersion;
  summary["threshold"] = config.threshold;
  summary["groups"] = std::move(groups);
  summary["skipped_groups"] = st.skipped_groups;
  out.json("fit_summary.json", summary);

  if (st.fitted_groups.empty()) {
    std::string names;
    for (const auto& g : st.skipped_groups) names += (names.empty() ? "" : ", ") + g;
    throw Error(ErrorCode::DegenerateMatrix, "no group could be fitted; degenerate groups: " + names);
  }
  if (config.format == OutputFormat::Csv) {
    st.parameters_file = "parameters.csv";
    auto f = out.open(st.parameters_file);
    write_parameters_csv(f, st.params);
  } else {
    st.parameters_file = "parameters.json";
    out.json(st.parameters_file, parameters_json(st.params));
  }
  return st;
}

QualityReport stage_classify(std::span<const ItemParameters> params,
                             std::span<const ExerciseMetrics> metrics, const RunConfig& config,
                             Outputs& out, std::ostream& console) {
  if (params.empty()) throw Error(ErrorCode::EmptyItemSet, "parameters file has no items");
  std::vector<QualityVerdict> verdicts;
  for (const auto& p : params) verdicts.push_back(classify_quality(p, {config.table2_compat}));
  auto report = quality_report(verdicts, metrics, params);
  report.table2_compat = config.table2_compat;
  if (config.format == OutputFormat::Csv) {
    auto f = out.open("quality_report.csv");
    write_quality_csv(f, report);
  } else {
    out.json("quality_report.json", to_json(report));
  }
  console << "classify: " << report.rows.size() << " items, " << report.n_poor << " poor";
  for (std::size_t r = 0; r < report.poor_by_reason.size(); ++r)
    console << ", " << to_string(static_cast<PoorReason>(r)) << "=" << report.poor_by_reason[r];
  console << (config.table2_compat ? " (table2_compat)" : "") << '\n';
  for (const auto& w : report.warnings) console << "warning: " << w << '\n';
  return report;
}

struct SimulateStage {
  Scenario scenario;
  std::vector<SimulatedStudent> cohort;
  std::string log_file;
};

SimulateStage stage_simulate(const fs::path& scenario_path, const RunConfig& config, Outputs& out,
                             std::ostream& console) {
  SimulateStage st;
  auto j = [&] {
    std::ifstream in(scenario_path);
    if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open scenario '" + scenario_path.string() + "'");
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidSpec, std::string("scenario: ") + e.what());
    }
  }();
  if (config.seed) j["seed"] = *config.seed;
  st.scenario = Scenario::from_json(j);
  const auto& sc = st.scenario;
  st.cohort = sample_cohort(sc.cohort);
  const auto log = generate_event_log(st.cohort, sc.exercises, sc.behavior, sc.cohort.seed);

  st.log_file = sc.log_format == LogFormat::Csv ? "simulated_log.csv" : "simulated_log.jsonl";
  {
    auto f = out.open(st.log_file);
    write_event_log(f, log.events, sc.log_format);
  }
  {
    auto f = out.open("truth_items.csv");
    f << csv::kSchemaComment << '\n' << "item_id,module_id,a,b\n";
    for (const auto& ex : sc.exercises)
      f << csv::join({ex.item.item_id, ex.module_id, csv::format_double(ex.item.a),
                      csv::format_double(ex.item.b)})
        << '\n';
  }
  {
    auto f = out.open("truth_abilities.csv");
    f << csv::kSchemaComment << '\n' << "student_id,theta\n";
    for (const auto& s : st.cohort) f << csv::join({s.student_id, csv::format_double(s.theta)}) << '\n';
  }
  ojson manifest;
  manifest["schema_version"] = csv::kSchemaVersion;
  manifest["seed"] = sc.cohort.seed;
  manifest["students"] = sc.cohort.n_students;
  manifest["items"] = sc.exercises.size();
  manifest["events"] = log.events.size();
  manifest["log"] = st.log_file;
  manifest["prng"] = "mt19937_64 per (purpose, student, item) via seed_seq";
  out.json("simulation.json", manifest);
  console << "simulate: " << sc.cohort.n_students << " students, " << sc.exercises.size() << " items, "
          << log.events.size() << " events\n";
  return st;
}

template <typename Body>
int guarded(const RunConfig& config, std::ostream& console, Body&& body) {
  try {
    config.validate();
    Outputs out{config.out_dir, {}};
    echo_config(out, config);
    return body(out);
  } catch (const Error& e) {
    console << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const fs::filesystem_error& e) {
    console << "error: " << e.what() << '\n';
    return exit_code::kIo;
  }
}

std::vector<ItemParameters> load_parameters(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open parameters '" + path.string() + "'");
  return read_parameters(in, is_json_path(path));
}

std::vector<ExerciseMetrics> load_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open metrics '" + path.string() + "'");
  try {
    return read_metrics(in, is_json_path(path)).rows;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("inputs"))
      for (const auto& p : j.at("inputs")) c.inputs.emplace_back(p.get<std::string>());
    if (j.contains("out_dir") && !j.at("out_dir").is_null()) c.out_dir = j.at("out_dir").get<std::string>();
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("grouping") && !j.at("grouping").is_null())
      c.grouping = fs::path(j.at("grouping").get<std::string>());
    if (j.contains("fit")) c.fit = FitConfig::from_json(j.at("fit"));
    c.table2_compat = j.value("table2_compat", c.table2_compat);
    if (j.contains("pooling")) {
      const auto p = j.at("pooling").get<std::string>();
      if (p == "pooled") {
        c.pooling = Pooling::Pooled;
      } else if (p == "per_student_mean") {
        c.pooling = Pooling::PerStudentMean;
      } else {
        throw Error(ErrorCode::InvalidSpec, "pooling must be pooled or per_student_mean");
      }
    }
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("format")) {
      const auto f = j.at("format").get<std::string>();
      if (f == "csv") {
        c.format = OutputFormat::Csv;
      } else if (f == "json") {
        c.format = OutputFormat::Json;
      } else {
        throw Error(ErrorCode::InvalidSpec, "format must be csv or json");
      }
    }
    if (j.contains("curves")) {
      const auto& cv = j.at("curves");
      c.curves.lo = cv.value("lo", c.curves.lo);
      c.curves.hi = cv.value("hi", c.curves.hi);
      c.curves.step = cv.value("step", c.curves.step);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open config '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("config: ") + e.what());
  }
}

nlohmann::ordered_json RunConfig::to_json() const {
  ojson j;
  j["schema_version"] = csv::kSchemaVersion;
  j["inputs"] = ojson::array();
  for (const auto& p : inputs) j["inputs"].push_back(p.generic_string());
  j["out_dir"] = out_dir.generic_string();
  j["threshold"] = threshold;
  j["grouping"] = grouping ? ojson(grouping->generic_string()) : ojson();
  j["fit"] = fit.to_json();
  j["table2_compat"] = table2_compat;
  j["pooling"] = pooling == Pooling::Pooled ? "pooled" : "per_student_mean";
  j["seed"] = seed ? ojson(*seed) : ojson();
  j["format"] = format == OutputFormat::Csv ? "csv" : "json";
  j["curves"] = {{"lo", curves.lo}, {"hi", curves.hi}, {"step", curves.step}};
  j["dl_note"] = kDlNote;
  return j;
}

void RunConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "threshold must lie in (0, 1]");
  if (out_dir.empty()) throw Error(ErrorCode::InvalidSpec, "output directory is empty");
  for (const auto& p : inputs)
    if (p.empty()) throw Error(ErrorCode::InvalidSpec, "empty input path");
  if (!(curves.step > 0) || !(curves.hi > curves.lo))
    throw Error(ErrorCode::InvalidSpec, "curve grid needs lo < hi and a positive step");
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("EXIRT_OUT_DIR"); env && *env) return env;
  return "exirt-out";
}

int cmd_validate(const RunConfig& config, std::ostream& console) {
  return guarded(config, console, [&](Outputs& out) {
    const auto st = stage_validate(require_input(config, 0, "event log"), out, console);
    return st.report.clean() ? exit_code::kOk : exit_code::kDomain;
  });
}

int cmd_metrics(const RunConfig& config, std::ostream& console) {
  return guarded(config, console, [&](Outputs& out) {
    const auto summaries = valid_summaries(require_input(config, 0, "event log"));
    stage_metrics(summaries, config, out, console);
    return exit_code::kOk;
  });
}

int cmd_fit(const RunConfig& config, std::ostream& console) {
  return guarded(config, console, [&](Outputs& out) {
    const auto summaries = valid_summaries(require_input(config, 0, "event log"));
    stage_fit(summaries, config, out, console);
    return exit_code::kOk;
  });
}

int cmd_classify(const RunConfig& config, std::ostream& console) {
  return guarded(config, console, [&](Outputs& out) {
    const auto params = load_parameters(require_input(config, 0, "parameters file"));
    std::vector<ExerciseMetrics> metrics;
    if (config.inputs.size() > 1) metrics = load_metrics(config.inputs[1]);
    stage_classify(params, metrics, config, out, console);
    return exit_code::kOk;
  });
}

int cmd_simulate(const RunConfig& config, std::ostream& console) {
  return guarded(config, console, [&](Outputs& out) {
    stage_simulate(require_input(config, 0, "scenario"), config, out, console);
    return exit_code::kOk;
  });
}

int cmd_pipeline(const RunConfig& config, std::ostream& console) {
  return guarded(config, console, [&](Outputs& out) {
    const auto& input = require_input(config, 0, "scenario or event log");
    ojson summary;
    summary["schema_version"] = csv::kSchemaVersion;
    summary["dl_note"] = kDlNote;
    summary["table2_compat"] = config.table2_compat;
    ojson stages = ojson::object();

    auto finish = [&](int code) {
      summary["stages"] = stages;
      summary["exit_code"] = code;
      auto files = out.files;
      files.push_back("summary.json");
      std::sort(files.begin(), files.end());
      summary["files"] = files;
      out.json("summary.json", summary);
      return code;
    };
    auto fail = [&](const char* stage, const Error& e) {
      console << "error in " << stage << ": " << e.what() << '\n';
      stages[stage] = {{"status", "failed"}, {"error", e.what()}};
      return finish(exit_for(e));
    };

    fs::path log_path = input;
    std::optional<SimulateStage> sim;
    if (is_json_path(input)) {
      try {
        sim = stage_simulate(input, config, out, console);
      } catch (const Error& e) {
        return fail("simulate", e);
      }
      log_path = config.out_dir / sim->log_file;
      stages["simulate"] = {{"status", "ok"}, {"log", sim->log_file}};
    }

    ValidateStage validated;
    try {
      validated = stage_validate(log_path, out, console);
    } catch (const Error& e) {
      return fail("validate", e);
    }
    if (!validated.report.clean()) {
      stages["validate"] = {{"status", "failed"}, {"violations", validated.report.violations.size()}};
      return finish(exit_code::kDomain);
    }
    if (validated.log.events.empty()) {
      stages["validate"] = {{"status", "failed"}, {"error", "log contains no events"}};
      return finish(exit_code::kDomain);
    }
    stages["validate"] = {{"status", "ok"}, {"events", validated.report.n_events}};
    const auto summaries = aggregate(validated.log.events);
    {
      auto f = out.open("summaries.csv");
      write_summaries_csv(f, summaries);
    }

    MetricsTable metrics;
    try {
      metrics = stage_metrics(summaries, config, out, console);
    } catch (const Error& e) {
      return fail("metrics", e);
    }
    stages["metrics"] = {{"status", "ok"}, {"exercises", metrics.rows.size()}};

    FitStage fitted;
    try {
      fitted = stage_fit(summaries, config, out, console);
    } catch (const Error& e) {
      return fail("fit", e);
    }
    stages["fit"] = {{"status", "ok"},
                     {"groups", fitted.fitted_groups},
                     {"skipped_groups", fitted.skipped_groups},
                     {"parameters", fitted.parameters_file}};

    QualityReport quality;
    try {
      quality = stage_classify(fitted.params, metrics.rows, config, out, console);
    } catch (const Error& e) {
      return fail("classify", e);
    }
    stages["classify"] = {{"status", "ok"}, {"items", quality.rows.size()}, {"poor", quality.n_poor}};

    if (sim) {
      std::map<std::string, ItemParameters> fitted_by_id;
      for (const auto& p : fitted.params)
        if (!p.degenerate) fitted_by_id[p.item_id] = p;
      std::vector<ItemParameters> truth;
      std::vector<ItemParameters> estimates;
      std::vector<ExerciseSpec> exercises = sim->scenario.exercises;
      std::sort(exercises.begin(), exercises.end(),
                [](const auto& x, const auto& y) { return x.item.item_id < y.item.item_id; });
      for (const auto& ex : exercises) {
        if (auto it = fitted_by_id.find(ex.item.item_id); it != fitted_by_id.end()) {
          truth.push_back(ex.item);
          estimates.push_back(it->second);
        }
      }
      if (truth.size() >= 2) {
        const auto stats = recovery_report(truth, estimates);
        auto j = to_json(stats);
        j["schema_version"] = csv::kSchemaVersion;
        j["items_excluded"] = exercises.size() - truth.size();
        out.json("recovery.json", j);
        stages["recovery"] = {{"status", "ok"}, {"file", "recovery.json"}};
        console << "recovery: rmse(a)=" << csv::format_fixed(stats.a.rmse, 4)
                << " rmse(b)=" << csv::format_fixed(stats.b.rmse, 4)
                << " r(a)=" << csv::format_fixed(stats.a.correlation, 4)
                << " r(b)=" << csv::format_fixed(stats.b.correlation, 4) << '\n';
      }
    }
    return finish(exit_code::kOk);
  });
}

}  // namespace exirt
