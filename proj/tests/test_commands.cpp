#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "exirt/commands.hpp"
#include "exirt/errors.hpp"

using namespace exirt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  static const auto base = [] {
    std::random_device rd;
    auto dir = fs::temp_directory_path() / ("exirt-test-" + std::to_string(rd()));
    fs::create_directories(dir);
    return dir;
  }();
  const auto dir = base / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return out;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(EXIRT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig config_for(std::vector<fs::path> inputs, const fs::path& out) {
  RunConfig c;
  c.inputs = std::move(inputs);
  c.out_dir = out;
  return c;
}

const char* kScenario = R"({
  "cohort": {"n_students": 300},
  "seed": 17,
  "behavior": {"max_attempts": 2, "retry_prob": 0.5, "hint_propensity": 0.2},
  "random_items": {"count": 8, "n_modules": 2}
})";

/// A clean log written by the simulator.
fs::path simulated_log(const fs::path& dir) {
  write_file(dir / "scenario.json", kScenario);
  std::ostringstream sink;
  REQUIRE(cmd_simulate(config_for({dir / "scenario.json"}, dir / "sim"), sink) == exit_code::kOk);
  return dir / "sim" / "simulated_log.csv";
}

}  // namespace

TEST_CASE("validate exit codes") {
  const auto dir = scratch("validate");
  const auto log = simulated_log(dir);
  std::ostringstream sink;
  CHECK(cmd_validate(config_for({log}, dir / "ok"), sink) == exit_code::kOk);
  CHECK(fs::exists(dir / "ok" / "validation.json"));

  write_file(dir / "bad.csv",
             "student_id,exercise_id,module_id,timestamp,kind,correct\n"
             "s1,e1,ch1,2020-10-05T14:11:02.000Z,attempt,true\n"
             "s1,e1,ch1,2020-10-05T14:11:03.000Z,hint,true\n");
  CHECK(cmd_validate(config_for({dir / "bad.csv"}, dir / "bad"), sink) == exit_code::kDomain);
  const auto report = nlohmann::json::parse(read_file(dir / "bad" / "validation.json"));
  CHECK(report["violations"].size() == 1);

  CHECK(cmd_validate(config_for({dir / "missing.csv"}, dir / "missing"), sink) == exit_code::kIo);

  CHECK(cli("validate --input " + log.string() + " --out " + (dir / "cli").string()) == 0);
  CHECK(cli("validate --input " + (dir / "bad.csv").string() + " --out " + (dir / "cli").string()) == 1);
  CHECK(cli("validate --input " + (dir / "missing.csv").string() + " --out " + (dir / "cli").string()) == 2);
  CHECK(cli("validate") == 2);
  CHECK(cli("frobnicate --input x") == 2);
}

TEST_CASE("metrics command") {
  const auto dir = scratch("metrics");
  write_file(dir / "log.csv",
             "student_id,exercise_id,module_id,timestamp,kind,correct\n"
             "s1,e1,ch1,2020-10-05T14:11:02.000Z,attempt,true\n"
             "s1,e1,ch1,2020-10-05T14:11:03.000Z,hint,\n"
             "s2,e1,ch1,2020-10-05T14:11:04.000Z,attempt,false\n"
             "s2,e2,ch1,2020-10-05T14:11:05.000Z,hint,\n");
  std::ostringstream sink;
  CHECK(cmd_metrics(config_for({dir / "log.csv"}, dir / "out"), sink) == exit_code::kOk);
  const auto text = read_file(dir / "out" / "metrics.csv");
  CHECK(text.find("e1,ch1,2,0.5000,0.3333,0.5000,Q4") != std::string::npos);
  CHECK(text.find("e2,ch1,0,,1.0000,,") != std::string::npos);
  CHECK(sink.str().find("warning") != std::string::npos);

  auto json_cfg = config_for({dir / "log.csv"}, dir / "json");
  json_cfg.format = OutputFormat::Json;
  CHECK(cmd_metrics(json_cfg, sink) == exit_code::kOk);
  const auto j = nlohmann::json::parse(read_file(dir / "json" / "metrics.json"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["exercises"][0]["dl"] == 0.5);

  write_file(dir / "single.csv",
             "student_id,exercise_id,module_id,timestamp,kind,correct\n"
             "s1,e1,ch1,2020-10-05T14:11:02.000Z,attempt,true\n");
  CHECK(cmd_metrics(config_for({dir / "single.csv"}, dir / "single"), sink) == exit_code::kOk);
  const auto single = read_file(dir / "single" / "metrics.csv");
  CHECK(std::count(single.begin(), single.end(), '\n') == 4);
}

TEST_CASE("fit command with a two-chapter grouping") {
  const auto dir = scratch("fit");
  const auto log = simulated_log(dir);
  nlohmann::json grouping;
  for (int k = 1; k <= 8; ++k) {
    char id[8];
    std::snprintf(id, sizeof id, "ex%04d", k);
    grouping["groups"][id] = k <= 4 ? "alpha" : "beta";
  }
  write_file(dir / "grouping.json", grouping.dump());
  auto cfg = config_for({log}, dir / "out");
  cfg.grouping = dir / "grouping.json";
  std::ostringstream sink;
  REQUIRE(cmd_fit(cfg, sink) == exit_code::kOk);
  CHECK(fs::exists(dir / "out" / "fit" / "alpha" / "parameters.csv"));
  CHECK(fs::exists(dir / "out" / "fit" / "beta" / "parameters.csv"));
  CHECK(fs::exists(dir / "out" / "fit" / "beta" / "curves.csv"));
  CHECK(fs::exists(dir / "out" / "fit" / "beta" / "diagnostics.json"));
  CHECK(fs::exists(dir / "out" / "parameters.csv"));

  // rerun into a second directory: identical bytes
  auto again = cfg;
  again.out_dir = dir / "out2";
  REQUIRE(cmd_fit(again, sink) == exit_code::kOk);
  CHECK(tree(dir / "out") == tree(dir / "out2"));

  // unmapped exercise, no default group
  grouping["groups"].erase("ex0008");
  write_file(dir / "partial.json", grouping.dump());
  std::ostringstream err;
  cfg.grouping = dir / "partial.json";
  cfg.out_dir = dir / "partial";
  CHECK(cmd_fit(cfg, err) == exit_code::kDomain);
  CHECK(err.str().find("ex0008") != std::string::npos);
  CHECK(cli("fit --input " + log.string() + " --grouping " + (dir / "partial.json").string() + " --out " +
            (dir / "cli").string()) == 1);
}

TEST_CASE("classify command") {
  const auto dir = scratch("classify");
  write_file(dir / "table.csv",
             "item_id,a,b,se_a,se_b,degenerate\n"
             "AlistRemovePROp,-0.4715,6.72,,,false\n"
             "CompareTF-MCQ5p,0.1614,-2.24,,,false\n"
             "SelSortPROp,0.0496,-34.98,,,false\n"
             "BTSummaryQuestionsp,-0.0303,2.20,,,false\n"
             "BSTremovePRO,0.3297,-0.20,,,false\n"
             "binarySearchPRO,-0.3379,8.02,,,false\n");
  std::ostringstream sink;
  auto cfg = config_for({dir / "table.csv"}, dir / "compat");
  cfg.table2_compat = true;
  cfg.format = OutputFormat::Json;
  REQUIRE(cmd_classify(cfg, sink) == exit_code::kOk);
  auto j = nlohmann::json::parse(read_file(dir / "compat" / "quality_report.json"));
  CHECK(j["summary"]["poor"] == 6);

  cfg.table2_compat = false;
  cfg.out_dir = dir / "plain";
  REQUIRE(cmd_classify(cfg, sink) == exit_code::kOk);
  j = nlohmann::json::parse(read_file(dir / "plain" / "quality_report.json"));
  CHECK(j["summary"]["poor"] == 5);

  write_file(dir / "moderate.csv",
             "item_id,a,b,se_a,se_b,degenerate\n"
             "m1,1.0,0.1,,,false\nm2,0.9,-0.5,,,false\nm3,1.2,0.8,,,false\n");
  CHECK(cmd_classify(config_for({dir / "moderate.csv"}, dir / "moderate"), sink) == exit_code::kOk);
  CHECK(read_file(dir / "moderate" / "quality_report.csv").find("Poor") == std::string::npos);

  write_file(dir / "empty.csv", "item_id,a,b,se_a,se_b,degenerate\n");
  CHECK(cmd_classify(config_for({dir / "empty.csv"}, dir / "empty"), sink) == exit_code::kDomain);
  CHECK(cli("classify --input " + (dir / "empty.csv").string() + " --out " + (dir / "cli").string()) == 1);
  CHECK(cli("classify --table2-compat --input " + (dir / "table.csv").string() + " --out " +
            (dir / "cli").string()) == 0);

  write_file(dir / "wrong.csv", "name,value\nx,1\n");
  CHECK(cmd_classify(config_for({dir / "wrong.csv"}, dir / "wrong"), sink) == exit_code::kDomain);
}

TEST_CASE("simulate command") {
  const auto dir = scratch("simulate");
  write_file(dir / "scenario.json",
             R"({"cohort": {"n_students": 100}, "seed": 5, "random_items": {"count": 10}})");
  std::ostringstream sink;
  REQUIRE(cmd_simulate(config_for({dir / "scenario.json"}, dir / "a"), sink) == exit_code::kOk);
  REQUIRE(cmd_simulate(config_for({dir / "scenario.json"}, dir / "b"), sink) == exit_code::kOk);
  CHECK(tree(dir / "a") == tree(dir / "b"));

  std::ifstream in(dir / "a" / "simulated_log.csv");
  const auto log = parse_event_log(in, LogFormat::Csv);
  CHECK(log.issues.empty());
  std::set<std::string> students;
  for (const auto& e : log.events) students.insert(e.student_id);
  CHECK(students.size() == 100);

  auto seeded = config_for({dir / "scenario.json"}, dir / "c");
  seeded.seed = 6;
  REQUIRE(cmd_simulate(seeded, sink) == exit_code::kOk);
  CHECK(read_file(dir / "a" / "simulated_log.csv") != read_file(dir / "c" / "simulated_log.csv"));

  write_file(dir / "zero.json", R"({"cohort": {"n_students": 0}, "random_items": {"count": 3}})");
  CHECK(cmd_simulate(config_for({dir / "zero.json"}, dir / "zero"), sink) == exit_code::kDomain);
  CHECK(cli("simulate --input " + (dir / "zero.json").string() + " --out " + (dir / "cli").string()) == 1);
}

TEST_CASE("pipeline command") {
  const auto dir = scratch("pipeline");
  write_file(dir / "scenario.json", kScenario);
  std::ostringstream sink;
  REQUIRE(cmd_pipeline(config_for({dir / "scenario.json"}, dir / "sim"), sink) == exit_code::kOk);
  auto summary = nlohmann::json::parse(read_file(dir / "sim" / "summary.json"));
  CHECK(summary["exit_code"] == 0);
  CHECK(summary["stages"]["recovery"]["status"] == "ok");
  for (const auto& f : summary["files"]) CHECK(fs::exists(dir / "sim" / f.get<std::string>()));
  const auto recovery = nlohmann::json::parse(read_file(dir / "sim" / "recovery.json"));
  CHECK(recovery["n_items"].get<int>() >= 2);

  // a plain log has no ground truth
  const auto log = dir / "sim" / "simulated_log.csv";
  REQUIRE(cmd_pipeline(config_for({log}, dir / "real"), sink) == exit_code::kOk);
  summary = nlohmann::json::parse(read_file(dir / "real" / "summary.json"));
  CHECK_FALSE(summary["stages"].contains("recovery"));
  CHECK_FALSE(fs::exists(dir / "real" / "recovery.json"));

  write_file(dir / "broken.csv",
             "student_id,exercise_id,module_id,timestamp,kind,correct\n"
             "s1,e1,ch1,2020-10-05T14:11:02.000Z,attempt,\n");
  CHECK(cmd_pipeline(config_for({dir / "broken.csv"}, dir / "broken"), sink) == exit_code::kDomain);
  summary = nlohmann::json::parse(read_file(dir / "broken" / "summary.json"));
  CHECK(summary["stages"]["validate"]["status"] == "failed");
  CHECK_FALSE(summary["stages"].contains("metrics"));

  CHECK(cli("pipeline --input " + (dir / "scenario.json").string() + " --out " + (dir / "cli").string()) == 0);
}

TEST_CASE("run config") {
  RunConfig c;
  c.inputs = {"a.csv", "b.csv"};
  c.out_dir = "out";
  c.threshold = 0.8;
  c.grouping = fs::path("g.json");
  c.fit.quadrature.n_nodes = 31;
  c.table2_compat = true;
  c.pooling = Pooling::PerStudentMean;
  c.seed = 123;
  c.format = OutputFormat::Json;
  c.curves.step = 0.1;
  CHECK(RunConfig::from_json(nlohmann::json::parse(c.to_json().dump())) == c);
  CHECK(RunConfig::from_json(nlohmann::json::parse(RunConfig{}.to_json().dump())) == RunConfig{});

  c.threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.threshold = 1.0;
  CHECK_NOTHROW(c.validate());

  const auto dir = scratch("config");
  const auto log = simulated_log(dir);
  nlohmann::json file{{"threshold", 0.5}, {"format", "json"}, {"out_dir", (dir / "from_config").string()}};
  write_file(dir / "config.json", file.dump());
  // flags override the file
  CHECK(cli("metrics --config " + (dir / "config.json").string() + " --input " + log.string() +
            " --format csv") == 0);
  CHECK(fs::exists(dir / "from_config" / "metrics.csv"));
  const auto echoed = nlohmann::json::parse(read_file(dir / "from_config" / "effective_config.json"));
  CHECK(echoed["threshold"] == 0.5);
  CHECK(echoed["format"] == "csv");
  CHECK(cli("metrics --config " + (dir / "missing.json").string() + " --input " + log.string()) == 2);
}
