#include "exirt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <boost/multiprecision/cpp_int.hpp>

#include "exirt/csv.hpp"

namespace exirt {
namespace {

using boost::multiprecision::cpp_rational;

double to_double(const cpp_rational& q) { return q.convert_to<double>(); }

bool has_attempts(const StudentExerciseSummary& s) { return s.n_attempts > 0; }

std::string optional_fixed(const std::optional<double>& v) {
  return v ? csv::format_fixed(*v, 4) : std::string();
}

std::optional<double> optional_parse(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return csv::parse_double(text);
}

}  // namespace

std::string_view to_string(Band band) {
  switch (band) {
    case Band::Q1: return "Q1";
    case Band::Q2: return "Q2";
    case Band::Q3: return "Q3";
    case Band::Q4: return "Q4";
  }
  return "";
}

Band band_from_string(std::string_view text) {
  if (text == "Q1") return Band::Q1;
  if (text == "Q2") return Band::Q2;
  if (text == "Q3") return Band::Q3;
  if (text == "Q4") return Band::Q4;
  throw Error(ErrorCode::MalformedRow, "unknown band '" + std::string(text) + "'");
}

double correct_ratio(const StudentExerciseSummary& summary) {
  if (summary.n_attempts <= 0)
    throw Error(ErrorCode::UndefinedRatio,
                "no attempts for (" + summary.student_id + ", " + summary.exercise_id + ")");
  return static_cast<double>(summary.n_correct) / static_cast<double>(summary.n_attempts);
}

double difficulty_level(std::span<const StudentExerciseSummary> summaries) {
  cpp_rational sum_r = 0;
  std::int64_t n = 0;
  for (const auto& s : summaries) {
    if (!has_attempts(s)) continue;
    sum_r += cpp_rational(s.n_correct, s.n_attempts);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoParticipants, "no student attempted the exercise");
  return to_double(1 - sum_r / n);
}

double hint_ratio(std::span<const StudentExerciseSummary> summaries, Pooling pooling) {
  if (pooling == Pooling::Pooled) {
    std::int64_t hints = 0;
    std::int64_t attempts = 0;
    for (const auto& s : summaries) {
      hints += s.n_hints;
      attempts += s.n_attempts;
    }
    if (hints + attempts == 0) throw Error(ErrorCode::NoActivity, "no hints or attempts");
    return static_cast<double>(hints) / static_cast<double>(hints + attempts);
  }
  cpp_rational sum = 0;
  std::int64_t n = 0;
  for (const auto& s : summaries) {
    if (s.n_hints + s.n_attempts == 0) continue;
    sum += cpp_rational(s.n_hints, s.n_hints + s.n_attempts);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoActivity, "no hints or attempts");
  return to_double(sum / n);
}

double incorrect_ratio(std::span<const StudentExerciseSummary> summaries, Pooling pooling) {
  if (pooling == Pooling::Pooled) {
    std::int64_t wrong = 0;
    std::int64_t attempts = 0;
    for (const auto& s : summaries) {
      wrong += s.n_wrong;
      attempts += s.n_attempts;
    }
    if (attempts == 0) throw Error(ErrorCode::NoAttempts, "no attempts");
    return static_cast<double>(wrong) / static_cast<double>(attempts);
  }
  cpp_rational sum = 0;
  std::int64_t n = 0;
  for (const auto& s : summaries) {
    if (!has_attempts(s)) continue;
    sum += cpp_rational(s.n_wrong, s.n_attempts);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoAttempts, "no attempts");
  return to_double(sum / n);
}

Band quartile_band(double dl) {
  if (!(dl >= 0.0 && dl <= 1.0))
    throw Error(ErrorCode::OutOfRange, "dl outside [0, 1]: " + csv::format_double(dl));
  if (dl > 0.34) return Band::Q4;
  if (dl >= 0.21) return Band::Q3;
  if (dl >= 0.12) return Band::Q2;
  return Band::Q1;
}

MetricsTable compute_metrics(std::span<const StudentExerciseSummary> summaries,
                             const MetricsOptions& options) {
  std::map<std::string, std::vector<StudentExerciseSummary>> by_exercise;
  for (const auto& s : summaries) by_exercise[s.exercise_id].push_back(s);

  const Pooling other =
      options.pooling == Pooling::Pooled ? Pooling::PerStudentMean : Pooling::Pooled;

  MetricsTable table;
  for (const auto& [exercise, rows] : by_exercise) {
    ExerciseMetrics m;
    m.exercise_id = exercise;
    m.module_id = std::min_element(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
                    return x.module_id < y.module_id;
                  })->module_id;
    m.n_students = std::count_if(rows.begin(), rows.end(), has_attempts);

    try {
      m.hr = hint_ratio(rows, options.pooling);
      if (std::abs(*m.hr - hint_ratio(rows, other)) > options.divergence_warning)
        table.warnings.push_back(exercise + ": hr differs between pooling modes by more than " +
                                 csv::format_double(options.divergence_warning));
    } catch (const Error&) {
    }
    if (m.n_students > 0) {
      m.dl = difficulty_level(rows);
      m.band = quartile_band(*m.dl);
      m.ir = incorrect_ratio(rows, options.pooling);
      if (std::abs(*m.ir - incorrect_ratio(rows, other)) > options.divergence_warning)
        table.warnings.push_back(exercise + ": ir differs between pooling modes by more than " +
                                 csv::format_double(options.divergence_warning));
    } else {
      table.warnings.push_back(exercise + ": no attempts, dl and ir left blank");
    }
    table.rows.push_back(std::move(m));
  }
  return table;
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << csv::kSchemaComment << '\n';
  out << "exercise_id,module_id,n_students,dl,hr,ir,band\n";
  for (const auto& m : table.rows) {
    out << csv::join({m.exercise_id, m.module_id, std::to_string(m.n_students), optional_fixed(m.dl),
                      optional_fixed(m.hr), optional_fixed(m.ir),
                      m.band ? std::string(to_string(*m.band)) : ""})
        << '\n';
  }
  out << "# note: " << kDlNote << '\n';
}

nlohmann::ordered_json to_json(const MetricsTable& table) {
  nlohmann::ordered_json j;
  j["schema_version"] = csv::kSchemaVersion;
  j["note"] = kDlNote;
  j["exercises"] = nlohmann::ordered_json::array();
  auto value = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (!v) return nullptr;
    return csv::parse_double(csv::format_fixed(*v, 4));
  };
  for (const auto& m : table.rows) {
    nlohmann::ordered_json row;
    row["exercise_id"] = m.exercise_id;
    row["module_id"] = m.module_id;
    row["n_students"] = m.n_students;
    row["dl"] = value(m.dl);
    row["hr"] = value(m.hr);
    row["ir"] = value(m.ir);
    row["band"] = m.band ? nlohmann::ordered_json(to_string(*m.band)) : nlohmann::ordered_json();
    j["exercises"].push_back(std::move(row));
  }
  j["warnings"] = table.warnings;
  return j;
}

MetricsTable read_metrics(std::istream& in, bool json) {
  MetricsTable table;
  if (json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, std::string("metrics JSON: ") + e.what());
    }
    if (!j.contains("exercises") || !j["exercises"].is_array())
      throw Error(ErrorCode::SchemaMismatch, "metrics JSON lacks an 'exercises' array");
    auto opt = [](const nlohmann::json& v) -> std::optional<double> {
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    try {
      for (const auto& row : j["exercises"]) {
        ExerciseMetrics m;
        m.exercise_id = row.at("exercise_id").get<std::string>();
        m.module_id = row.at("module_id").get<std::string>();
        m.n_students = row.at("n_students").get<std::int64_t>();
        m.dl = opt(row.at("dl"));
        m.hr = opt(row.at("hr"));
        m.ir = opt(row.at("ir"));
        if (!row.at("band").is_null()) m.band = band_from_string(row.at("band").get<std::string>());
        table.rows.push_back(std::move(m));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, std::string("metrics JSON: ") + e.what());
    }
    return table;
  }
  const auto t = csv::read_table(in);
  const std::vector<std::string> expected{"exercise_id", "module_id", "n_students", "dl",
                                          "hr",          "ir",        "band"};
  if (t.header != expected) throw Error(ErrorCode::SchemaMismatch, "unexpected metrics header");
  for (const auto& f : t.rows) {
    ExerciseMetrics m;
    m.exercise_id = f[0];
    m.module_id = f[1];
    m.n_students = csv::parse_int(f[2]);
    m.dl = optional_parse(f[3]);
    m.hr = optional_parse(f[4]);
    m.ir = optional_parse(f[5]);
    if (!f[6].empty()) m.band = band_from_string(f[6]);
    table.rows.push_back(std::move(m));
  }
  return table;
}

}  // namespace exirt
