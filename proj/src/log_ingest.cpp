#include "exirt/log_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "exirt/csv.hpp"

namespace exirt {
namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates and values past U+10FFFF.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += extra + 1;
  }
  return true;
}

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw Error(ErrorCode::MalformedRow, "truncated timestamp");
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i])))
      throw Error(ErrorCode::MalformedRow, "bad timestamp '" + std::string(text) + "'");
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos)
    throw Error(ErrorCode::MalformedRow, "bad timestamp '" + std::string(text) + "'");
}

EventKind parse_kind(std::string_view text) {
  if (text == "attempt") return EventKind::Attempt;
  if (text == "hint") return EventKind::Hint;
  throw Error(ErrorCode::UnknownKind, "unknown kind '" + std::string(text) + "'");
}

std::string_view kind_name(EventKind kind) {
  return kind == EventKind::Attempt ? "attempt" : "hint";
}

void check_event_shape(const InteractionEvent& e) {
  if (e.student_id.empty()) throw Error(ErrorCode::MalformedRow, "empty student_id");
  if (e.exercise_id.empty()) throw Error(ErrorCode::MalformedRow, "empty exercise_id");
  if (e.kind == EventKind::Attempt && !e.correct)
    throw Error(ErrorCode::MalformedRow, "attempt without a correct value");
  if (e.kind == EventKind::Hint && e.correct)
    throw Error(ErrorCode::MalformedRow, "hint carrying a correct value");
}

InteractionEvent event_from_csv(const std::vector<std::string>& f) {
  if (f.size() != 6)
    throw Error(ErrorCode::MalformedRow, "expected 6 fields, got " + std::to_string(f.size()));
  InteractionEvent e;
  e.student_id = f[0];
  e.exercise_id = f[1];
  e.module_id = f[2];
  e.timestamp = parse_timestamp(f[3]);
  e.kind = parse_kind(f[4]);
  if (f[5] == "true") {
    e.correct = true;
  } else if (f[5] == "false") {
    e.correct = false;
  } else if (!f[5].empty()) {
    throw Error(ErrorCode::MalformedRow, "correct must be true, false or empty, got '" + f[5] + "'");
  }
  check_event_shape(e);
  return e;
}

InteractionEvent event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedRow, "line is not a JSON object");
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw Error(ErrorCode::MalformedRow, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
  };
  InteractionEvent e;
  e.student_id = str("student_id");
  e.exercise_id = str("exercise_id");
  e.module_id = str("module_id");
  e.timestamp = parse_timestamp(str("timestamp"));
  e.kind = parse_kind(str("kind"));
  if (auto it = j.find("correct"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw Error(ErrorCode::MalformedRow, "correct must be a boolean or null");
    e.correct = it->get<bool>();
  }
  check_event_shape(e);
  return e;
}

}  // namespace

LogFormat infer_log_format(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".csv") return LogFormat::Csv;
  if (ext == ".jsonl" || ext == ".ndjson") return LogFormat::Jsonl;
  throw Error(ErrorCode::UnreadableStream, "cannot infer log format from '" + path.string() + "'");
}

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  const int year = parse_digits(text, 0, 4);
  expect_char(text, 4, "-");
  const int month = parse_digits(text, 5, 2);
  expect_char(text, 7, "-");
  const int day = parse_digits(text, 8, 2);
  expect_char(text, 10, "Tt ");
  const int hour = parse_digits(text, 11, 2);
  expect_char(text, 13, ":");
  const int minute = parse_digits(text, 14, 2);
  expect_char(text, 16, ":");
  const int second = parse_digits(text, 17, 2);

  std::size_t pos = 19;
  int millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits < 3) millis = millis * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw Error(ErrorCode::MalformedRow, "empty fractional seconds");
    for (int d = digits; d < 3; ++d) millis *= 10;
  }

  int offset_minutes = 0;
  expect_char(text, pos, "Zz+-");
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else {
    const int sign = text[pos] == '-' ? -1 : 1;
    const int oh = parse_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ":");
    const int om = parse_digits(text, pos + 4, 2);
    if (oh > 23 || om > 59) throw Error(ErrorCode::MalformedRow, "bad UTC offset");
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  }
  if (pos != text.size())
    throw Error(ErrorCode::MalformedRow, "trailing characters in timestamp '" + std::string(text) + "'");

  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60)
    throw Error(ErrorCode::MalformedRow, "invalid instant '" + std::string(text) + "'");
  return sys_days{ymd} + hours{hour} + std::chrono::minutes{minute - offset_minutes} +
         seconds{second} + milliseconds{millis};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  auto rest = ts - day_point;
  const auto h = duration_cast<hours>(rest);
  rest -= h;
  const auto m = duration_cast<minutes>(rest);
  rest -= m;
  const auto s = duration_cast<seconds>(rest);
  rest -= s;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(h.count()), static_cast<int>(m.count()),
                static_cast<int>(s.count()), static_cast<int>(rest.count()));
  return buf;
}

ParsedLog parse_event_log(std::istream& in, LogFormat format) {
  if (!in) throw Error(ErrorCode::UnreadableStream, "stream is not readable");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error(ErrorCode::UnreadableStream, "read failure");
  if (!valid_utf8(bytes)) throw Error(ErrorCode::UnreadableStream, "stream is not valid UTF-8");

  ParsedLog out;
  std::istringstream lines(bytes);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = format == LogFormat::Jsonl;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (format == LogFormat::Csv && line.front() == '#') continue;
    if (!header_seen) {
      if (line != kLogCsvHeader)
        throw Error(ErrorCode::UnreadableStream,
                    "CSV header must be '" + std::string(kLogCsvHeader) + "', got '" + line + "'");
      header_seen = true;
      continue;
    }
    try {
      if (format == LogFormat::Csv) {
        out.events.push_back(event_from_csv(csv::split_line(line)));
      } else {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
          throw Error(ErrorCode::MalformedRow, std::string("invalid JSON: ") + e.what());
        }
        out.events.push_back(event_from_json(j));
      }
    } catch (const Error& e) {
      out.issues.push_back({line_no, e.code(), e.what()});
    }
  }
  if (!header_seen) throw Error(ErrorCode::UnreadableStream, "missing CSV header");
  return out;
}

ParsedLog read_event_log(const std::filesystem::path& path) {
  return read_event_log(path, infer_log_format(path));
}

ParsedLog read_event_log(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open '" + path.string() + "'");
  return parse_event_log(in, format);
}

void write_event_log(std::ostream& out, std::span<const InteractionEvent> events,
                     LogFormat format) {
  if (format == LogFormat::Csv) {
    out << kLogCsvHeader << '\n';
    for (const auto& e : events) {
      out << csv::join({e.student_id, e.exercise_id, e.module_id, format_timestamp(e.timestamp),
                        std::string(kind_name(e.kind)),
                        e.correct ? (*e.correct ? "true" : "false") : ""})
          << '\n';
    }
    return;
  }
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["student_id"] = e.student_id;
    j["exercise_id"] = e.exercise_id;
    j["module_id"] = e.module_id;
    j["timestamp"] = format_timestamp(e.timestamp);
    j["kind"] = kind_name(e.kind);
    if (e.correct) {
      j["correct"] = *e.correct;
    } else {
      j["correct"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

std::optional<double> StudentExerciseSummary::r() const {
  if (n_attempts <= 0) return std::nullopt;
  return static_cast<double>(n_correct) / static_cast<double>(n_attempts);
}

std::vector<StudentExerciseSummary> aggregate(std::span<const InteractionEvent> events) {
  std::map<std::pair<std::string, std::string>, StudentExerciseSummary> by_pair;
  for (const auto& e : events) {
    auto [it, inserted] = by_pair.try_emplace({e.student_id, e.exercise_id});
    auto& s = it->second;
    if (inserted) {
      s.student_id = e.student_id;
      s.exercise_id = e.exercise_id;
      s.module_id = e.module_id;
    } else if (e.module_id < s.module_id) {
      s.module_id = e.module_id;
    }
    if (e.kind == EventKind::Hint) {
      ++s.n_hints;
    } else {
      ++s.n_attempts;
      if (e.correct.value_or(false)) {
        ++s.n_correct;
      } else {
        ++s.n_wrong;
      }
    }
  }
  std::vector<StudentExerciseSummary> out;
  out.reserve(by_pair.size());
  for (auto& [key, s] : by_pair) out.push_back(std::move(s));
  return out;
}

void write_summaries_csv(std::ostream& out, std::span<const StudentExerciseSummary> rows) {
  out << csv::kSchemaComment << '\n';
  out << "student_id,exercise_id,module_id,n_attempts,n_correct,n_wrong,n_hints,r\n";
  for (const auto& s : rows) {
    const auto r = s.r();
    out << csv::join({s.student_id, s.exercise_id, s.module_id, std::to_string(s.n_attempts),
                      std::to_string(s.n_correct), std::to_string(s.n_wrong),
                      std::to_string(s.n_hints), r ? csv::format_double(*r) : ""})
        << '\n';
  }
}

std::vector<StudentExerciseSummary> read_summaries_csv(std::istream& in) {
  const auto table = csv::read_table(in);
  const std::vector<std::string> expected{"student_id", "exercise_id", "module_id", "n_attempts",
                                          "n_correct",  "n_wrong",     "n_hints",   "r"};
  if (table.header != expected) throw Error(ErrorCode::SchemaMismatch, "unexpected summaries header");
  std::vector<StudentExerciseSummary> out;
  for (const auto& f : table.rows) {
    StudentExerciseSummary s{f[0],
                             f[1],
                             f[2],
                             csv::parse_int(f[3]),
                             csv::parse_int(f[4]),
                             csv::parse_int(f[5]),
                             csv::parse_int(f[6])};
    if (s.n_correct + s.n_wrong != s.n_attempts)
      throw Error(ErrorCode::MalformedRow, "n_correct + n_wrong != n_attempts for " + s.student_id);
    out.push_back(std::move(s));
  }
  return out;
}

ValidationReport validate_log(std::span<const InteractionEvent> events,
                              std::span<const ParseIssue> parse_issues) {
  ValidationReport report;
  report.n_events = events.size();
  for (const auto& issue : parse_issues) {
    report.violations.push_back(
        {Violation::Where::Line, issue.line, std::string(to_string(issue.code)), issue.reason});
  }

  std::set<std::string> students;
  std::map<std::string, std::string> module_of;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    auto flag = [&](std::string kind, std::string reason) {
      report.violations.push_back({Violation::Where::EventIndex, i, std::move(kind), std::move(reason)});
    };
    if (e.student_id.empty()) flag("EmptyStudentId", "student_id is empty");
    if (e.exercise_id.empty()) flag("EmptyExerciseId", "exercise_id is empty");
    if (e.kind == EventKind::Hint && e.correct) flag("HintWithCorrect", "hint event carries a correct value");
    if (e.kind == EventKind::Attempt && !e.correct) flag("AttemptWithoutCorrect", "attempt event lacks a correct value");
    if (e.kind == EventKind::Attempt) {
      ++report.n_attempts;
    } else {
      ++report.n_hints;
    }
    students.insert(e.student_id);
    auto [it, inserted] = module_of.try_emplace(e.exercise_id, e.module_id);
    if (!inserted && it->second != e.module_id) {
      flag("InconsistentModule", "exercise '" + e.exercise_id + "' seen in modules '" + it->second +
                                     "' and '" + e.module_id + "'");
    }
  }
  report.n_students = students.size();
  report.n_exercises = module_of.size();
  if (events.empty()) report.warnings.push_back("log contains no events");
  return report;
}

nlohmann::ordered_json to_json(const ValidationReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = csv::kSchemaVersion;
  j["events"] = report.n_events;
  j["attempts"] = report.n_attempts;
  j["hints"] = report.n_hints;
  j["students"] = report.n_students;
  j["exercises"] = report.n_exercises;
  j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : report.violations) {
    nlohmann::ordered_json item;
    item[v.where == Violation::Where::Line ? "line" : "event_index"] = v.location;
    item["kind"] = v.kind;
    item["reason"] = v.reason;
    j["violations"].push_back(std::move(item));
  }
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace exirt
