#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "exirt/errors.hpp"

namespace exirt {

enum class EventKind { Attempt, Hint };

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// One logged student action on one exercise. `correct` is present iff the
/// action is an attempt.
struct InteractionEvent {
  std::string student_id;
  std::string exercise_id;
  std::string module_id;
  Timestamp timestamp{};
  EventKind kind = EventKind::Attempt;
  std::optional<bool> correct;

  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

enum class LogFormat { Csv, Jsonl };

/// `.csv` maps to Csv, `.jsonl`/`.ndjson` to Jsonl.
LogFormat infer_log_format(const std::filesystem::path& path);

/// RFC 3339 instant, e.g. `2020-10-05T14:11:02.000Z` or with a `+02:00`
/// offset. Sub-millisecond digits are truncated.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

struct ParseIssue {
  std::size_t line = 0;
  ErrorCode code = ErrorCode::MalformedRow;
  std::string reason;
};

struct ParsedLog {
  std::vector<InteractionEvent> events;
  std::vector<ParseIssue> issues;
};

/// Parses a whole log. Rows that fail are reported in `issues` with their
/// 1-based line number; the remaining rows are returned in stream order.
/// Throws UnreadableStream if the bytes are not UTF-8 or the CSV header is
/// wrong.
ParsedLog parse_event_log(std::istream& in, LogFormat format);
ParsedLog read_event_log(const std::filesystem::path& path);
ParsedLog read_event_log(const std::filesystem::path& path, LogFormat format);

void write_event_log(std::ostream& out, std::span<const InteractionEvent> events,
                     LogFormat format);

inline constexpr std::string_view kLogCsvHeader =
    "student_id,exercise_id,module_id,timestamp,kind,correct";

/// Per (student, exercise) tallies. n_correct + n_wrong == n_attempts.
struct StudentExerciseSummary {
  std::string student_id;
  std::string exercise_id;
  std::string module_id;
  std::int64_t n_attempts = 0;
  std::int64_t n_correct = 0;
  std::int64_t n_wrong = 0;
  std::int64_t n_hints = 0;

  /// Correct-attempt ratio; empty when there were no attempts.
  std::optional<double> r() const;

  friend bool operator==(const StudentExerciseSummary&,
                         const StudentExerciseSummary&) = default;
};

/// One summary per (student, exercise), sorted by that key. When events of
/// one pair disagree on module_id the lexicographically smallest wins so the
/// result stays order-insensitive; validate_log reports the disagreement.
std::vector<StudentExerciseSummary> aggregate(std::span<const InteractionEvent> events);

void write_summaries_csv(std::ostream& out, std::span<const StudentExerciseSummary> rows);
std::vector<StudentExerciseSummary> read_summaries_csv(std::istream& in);

struct Violation {
  enum class Where { Line, EventIndex };
  Where where = Where::EventIndex;
  std::size_t location = 0;
  std::string kind;
  std::string reason;
};

struct ValidationReport {
  std::size_t n_events = 0;
  std::size_t n_attempts = 0;
  std::size_t n_hints = 0;
  std::size_t n_students = 0;
  std::size_t n_exercises = 0;
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool clean() const { return violations.empty(); }
};

/// Checks event invariants; parse issues, if given, are folded in as
/// line-located violations.
ValidationReport validate_log(std::span<const InteractionEvent> events,
                              std::span<const ParseIssue> parse_issues = {});

nlohmann::ordered_json to_json(const ValidationReport& report);

}  // namespace exirt
