#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "exirt/log_ingest.hpp"

using namespace exirt;

namespace {

std::string with_header(const std::string& rows) {
  return std::string(kLogCsvHeader) + "\n" + rows;
}

ParsedLog parse_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_event_log(in, LogFormat::Csv);
}

InteractionEvent attempt(std::string s, std::string ex, bool ok, int sec = 0) {
  return {std::move(s), std::move(ex), "ch1", parse_timestamp("2020-10-05T14:11:02.000Z") + std::chrono::seconds{sec},
          EventKind::Attempt, ok};
}

InteractionEvent hint(std::string s, std::string ex, int sec = 0) {
  return {std::move(s), std::move(ex), "ch1", parse_timestamp("2020-10-05T14:11:02.000Z") + std::chrono::seconds{sec},
          EventKind::Hint, std::nullopt};
}

}  // namespace

TEST_CASE("csv attempt row maps field by field") {
  const auto log = parse_csv(with_header("s1,ex9,ch2,2020-10-05T14:11:02.000Z,attempt,true\n"));
  REQUIRE(log.issues.empty());
  REQUIRE(log.events.size() == 1);
  const auto& e = log.events[0];
  CHECK(e.student_id == "s1");
  CHECK(e.exercise_id == "ex9");
  CHECK(e.module_id == "ch2");
  CHECK(e.kind == EventKind::Attempt);
  CHECK(e.correct == std::optional<bool>(true));
  CHECK(format_timestamp(e.timestamp) == "2020-10-05T14:11:02.000Z");
}

TEST_CASE("hint row with empty correct has no correctness") {
  const auto log = parse_csv(with_header("s1,ex9,ch2,2020-10-05T14:11:02.000Z,hint,\n"));
  REQUIRE(log.events.size() == 1);
  CHECK(log.events[0].kind == EventKind::Hint);
  CHECK_FALSE(log.events[0].correct.has_value());
}

TEST_CASE("malformed rows are reported with their line numbers") {
  const auto log = parse_csv(with_header(
      "s1,ex9,ch2,2020-10-05T14:11:02.000Z,attempt,\n"
      "s1,ex9,ch2,2020-10-05T14:11:03.000Z,attempt,false\n"
      "s1,ex9,ch2,2020-10-05T14:11:04.000Z,submit,true\n"
      "s1,ex9,ch2,not-a-time,attempt,true\n"
      "s1,ex9,ch2,2020-10-05T14:11:05.000Z,hint,true\n"
      "s1,ex9\n"));
  CHECK(log.events.size() == 1);
  REQUIRE(log.issues.size() == 5);
  CHECK(log.issues[0].line == 2);
  CHECK(log.issues[0].code == ErrorCode::MalformedRow);
  CHECK(log.issues[1].line == 4);
  CHECK(log.issues[1].code == ErrorCode::UnknownKind);
  CHECK(log.issues[2].line == 5);
  CHECK(log.issues[3].line == 6);
  CHECK(log.issues[4].line == 7);
}

TEST_CASE("stream level failures") {
  SUBCASE("wrong header") {
    CHECK_THROWS_AS(parse_csv("student,exercise\n"), Error);
  }
  SUBCASE("not UTF-8") {
    std::string bad = with_header("s\xff,ex,ch,2020-10-05T14:11:02.000Z,hint,\n");
    try {
      parse_csv(bad);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnreadableStream);
    }
  }
  SUBCASE("missing file") {
    try {
      read_event_log("/nonexistent/log.csv");
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnreadableStream);
    }
  }
  SUBCASE("format from extension") {
    CHECK(infer_log_format("a/b.CSV") == LogFormat::Csv);
    CHECK(infer_log_format("x.jsonl") == LogFormat::Jsonl);
    CHECK_THROWS_AS(infer_log_format("x.txt"), Error);
  }
}

TEST_CASE("quoted csv fields and CRLF endings") {
  const auto log = parse_csv(with_header("\"s,1\",ex9,ch2,2020-10-05T14:11:02.5Z,attempt,false\r\n"));
  REQUIRE(log.events.size() == 1);
  CHECK(log.events[0].student_id == "s,1");
  CHECK(format_timestamp(log.events[0].timestamp) == "2020-10-05T14:11:02.500Z");
}

TEST_CASE("timestamps honour offsets") {
  CHECK(parse_timestamp("2020-10-05T16:11:02.000+02:00") == parse_timestamp("2020-10-05T14:11:02Z"));
  CHECK(parse_timestamp("2020-10-05T14:11:02.123456Z") == parse_timestamp("2020-10-05T14:11:02.123Z"));
  CHECK_THROWS_AS(parse_timestamp("2020-02-30T00:00:00Z"), Error);
  CHECK_THROWS_AS(parse_timestamp("2020-10-05T14:11:02"), Error);
}

TEST_CASE("jsonl rows parse like csv rows") {
  std::istringstream in(
      R"({"student_id":"s1","exercise_id":"ex9","module_id":"ch2","timestamp":"2020-10-05T14:11:02.000Z","kind":"attempt","correct":true})"
      "\n"
      R"({"student_id":"s1","exercise_id":"ex9","module_id":"ch2","timestamp":"2020-10-05T14:11:03.000Z","kind":"hint","correct":null})"
      "\n"
      R"({"student_id":"s1","exercise_id":"ex9","module_id":"ch2","timestamp":"2020-10-05T14:11:03.000Z","kind":"attempt"})"
      "\n{not json\n");
  const auto log = parse_event_log(in, LogFormat::Jsonl);
  REQUIRE(log.events.size() == 2);
  CHECK(log.events[1].kind == EventKind::Hint);
  REQUIRE(log.issues.size() == 2);
  CHECK(log.issues[0].line == 3);
  CHECK(log.issues[1].line == 4);
}

TEST_CASE("written logs parse back to the same events") {
  std::vector<InteractionEvent> events{attempt("s1", "ex1", true), hint("s1", "ex1", 1),
                                       attempt("s,2", "ex\"2", false, 2)};
  for (auto format : {LogFormat::Csv, LogFormat::Jsonl}) {
    std::stringstream io;
    write_event_log(io, events, format);
    const auto back = parse_event_log(io, format);
    CHECK(back.issues.empty());
    CHECK(back.events == events);
  }
}

TEST_CASE("aggregate counts attempts, corrects and hints") {
  std::vector<InteractionEvent> events{attempt("s1", "exA", true),  attempt("s1", "exA", false),
                                       attempt("s1", "exA", true),  attempt("s1", "exA", true),
                                       hint("s1", "exA"),           hint("s1", "exA"),
                                       attempt("s2", "exA", false), hint("s3", "exB")};
  const auto sums = aggregate(events);
  REQUIRE(sums.size() == 3);
  CHECK(sums[0].student_id == "s1");
  CHECK(sums[0].n_attempts == 4);
  CHECK(sums[0].n_correct == 3);
  CHECK(sums[0].n_wrong == 1);
  CHECK(sums[0].n_hints == 2);
  CHECK(sums[0].r() == std::optional<double>(0.75));
  CHECK(sums[1].student_id == "s2");
  CHECK(sums[1].r() == std::optional<double>(0.0));
  CHECK(sums[2].n_attempts == 0);
  CHECK(sums[2].n_hints == 1);
  CHECK_FALSE(sums[2].r().has_value());
  CHECK(aggregate(std::vector<InteractionEvent>{}).empty());
}

TEST_CASE("aggregation is order-insensitive and conserves attempts") {
  std::mt19937_64 rng(7);
  std::vector<InteractionEvent> events;
  std::size_t attempts = 0;
  for (int i = 0; i < 500; ++i) {
    const auto s = "s" + std::to_string(rng() % 20);
    const auto ex = "ex" + std::to_string(rng() % 7);
    if (rng() % 3 == 0) {
      events.push_back(hint(s, ex, i));
    } else {
      events.push_back(attempt(s, ex, rng() % 2 == 0, i));
      ++attempts;
    }
  }
  const auto reference = aggregate(events);
  std::int64_t total = 0;
  for (const auto& s : reference) {
    CHECK(s.n_correct + s.n_wrong == s.n_attempts);
    total += s.n_attempts;
  }
  CHECK(total == static_cast<std::int64_t>(attempts));
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(events.begin(), events.end(), rng);
    CHECK(aggregate(events) == reference);
  }
}

TEST_CASE("summaries survive a csv round trip bit for bit") {
  std::vector<InteractionEvent> events;
  for (int i = 0; i < 7; ++i) events.push_back(attempt("s1", "ex1", i % 3 == 0, i));
  events.push_back(hint("s2", "ex1"));
  const auto sums = aggregate(events);
  std::stringstream io;
  write_summaries_csv(io, sums);
  const auto back = read_summaries_csv(io);
  REQUIRE(back == sums);
  CHECK(back[0].r() == sums[0].r());
}

TEST_CASE("validate_log") {
  SUBCASE("clean log") {
    std::vector<InteractionEvent> events;
    for (int i = 0; i < 100; ++i)
      events.push_back(i % 4 ? attempt("s" + std::to_string(i % 10), "ex" + std::to_string(i % 5), true, i)
                             : hint("s" + std::to_string(i % 10), "ex" + std::to_string(i % 5), i));
    const auto report = validate_log(events);
    CHECK(report.n_events == 100);
    CHECK(report.n_students == 10);
    CHECK(report.n_exercises == 5);
    CHECK(report.n_hints == 25);
    CHECK(report.clean());
  }
  SUBCASE("hint carrying correct=true") {
    auto bad = hint("s1", "ex1");
    bad.correct = true;
    std::vector<InteractionEvent> events{attempt("s1", "ex1", true), bad};
    const auto report = validate_log(events);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].location == 1);
    CHECK(report.violations[0].kind == "HintWithCorrect");
  }
  SUBCASE("empty log warns") {
    const auto report = validate_log({});
    CHECK(report.n_events == 0);
    CHECK(report.clean());
    CHECK(report.warnings.size() == 1);
  }
  SUBCASE("parse issues become line violations") {
    std::vector<ParseIssue> issues{{3, ErrorCode::MalformedRow, "x"}};
    const auto report = validate_log({}, issues);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].where == Violation::Where::Line);
    CHECK(to_json(report)["violations"][0]["line"] == 3);
  }
  SUBCASE("exercise in two modules") {
    auto other = attempt("s2", "ex1", true);
    other.module_id = "ch9";
    std::vector<InteractionEvent> events{attempt("s1", "ex1", true), other};
    CHECK(validate_log(events).violations.size() == 1);
  }
}
