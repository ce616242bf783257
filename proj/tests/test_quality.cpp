#include <doctest.h>

#include <random>
#include <sstream>

#include "exirt/errors.hpp"
#include "exirt/quality.hpp"

using namespace exirt;

namespace {

struct PrintedRow {
  const char* id;
  double b;
  const char* difficulty;
  double a;
  const char* discrimination;
};

// Poor-exercise table as printed: difficulty "b-Label", discrimination "a-Label".
const PrintedRow kPoorTable[] = {
    {"AlistRemovePROp", 6.72, "Hard", -0.4715, "None"},
    {"CompareTF-MCQ5p", -2.24, "Easy", 0.1614, "Very Low"},
    {"SelSortPROp", -34.98, "Easy", 0.0496, "Very Low"},
    {"BTSummaryQuestionsp", 2.20, "Hard", -0.0303, "None"},
    {"BSTremovePRO", -0.20, "Easy", 0.3297, "Very Low"},
    {"binarySearchPRO", 8.02, "Hard", -0.3379, "None"},
};

ExerciseMetrics metrics_row(std::string id, std::optional<double> dl) {
  ExerciseMetrics m;
  m.exercise_id = std::move(id);
  m.module_id = "ch1";
  m.n_students = 3;
  m.dl = dl;
  m.hr = 0.1;
  m.ir = 0.2;
  return m;
}

}  // namespace

TEST_CASE("discrimination labels") {
  const auto neg = discrimination_label(-0.4715);
  CHECK(neg.label == DiscriminationLabel::None);
  CHECK(neg.negative);
  CHECK(discrimination_label(0.0496).label == DiscriminationLabel::VeryLow);
  CHECK_FALSE(discrimination_label(0.0496).negative);
  CHECK(discrimination_label(1.70).label == DiscriminationLabel::VeryHigh);
  CHECK(discrimination_label(0.0).label == DiscriminationLabel::None);
  CHECK_FALSE(discrimination_label(0.0).negative);
  CHECK(discrimination_label(0.005).label == DiscriminationLabel::None);
  CHECK(discrimination_label(0.01).label == DiscriminationLabel::VeryLow);
  CHECK(discrimination_label(0.345).label == DiscriminationLabel::VeryLow);
  CHECK(discrimination_label(0.35).label == DiscriminationLabel::Low);
  CHECK(discrimination_label(0.65).label == DiscriminationLabel::Moderate);
  CHECK(discrimination_label(1.345).label == DiscriminationLabel::Moderate);
  CHECK(discrimination_label(1.35).label == DiscriminationLabel::High);
  CHECK(discrimination_label(1.699).label == DiscriminationLabel::High);
  CHECK(discrimination_label(42.0).label == DiscriminationLabel::VeryHigh);
}

TEST_CASE("difficulty labels") {
  CHECK(difficulty_label(6.72) == DifficultyLabel::Hard);
  CHECK(difficulty_label(-2.24) == DifficultyLabel::Easy);
  CHECK(difficulty_label(0.0) == DifficultyLabel::Medium);
  CHECK(difficulty_label(1.0) == DifficultyLabel::Medium);
  CHECK(difficulty_label(-1.0) == DifficultyLabel::Medium);
  CHECK(difficulty_label(-0.20) == DifficultyLabel::Medium);
  CHECK(difficulty_label(-0.20, true) == DifficultyLabel::Easy);
  CHECK(difficulty_label(0.0, true) == DifficultyLabel::Medium);
}

TEST_CASE("labels are monotone") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-3.0, 4.0);
  for (int i = 0; i < 2000; ++i) {
    double x = u(rng), y = u(rng);
    if (x > y) std::swap(x, y);
    CHECK(static_cast<int>(discrimination_label(x).label) <= static_cast<int>(discrimination_label(y).label));
    for (bool compat : {false, true}) {
      // ranks Easy < Medium < Hard
      CHECK(static_cast<int>(difficulty_label(x, compat)) <= static_cast<int>(difficulty_label(y, compat)));
    }
  }
}

TEST_CASE("verdicts") {
  const auto bt = classify_quality({"BTSummaryQuestionsp", -0.0303, 2.20});
  CHECK(bt.verdict == Verdict::Poor);
  CHECK(bt.reasons == std::vector<PoorReason>{PoorReason::NegativeDiscrimination});

  const auto bst = classify_quality({"BSTremovePRO", 0.3297, -0.20});
  CHECK(bst.verdict == Verdict::Good);
  CHECK(bst.difficulty_label == DifficultyLabel::Medium);
  const auto bst_compat = classify_quality({"BSTremovePRO", 0.3297, -0.20}, {true});
  CHECK(bst_compat.verdict == Verdict::Poor);
  CHECK(bst_compat.reasons == std::vector<PoorReason>{PoorReason::LowDiscriminationEasyItem});

  const auto good = classify_quality({"x", 1.5, 0.5});
  CHECK(good.verdict == Verdict::Good);
  CHECK(good.reasons.empty());
  CHECK(good.discrimination_label == DiscriminationLabel::High);

  ItemParameters stuck{"y", 1.0, 50.0};
  stuck.degenerate = true;
  CHECK(classify_quality(stuck).reasons == std::vector<PoorReason>{PoorReason::Degenerate});
}

TEST_CASE("printed poor-exercise table") {
  int diverging = 0;
  for (const auto& row : kPoorTable) {
    const ItemParameters p{row.id, row.a, row.b};
    const auto compat = classify_quality(p, {true});
    CHECK(to_string(compat.discrimination_label) == row.discrimination);
    CHECK(to_string(compat.difficulty_label) == row.difficulty);
    CHECK(compat.verdict == Verdict::Poor);
    const auto plain = classify_quality(p);
    if (to_string(plain.difficulty_label) != row.difficulty || plain.verdict != Verdict::Poor) {
      ++diverging;
      CHECK(std::string(row.id) == "BSTremovePRO");
    }
  }
  CHECK(diverging == 1);
}

TEST_CASE("verdict invariants over random parameters") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ua(-2.0, 3.0), ub(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    ItemParameters p{"x", ua(rng), ub(rng)};
    p.degenerate = rng() % 10 == 0;
    const auto v = classify_quality(p, {rng() % 2 == 0});
    CHECK((v.verdict == Verdict::Poor) == !v.reasons.empty());
    CHECK(v.negative_discrimination == (p.a < 0));
    if (v.negative_discrimination) CHECK(v.discrimination_label == DiscriminationLabel::None);
  }
}

TEST_CASE("report ordering and joins") {
  std::vector<ItemParameters> params{{"q", 1.0, 0.0}, {"p", -0.2, 2.0}, {"r", 1.0, 0.7}, {"s", 0.8, 0.2}};
  std::vector<QualityVerdict> verdicts;
  for (const auto& p : params) verdicts.push_back(classify_quality(p));
  std::vector<ExerciseMetrics> metrics{metrics_row("q", 0.1), metrics_row("p", 0.5), metrics_row("r", 0.1),
                                       metrics_row("zz", 0.3)};
  const auto report = quality_report(verdicts, metrics, params);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.rows[0].params.item_id == "p");
  CHECK(report.rows[1].params.item_id == "q");
  CHECK(report.rows[2].params.item_id == "r");
  CHECK(report.rows[3].params.item_id == "s");
  CHECK_FALSE(report.rows[3].metrics.has_value());
  CHECK(report.rows[2].difficult_at_average);
  CHECK(report.n_poor == 1);
  CHECK(report.poor_by_reason[0] == 1);
  CHECK(report.warnings.size() == 2);

  std::stringstream io;
  write_quality_csv(io, report);
  const auto text = io.str();
  CHECK(text.find("p,ch1,3,0.5000,0.1000,0.2000,,-0.2,2,None,true,Hard,false,Poor,NegativeDiscrimination") !=
        std::string::npos);
  CHECK(text.find("\ns,,,,,,,0.8,0.2,Moderate,false,Medium,true,Good,\n") != std::string::npos);
  CHECK(text.find("# table2_compat: false") != std::string::npos);

  const auto j = to_json(report);
  CHECK(j["summary"]["poor"] == 1);
  CHECK(j["summary"]["poor_by_reason"]["NegativeDiscrimination"] == 1);
  CHECK(j["items"][3]["dl"].is_null());
}

TEST_CASE("mismatched verdicts and parameters") {
  std::vector<ItemParameters> params{{"a", 1.0, 0.0}};
  std::vector<QualityVerdict> verdicts{classify_quality({"b", 1.0, 0.0})};
  try {
    quality_report(verdicts, {}, params);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IdMismatch);
  }
  CHECK_THROWS_AS(quality_report({}, {}, params), Error);
}
