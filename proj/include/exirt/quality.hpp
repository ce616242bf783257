#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "exirt/irt_model.hpp"
#include "exirt/metrics.hpp"

namespace exirt {

enum class DiscriminationLabel { None, VeryLow, Low, Moderate, High, VeryHigh };
enum class DifficultyLabel { Easy, Medium, Hard };
enum class Verdict { Good, Poor };
enum class PoorReason { NegativeDiscrimination, LowDiscriminationEasyItem, Degenerate };

std::string_view to_string(DiscriminationLabel label);
std::string_view to_string(DifficultyLabel label);
std::string_view to_string(Verdict verdict);
std::string_view to_string(PoorReason reason);

struct DiscriminationResult {
  DiscriminationLabel label = DiscriminationLabel::None;
  bool negative = false;
};

/// Contiguous half-open bands on the printed lower edges:
/// (-inf, 0.01) None, [0.01, 0.35) Very Low, [0.35, 0.65) Low,
/// [0.65, 1.35) Moderate, [1.35, 1.70) High, [1.70, inf) Very High.
DiscriminationResult discrimination_label(double a);

/// b > 1 Hard, b < -1 Easy, otherwise Medium. In table2_compat mode the
/// Easy edge moves to b < 0, which is how the published poor-item table
/// labels b = -0.20.
DifficultyLabel difficulty_label(double b, bool table2_compat = false);

struct ClassifierOptions {
  bool table2_compat = false;
};

struct QualityVerdict {
  std::string item_id;
  DiscriminationLabel discrimination_label = DiscriminationLabel::None;
  bool negative_discrimination = false;
  DifficultyLabel difficulty_label = DifficultyLabel::Medium;
  Verdict verdict = Verdict::Good;
  std::vector<PoorReason> reasons;
};

QualityVerdict classify_quality(const ItemParameters& params, const ClassifierOptions& options = {});

struct QualityRow {
  ItemParameters params;
  QualityVerdict verdict;
  std::optional<ExerciseMetrics> metrics;
  bool difficult_at_average = false;
};

struct QualityReport {
  std::vector<QualityRow> rows;  // dl descending, then item_id; rows without dl last
  std::array<std::size_t, 3> poor_by_reason{};
  std::size_t n_poor = 0;
  std::vector<std::string> warnings;
  bool table2_compat = false;
};

/// Joins verdicts with their parameters (same ids, same order required,
/// else IdMismatch) and with metrics where available.
QualityReport quality_report(std::span<const QualityVerdict> verdicts,
                             std::span<const ExerciseMetrics> metrics,
                             std::span<const ItemParameters> params);

void write_quality_csv(std::ostream& out, const QualityReport& report);
nlohmann::ordered_json to_json(const QualityReport& report);

}  // namespace exirt
