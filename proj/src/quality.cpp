#include "exirt/quality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "exirt/csv.hpp"
#include "exirt/curves.hpp"
#include "exirt/errors.hpp"

namespace exirt {

std::string_view to_string(DiscriminationLabel label) {
  switch (label) {
    case DiscriminationLabel::None: return "None";
    case DiscriminationLabel::VeryLow: return "Very Low";
    case DiscriminationLabel::Low: return "Low";
    case DiscriminationLabel::Moderate: return "Moderate";
    case DiscriminationLabel::High: return "High";
    case DiscriminationLabel::VeryHigh: return "Very High";
  }
  return "";
}

std::string_view to_string(DifficultyLabel label) {
  switch (label) {
    case DifficultyLabel::Easy: return "Easy";
    case DifficultyLabel::Medium: return "Medium";
    case DifficultyLabel::Hard: return "Hard";
  }
  return "";
}

std::string_view to_string(Verdict verdict) { return verdict == Verdict::Good ? "Good" : "Poor"; }

std::string_view to_string(PoorReason reason) {
  switch (reason) {
    case PoorReason::NegativeDiscrimination: return "NegativeDiscrimination";
    case PoorReason::LowDiscriminationEasyItem: return "LowDiscriminationEasyItem";
    case PoorReason::Degenerate: return "Degenerate";
  }
  return "";
}

DiscriminationResult discrimination_label(double a) {
  DiscriminationResult r;
  r.negative = a < 0.0;
  if (a < 0.01) {
    r.label = DiscriminationLabel::None;
  } else if (a < 0.35) {
    r.label = DiscriminationLabel::VeryLow;
  } else if (a < 0.65) {
    r.label = DiscriminationLabel::Low;
  } else if (a < 1.35) {
    r.label = DiscriminationLabel::Moderate;
  } else if (a < 1.70) {
    r.label = DiscriminationLabel::High;
  } else {
    r.label = DiscriminationLabel::VeryHigh;
  }
  return r;
}

DifficultyLabel difficulty_label(double b, bool table2_compat) {
  if (b > 1.0) return DifficultyLabel::Hard;
  if (b < (table2_compat ? 0.0 : -1.0)) return DifficultyLabel::Easy;
  return DifficultyLabel::Medium;
}

QualityVerdict classify_quality(const ItemParameters& params, const ClassifierOptions& options) {
  QualityVerdict v;
  v.item_id = params.item_id;
  const auto disc = discrimination_label(params.a);
  v.discrimination_label = disc.label;
  v.negative_discrimination = disc.negative;
  v.difficulty_label = difficulty_label(params.b, options.table2_compat);

  if (disc.negative) v.reasons.push_back(PoorReason::NegativeDiscrimination);
  const bool weak = disc.label == DiscriminationLabel::None || disc.label == DiscriminationLabel::VeryLow;
  if (weak && !disc.negative && v.difficulty_label == DifficultyLabel::Easy)
    v.reasons.push_back(PoorReason::LowDiscriminationEasyItem);
  if (params.degenerate) v.reasons.push_back(PoorReason::Degenerate);
  v.verdict = v.reasons.empty() ? Verdict::Good : Verdict::Poor;
  return v;
}

QualityReport quality_report(std::span<const QualityVerdict> verdicts,
                             std::span<const ExerciseMetrics> metrics,
                             std::span<const ItemParameters> params) {
  if (verdicts.size() != params.size())
    throw Error(ErrorCode::IdMismatch, "verdict and parameter counts differ");
  std::map<std::string, const ExerciseMetrics*> metrics_of;
  for (const auto& m : metrics) metrics_of[m.exercise_id] = &m;

  QualityReport report;
  std::map<std::string, bool> used;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].item_id != params[i].item_id)
      throw Error(ErrorCode::IdMismatch,
                  "verdict '" + verdicts[i].item_id + "' paired with parameters '" + params[i].item_id + "'");
    QualityRow row{params[i], verdicts[i], std::nullopt, difficult_at_average(params[i])};
    if (auto it = metrics_of.find(params[i].item_id); it != metrics_of.end()) {
      row.metrics = *it->second;
      used[it->first] = true;
    } else {
      report.warnings.push_back(params[i].item_id + ": no metrics row, metric columns left blank");
    }
    for (auto reason : verdicts[i].reasons) ++report.poor_by_reason[static_cast<std::size_t>(reason)];
    if (verdicts[i].verdict == Verdict::Poor) ++report.n_poor;
    report.rows.push_back(std::move(row));
  }
  for (const auto& m : metrics) {
    if (!used.count(m.exercise_id))
      report.warnings.push_back(m.exercise_id + ": metrics row without fitted parameters, not reported");
  }

  std::sort(report.rows.begin(), report.rows.end(), [](const QualityRow& x, const QualityRow& y) {
    const bool hx = x.metrics && x.metrics->dl;
    const bool hy = y.metrics && y.metrics->dl;
    if (hx != hy) return hx;
    if (hx && *x.metrics->dl != *y.metrics->dl) return *x.metrics->dl > *y.metrics->dl;
    return x.params.item_id < y.params.item_id;
  });
  return report;
}

namespace {

std::string reasons_field(const QualityVerdict& v) {
  std::string out;
  for (auto r : v.reasons) {
    if (!out.empty()) out += ';';
    out += to_string(r);
  }
  return out;
}

std::string opt4(const std::optional<double>& v) { return v ? csv::format_fixed(*v, 4) : ""; }

}  // namespace

void write_quality_csv(std::ostream& out, const QualityReport& report) {
  out << csv::kSchemaComment << '\n';
  out << "item_id,module_id,n_students,dl,hr,ir,band,a,b,discrimination_label,"
         "negative_discrimination,difficulty_label,difficult_at_average,verdict,reasons\n";
  for (const auto& row : report.rows) {
    const auto& m = row.metrics;
    out << csv::join({row.params.item_id, m ? m->module_id : "", m ? std::to_string(m->n_students) : "",
                      m ? opt4(m->dl) : "", m ? opt4(m->hr) : "", m ? opt4(m->ir) : "",
                      m && m->band ? std::string(to_string(*m->band)) : "",
                      csv::format_double(row.params.a), csv::format_double(row.params.b),
                      std::string(to_string(row.verdict.discrimination_label)),
                      row.verdict.negative_discrimination ? "true" : "false",
                      std::string(to_string(row.verdict.difficulty_label)),
                      row.difficult_at_average ? "true" : "false",
                      std::string(to_string(row.verdict.verdict)), reasons_field(row.verdict)})
        << '\n';
  }
  out << "# note: " << kDlNote << '\n';
  out << "# table2_compat: " << (report.table2_compat ? "true" : "false") << '\n';
}

nlohmann::ordered_json to_json(const QualityReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = csv::kSchemaVersion;
  j["note"] = kDlNote;
  j["table2_compat"] = report.table2_compat;
  nlohmann::ordered_json summary;
  summary["items"] = report.rows.size();
  summary["poor"] = report.n_poor;
  nlohmann::ordered_json by_reason;
  for (std::size_t r = 0; r < report.poor_by_reason.size(); ++r)
    by_reason[std::string(to_string(static_cast<PoorReason>(r)))] = report.poor_by_reason[r];
  summary["poor_by_reason"] = std::move(by_reason);
  j["summary"] = std::move(summary);
  j["items"] = nlohmann::ordered_json::array();
  auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (!v) return nullptr;
    return csv::parse_double(csv::format_fixed(*v, 4));
  };
  for (const auto& row : report.rows) {
    nlohmann::ordered_json item;
    const auto& m = row.metrics;
    item["item_id"] = row.params.item_id;
    item["module_id"] = m ? nlohmann::ordered_json(m->module_id) : nlohmann::ordered_json();
    item["n_students"] = m ? nlohmann::ordered_json(m->n_students) : nlohmann::ordered_json();
    item["dl"] = m ? opt(m->dl) : nullptr;
    item["hr"] = m ? opt(m->hr) : nullptr;
    item["ir"] = m ? opt(m->ir) : nullptr;
    item["band"] = m && m->band ? nlohmann::ordered_json(to_string(*m->band)) : nlohmann::ordered_json();
    item["a"] = row.params.a;
    item["b"] = row.params.b;
    item["discrimination_label"] = to_string(row.verdict.discrimination_label);
    item["negative_discrimination"] = row.verdict.negative_discrimination;
    item["difficulty_label"] = to_string(row.verdict.difficulty_label);
    item["difficult_at_average"] = row.difficult_at_average;
    item["verdict"] = to_string(row.verdict.verdict);
    item["reasons"] = nlohmann::ordered_json::array();
    for (auto r : row.verdict.reasons) item["reasons"].push_back(to_string(r));
    j["items"].push_back(std::move(item));
  }
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace exirt
