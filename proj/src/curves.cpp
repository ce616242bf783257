#include "exirt/curves.hpp"

#include <cmath>
#include <ostream>

#include "exirt/csv.hpp"
#include "exirt/errors.hpp"

namespace exirt {

Eigen::VectorXd theta_grid(double lo, double hi, double step) {
  if (!(step > 0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::InvalidSpec, "grid needs finite lo <= hi and a positive step");
  const auto intervals = static_cast<Eigen::Index>(std::llround((hi - lo) / step));
  Eigen::VectorXd grid(intervals + 1);
  for (Eigen::Index k = 0; k <= intervals; ++k)
    grid(k) = intervals == 0 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(intervals);
  grid(intervals) = hi;
  return grid;
}

CurveTable sample_curves(std::span<const ItemParameters> items, const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw Error(ErrorCode::EmptyGrid, "curve grid is empty");
  if (!grid.allFinite()) throw Error(ErrorCode::InvalidSpec, "curve grid is not finite");
  for (Eigen::Index k = 1; k < grid.size(); ++k) {
    if (!(grid(k) > grid(k - 1))) throw Error(ErrorCode::InvalidSpec, "curve grid is not ascending");
  }
  CurveTable t;
  t.theta = grid;
  const auto n_items = static_cast<Eigen::Index>(items.size());
  t.prob.resize(grid.size(), n_items);
  t.info.resize(grid.size(), n_items);
  for (Eigen::Index j = 0; j < n_items; ++j) {
    const auto& item = items[static_cast<std::size_t>(j)];
    t.item_ids.push_back(item.item_id);
    t.prob.col(j) = icc_prob(item.a, item.b, grid.array()).matrix();
    t.info.col(j) = item_information(item.a, item.b, grid.array()).matrix();
  }
  t.tif = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index j = 0; j < n_items; ++j) t.tif += t.info.col(j);
  return t;
}

bool difficult_at_average(const ItemParameters& item) { return icc_prob(item.a, item.b, 0.0) < 0.5; }

void write_curves_csv(std::ostream& out, const CurveTable& table) {
  out << csv::kSchemaComment << '\n';
  std::vector<std::string> header{"theta"};
  for (const auto& id : table.item_ids) header.push_back("icc_" + id);
  for (const auto& id : table.item_ids) header.push_back("iic_" + id);
  header.push_back("tif");
  out << csv::join(header) << '\n';
  for (Eigen::Index k = 0; k < table.theta.size(); ++k) {
    std::vector<std::string> row{csv::format_double(table.theta(k))};
    for (Eigen::Index j = 0; j < table.prob.cols(); ++j) row.push_back(csv::format_double(table.prob(k, j)));
    for (Eigen::Index j = 0; j < table.info.cols(); ++j) row.push_back(csv::format_double(table.info(k, j)));
    row.push_back(csv::format_double(table.tif(k)));
    out << csv::join(row) << '\n';
  }
}

}  // namespace exirt
