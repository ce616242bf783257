#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exirt/irt_model.hpp"

namespace exirt {

/// ICC, IIC and TIF sampled on an ability grid; `prob` and `info` are
/// grid points x items.
struct CurveTable {
  Eigen::VectorXd theta;
  std::vector<std::string> item_ids;
  Eigen::MatrixXd prob;
  Eigen::MatrixXd info;
  Eigen::VectorXd tif;
};

/// Evenly spaced grid from lo to hi whose endpoints are exactly lo and hi.
/// The defaults give 161 points.
Eigen::VectorXd theta_grid(double lo = -4.0, double hi = 4.0, double step = 0.05);

/// Throws EmptyGrid for an empty grid and InvalidSpec for one that is not
/// finite and ascending.
CurveTable sample_curves(std::span<const ItemParameters> items, const Eigen::VectorXd& grid);

/// True when an average-ability student (theta = 0) is more likely to fail
/// than succeed.
bool difficult_at_average(const ItemParameters& item);

void write_curves_csv(std::ostream& out, const CurveTable& table);

}  // namespace exirt
