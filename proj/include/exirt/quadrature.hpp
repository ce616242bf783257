#pragma once

#include <Eigen/Dense>

namespace exirt {

/// Equally spaced nodes on [lo, hi] carrying standard-normal density
/// weights renormalised to sum to one.
struct QuadratureSpec {
  int n_nodes = 41;
  double lo = -5.0;
  double hi = 5.0;

  friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

template <typename Scalar>
struct Quadrature {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

template <typename Scalar = double>
Quadrature<Scalar> make_normal_quadrature(const QuadratureSpec& spec);

extern template Quadrature<double> make_normal_quadrature<double>(const QuadratureSpec&);
extern template Quadrature<long double> make_normal_quadrature<long double>(const QuadratureSpec&);

}  // namespace exirt
