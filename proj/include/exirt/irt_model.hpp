#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace exirt {

/// Fitted 2PL item. `degenerate` marks items whose parameters are not
/// identified by the data or that ended on a bound.
struct ItemParameters {
  std::string item_id;
  double a = 1.0;  // discrimination
  double b = 0.0;  // difficulty
  std::optional<double> se_a;
  std::optional<double> se_b;
  bool degenerate = false;
};

/// Logistic function, evaluated without overflow for any finite z.
template <typename Scalar>
Scalar logistic(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

/// log(logistic(z)) = -log(1 + exp(-z)).
template <typename Scalar>
Scalar log_logistic(Scalar z) {
  using std::exp;
  using std::log1p;
  if (z >= Scalar(0)) return -log1p(exp(-z));
  return z - log1p(exp(z));
}

/// P(correct | theta) = 1 / (1 + exp(-a (theta - b))).
template <typename Scalar>
Scalar icc_prob(Scalar a, Scalar b, Scalar theta) {
  return logistic(a * (theta - b));
}

/// Fisher information a^2 P (1 - P) of one item.
template <typename Scalar>
Scalar item_information(Scalar a, Scalar b, Scalar theta) {
  const Scalar p = icc_prob(a, b, theta);
  return a * a * p * (Scalar(1) - p);
}

/// Coefficient-wise forms over an array of abilities.
template <typename Derived>
auto icc_prob(typename Derived::Scalar a, typename Derived::Scalar b,
              const Eigen::ArrayBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  return (a * (theta - b)).unaryExpr([](Scalar z) { return logistic(z); });
}

template <typename Derived>
auto item_information(typename Derived::Scalar a, typename Derived::Scalar b,
                      const Eigen::ArrayBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  return (a * (theta - b)).unaryExpr([a](Scalar z) {
    const Scalar p = logistic(z);
    return a * a * p * (Scalar(1) - p);
  });
}

/// Sum of item information; throws EmptyItemSet on an empty list.
double test_information(std::span<const ItemParameters> items, double theta);

}  // namespace exirt
