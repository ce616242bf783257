#include "exirt/quadrature.hpp"

#include <cmath>

#include "exirt/errors.hpp"

namespace exirt {

template <typename Scalar>
Quadrature<Scalar> make_normal_quadrature(const QuadratureSpec& spec) {
  if (spec.n_nodes < 2 || !(spec.hi > spec.lo))
    throw Error(ErrorCode::InvalidSpec, "quadrature needs at least 2 nodes on a non-empty range");
  Quadrature<Scalar> q;
  q.nodes = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::LinSpaced(spec.n_nodes, Scalar(spec.lo),
                                                                 Scalar(spec.hi));
  q.weights = q.nodes.unaryExpr([](Scalar x) {
    using std::exp;
    return exp(Scalar(-0.5) * x * x);
  });
  q.weights /= q.weights.sum();
  return q;
}

template Quadrature<double> make_normal_quadrature<double>(const QuadratureSpec&);
template Quadrature<long double> make_normal_quadrature<long double>(const QuadratureSpec&);

}  // namespace exirt
