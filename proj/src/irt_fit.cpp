#include "exirt/irt_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "exirt/errors.hpp"

namespace exirt {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Response data restricted to the calibrated columns.
struct Design {
  MatrixXd correct;    // S x J, 1 where the response is 1
  MatrixXd incorrect;  // S x J, 1 where the response is 0
  MatrixXd observed;   // S x J
  std::vector<Index> columns;        // matrix column of each design column
  std::vector<std::size_t> param_of; // params index of each design column
};

struct Posterior {
  MatrixXd weights;     // S x K, rows sum to one
  VectorXd log_lik;     // per student
  double total = 0.0;
};

Design make_design(const ResponseMatrix& matrix, const std::vector<Index>& columns) {
  Design d;
  d.columns = columns;
  const Index s = matrix.n_students();
  const Index j = static_cast<Index>(columns.size());
  d.correct.resize(s, j);
  d.incorrect.resize(s, j);
  d.observed.resize(s, j);
  for (Index c = 0; c < j; ++c) {
    const auto col = matrix.cells.col(columns[static_cast<std::size_t>(c)]).array();
    d.correct.col(c) = (col == 1).cast<double>().matrix();
    d.incorrect.col(c) = (col == 0).cast<double>().matrix();
    d.observed.col(c) = (col != kMissing).cast<double>().matrix();
  }
  return d;
}

/// Columns and parameter indices that enter the likelihood.
Design design_for_params(const ResponseMatrix& matrix, std::span<const ItemParameters> params) {
  std::map<std::string, Index> column_of;
  for (std::size_t j = 0; j < matrix.item_ids.size(); ++j)
    column_of[matrix.item_ids[j]] = static_cast<Index>(j);
  const auto degenerate = degenerate_items(matrix);

  std::vector<bool> covered(matrix.item_ids.size(), false);
  std::vector<Index> columns;
  std::vector<std::size_t> param_of;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto it = column_of.find(params[p].item_id);
    if (it == column_of.end())
      throw Error(ErrorCode::DimensionMismatch, "no column for item '" + params[p].item_id + "'");
    const auto col = static_cast<std::size_t>(it->second);
    if (covered[col])
      throw Error(ErrorCode::DimensionMismatch, "duplicate parameters for '" + params[p].item_id + "'");
    covered[col] = true;
    if (params[p].degenerate && degenerate[col]) continue;
    columns.push_back(it->second);
    param_of.push_back(p);
  }
  for (std::size_t j = 0; j < covered.size(); ++j) {
    if (!covered[j] && !degenerate[j])
      throw Error(ErrorCode::DimensionMismatch, "no parameters for item '" + matrix.item_ids[j] + "'");
  }
  Design d = make_design(matrix, columns);
  d.param_of = std::move(param_of);
  return d;
}

/// Log-probabilities of a correct and an incorrect response, nodes x items.
void node_log_probs(const VectorXd& nodes, const VectorXd& a, const VectorXd& b, MatrixXd& log_p,
                    MatrixXd& log_q) {
  const Index k = nodes.size();
  const Index j = a.size();
  log_p.resize(k, j);
  log_q.resize(k, j);
  for (Index c = 0; c < j; ++c) {
    for (Index n = 0; n < k; ++n) {
      const double z = a(c) * (nodes(n) - b(c));
      log_p(n, c) = log_logistic(z);
      log_q(n, c) = log_logistic(-z);
    }
  }
}

Posterior e_step(const Design& d, const VectorXd& nodes, const VectorXd& log_w, const VectorXd& a,
                 const VectorXd& b) {
  MatrixXd log_p;
  MatrixXd log_q;
  node_log_probs(nodes, a, b, log_p, log_q);

  Posterior post;
  post.weights.noalias() = d.correct * log_p.transpose();
  post.weights.noalias() += d.incorrect * log_q.transpose();
  post.weights.rowwise() += log_w.transpose();

  const Index s = post.weights.rows();
  post.log_lik.resize(s);
  for (Index i = 0; i < s; ++i) {
    auto row = post.weights.row(i);
    const double peak = row.maxCoeff();
    row.array() = (row.array() - peak).exp();
    const double mass = row.sum();
    row /= mass;
    post.log_lik(i) = peak + std::log(mass);
  }
  post.total = post.log_lik.sum();
  return post;
}

/// Expected complete-data log-likelihood of one item at slope a and
/// intercept c (z = a theta + c).
double item_objective(const VectorXd& nodes, const VectorXd& r, const VectorXd& n, double a, double c) {
  double q = 0.0;
  for (Index k = 0; k < nodes.size(); ++k) {
    const double z = a * nodes(k) + c;
    q += r(k) * log_logistic(z) + (n(k) - r(k)) * log_logistic(-z);
  }
  return q;
}

struct SlopeIntercept {
  double a;
  double c;
};

/// Clamps a to its bound and b = -c / a to its bound.
SlopeIntercept project(double a, double c, const FitConfig& cfg) {
  a = std::clamp(a, -cfg.a_bound, cfg.a_bound);
  if (a == 0.0) return {0.0, 0.0};
  const double b = std::clamp(-c / a, -cfg.b_bound, cfg.b_bound);
  return {a, -a * b};
}

/// Damped Newton ascent on one item's expected log-likelihood. Steps are
/// only accepted when they improve the objective, which keeps EM monotone.
void m_step_item(const VectorXd& nodes, const VectorXd& r, const VectorXd& n, double& a, double& b,
                 const FitConfig& cfg) {
  SlopeIntercept cur{a, -a * b};
  double q_cur = item_objective(nodes, r, n, cur.a, cur.c);
  const double b_start = b;

  bool done = false;
  for (int step = 0; step < cfg.newton_max_steps && !done; ++step) {
    double ga = 0, gc = 0, haa = 0, hac = 0, hcc = 0;
    for (Index k = 0; k < nodes.size(); ++k) {
      const double p = logistic(cur.a * nodes(k) + cur.c);
      const double resid = r(k) - n(k) * p;
      const double w = n(k) * p * (1.0 - p);
      ga += resid * nodes(k);
      gc += resid;
      haa += w * nodes(k) * nodes(k);
      hac += w * nodes(k);
      hcc += w;
    }
    // Ridge keeps the 2x2 solve defined when the information vanishes.
    const double ridge = 1e-10 * (haa + hcc) + 1e-12;
    haa += ridge;
    hcc += ridge;
    const double det = haa * hcc - hac * hac;
    if (!(det > 0.0)) break;
    const double da = (hcc * ga - hac * gc) / det;
    const double dc = (haa * gc - hac * ga) / det;
    if (std::abs(da) + std::abs(dc) < 1e-12) break;

    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const auto cand = project(cur.a + t * da, cur.c + t * dc, cfg);
      const double q_cand = item_objective(nodes, r, n, cand.a, cand.c);
      if (q_cand > q_cur) {
        const double gain = q_cand - q_cur;
        cur = cand;
        q_cur = q_cand;
        accepted = true;
        done = gain <= 1e-14 * std::abs(q_cur);
        break;
      }
    }
    if (!accepted) break;
  }

  a = cur.a;
  if (cur.a == 0.0) {
    b = std::clamp(b_start, -cfg.b_bound, cfg.b_bound);
  } else {
    b = std::clamp(-cur.c / cur.a, -cfg.b_bound, cfg.b_bound);
  }
}

double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<AbilityEstimate> abilities_from(const ResponseMatrix& matrix, const Design& d,
                                            const Posterior& post, const VectorXd& nodes) {
  std::vector<AbilityEstimate> out;
  out.reserve(matrix.student_ids.size());
  const VectorXd answered = d.observed.rowwise().sum();
  for (Index i = 0; i < matrix.n_students(); ++i) {
    AbilityEstimate est{matrix.student_ids[static_cast<std::size_t>(i)], 0.0, 1.0};
    if (answered(i) > 0) {
      const auto w = post.weights.row(i);
      est.theta = w.dot(nodes);
      const double var = w.dot(nodes.cwiseProduct(nodes)) - est.theta * est.theta;
      est.se_theta = std::sqrt(std::max(var, std::numeric_limits<double>::min()));
    }
    out.push_back(std::move(est));
  }
  return out;
}

void gradient_from(const Design& d, const Posterior& post, const VectorXd& nodes, const VectorXd& a,
                   const VectorXd& b, VectorXd& ga, VectorXd& gb) {
  const MatrixXd r = post.weights.transpose() * d.correct;   // K x J
  const MatrixXd n = post.weights.transpose() * d.observed;  // K x J
  ga.resize(a.size());
  gb.resize(a.size());
  for (Index c = 0; c < a.size(); ++c) {
    double sa = 0.0;
    double sb = 0.0;
    for (Index k = 0; k < nodes.size(); ++k) {
      const double resid = r(k, c) - n(k, c) * icc_prob(a(c), b(c), nodes(k));
      sa += resid * (nodes(k) - b(c));
      sb += resid;
    }
    ga(c) = sa;
    gb(c) = -a(c) * sb;
  }
}

struct QuadratureArrays {
  VectorXd nodes;
  VectorXd log_w;
};

QuadratureArrays quadrature_arrays(const QuadratureSpec& spec) {
  const auto q = make_normal_quadrature<double>(spec);
  return {q.nodes, q.weights.array().log().matrix()};
}

/// Observed-information standard errors for one item from central
/// differences of the analytic gradient.
void standard_errors(const Design& d, const QuadratureArrays& q, const VectorXd& a,
                     const VectorXd& b, Index item, ItemParameters& out) {
  auto grad_at = [&](double da, double db, double& ga_out, double& gb_out) {
    VectorXd a2 = a;
    VectorXd b2 = b;
    a2(item) += da;
    b2(item) += db;
    const auto post = e_step(d, q.nodes, q.log_w, a2, b2);
    VectorXd ga, gb;
    gradient_from(d, post, q.nodes, a2, b2, ga, gb);
    ga_out = ga(item);
    gb_out = gb(item);
  };
  const double ha = 1e-5 * std::max(1.0, std::abs(a(item)));
  const double hb = 1e-5 * std::max(1.0, std::abs(b(item)));
  double ga_p, gb_p, ga_m, gb_m;
  Eigen::Matrix2d hess;
  grad_at(ha, 0, ga_p, gb_p);
  grad_at(-ha, 0, ga_m, gb_m);
  hess(0, 0) = (ga_p - ga_m) / (2 * ha);
  hess(1, 0) = (gb_p - gb_m) / (2 * ha);
  grad_at(0, hb, ga_p, gb_p);
  grad_at(0, -hb, ga_m, gb_m);
  hess(0, 1) = (ga_p - ga_m) / (2 * hb);
  hess(1, 1) = (gb_p - gb_m) / (2 * hb);
  const Eigen::Matrix2d info = -0.5 * (hess + hess.transpose());
  Eigen::LLT<Eigen::Matrix2d> llt(info);
  if (llt.info() != Eigen::Success) return;
  const Eigen::Matrix2d cov = llt.solve(Eigen::Matrix2d::Identity());
  if (!(cov(0, 0) > 0 && cov(1, 1) > 0)) return;
  out.se_a = std::sqrt(cov(0, 0));
  out.se_b = std::sqrt(cov(1, 1));
}

void gather(std::span<const ItemParameters> params, const Design& d, VectorXd& a, VectorXd& b) {
  const auto j = static_cast<Index>(d.param_of.size());
  a.resize(j);
  b.resize(j);
  for (Index c = 0; c < j; ++c) {
    const auto& p = params[d.param_of[static_cast<std::size_t>(c)]];
    if (!std::isfinite(p.a) || !std::isfinite(p.b))
      throw Error(ErrorCode::InvalidSpec, "non-finite parameters for '" + p.item_id + "'");
    a(c) = p.a;
    b(c) = p.b;
  }
}

}  // namespace

FitConfig FitConfig::from_json(const nlohmann::json& j) {
  FitConfig c;
  try {
    c.quadrature.n_nodes = j.value("nodes", c.quadrature.n_nodes);
    if (j.contains("node_range")) {
      c.quadrature.lo = j.at("node_range").at(0).get<double>();
      c.quadrature.hi = j.at("node_range").at(1).get<double>();
    }
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.newton_max_steps = j.value("newton_max_steps", c.newton_max_steps);
    if (j.contains("bounds")) {
      c.a_bound = j.at("bounds").value("a", c.a_bound);
      c.b_bound = j.at("bounds").value("b", c.b_bound);
    }
    c.min_students = j.value("min_students", c.min_students);
    c.standard_errors = j.value("standard_errors", c.standard_errors);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("fit config: ") + e.what());
  }
  if (c.quadrature.n_nodes < 2 || !(c.quadrature.hi > c.quadrature.lo) || !(c.tol > 0) ||
      c.max_iter < 1 || c.newton_max_steps < 1 || !(c.a_bound > 0) || !(c.b_bound > 0) ||
      c.min_students < 1)
    throw Error(ErrorCode::InvalidSpec, "fit config values out of range");
  return c;
}

nlohmann::ordered_json FitConfig::to_json() const {
  nlohmann::ordered_json j;
  j["nodes"] = quadrature.n_nodes;
  j["node_range"] = {quadrature.lo, quadrature.hi};
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["newton_max_steps"] = newton_max_steps;
  j["bounds"] = {{"a", a_bound}, {"b", b_bound}};
  j["min_students"] = min_students;
  j["standard_errors"] = standard_errors;
  j["seed"] = seed;
  return j;
}

double marginal_log_likelihood(const ResponseMatrix& matrix, std::span<const ItemParameters> params,
                               const QuadratureSpec& quadrature) {
  const Design d = design_for_params(matrix, params);
  if (d.columns.empty()) return 0.0;
  VectorXd a, b;
  gather(params, d, a, b);
  const auto q = quadrature_arrays(quadrature);
  return e_step(d, q.nodes, q.log_w, a, b).total;
}

ParameterGradient marginal_log_likelihood_gradient(const ResponseMatrix& matrix,
                                                   std::span<const ItemParameters> params,
                                                   const QuadratureSpec& quadrature) {
  ParameterGradient g{VectorXd::Zero(static_cast<Index>(params.size())),
                      VectorXd::Zero(static_cast<Index>(params.size()))};
  const Design d = design_for_params(matrix, params);
  if (d.columns.empty()) return g;
  VectorXd a, b;
  gather(params, d, a, b);
  const auto q = quadrature_arrays(quadrature);
  const auto post = e_step(d, q.nodes, q.log_w, a, b);
  VectorXd ga, gb;
  gradient_from(d, post, q.nodes, a, b, ga, gb);
  for (std::size_t c = 0; c < d.param_of.size(); ++c) {
    g.a(static_cast<Index>(d.param_of[c])) = ga(static_cast<Index>(c));
    g.b(static_cast<Index>(d.param_of[c])) = gb(static_cast<Index>(c));
  }
  return g;
}

FitResult fit_2pl(const ResponseMatrix& matrix, const FitConfig& config) {
  const auto degenerate = degenerate_items(matrix);
  FitResult result;
  result.diagnostics.group_id = matrix.group_id;

  std::vector<Index> columns;
  for (Index j = 0; j < matrix.n_items(); ++j) {
    if (degenerate[static_cast<std::size_t>(j)]) {
      result.diagnostics.excluded_items.push_back(matrix.item_ids[static_cast<std::size_t>(j)]);
    } else {
      columns.push_back(j);
    }
  }
  if (columns.size() < 2)
    throw Error(ErrorCode::DegenerateMatrix,
                matrix.group_id + ": fewer than two items with varying responses");
  const Design d = make_design(matrix, columns);
  const auto active_students = (d.observed.rowwise().sum().array() > 0).count();
  if (active_students < config.min_students)
    throw Error(ErrorCode::DegenerateMatrix,
                matrix.group_id + ": " + std::to_string(active_students) +
                    " students with responses, need " + std::to_string(config.min_students));

  const auto q = quadrature_arrays(config.quadrature);
  const auto j = static_cast<Index>(columns.size());
  VectorXd a = VectorXd::Ones(j);
  VectorXd b(j);
  for (Index c = 0; c < j; ++c) {
    const double p = d.correct.col(c).sum() / d.observed.col(c).sum();
    b(c) = std::clamp(-logit(p), -3.0, 3.0);
  }

  Posterior post = e_step(d, q.nodes, q.log_w, a, b);
  auto& diag = result.diagnostics;
  diag.trace.push_back(post.total);
  VectorXd best_a = a, best_b = b;
  Posterior best_post = post;

  for (int iter = 0; iter < config.max_iter; ++iter) {
    const MatrixXd r = post.weights.transpose() * d.correct;
    const MatrixXd n = post.weights.transpose() * d.observed;
    for (Index c = 0; c < j; ++c) m_step_item(q.nodes, r.col(c), n.col(c), a(c), b(c), config);

    const double previous = post.total;
    post = e_step(d, q.nodes, q.log_w, a, b);
    diag.trace.push_back(post.total);
    diag.n_iterations = iter + 1;
    if (post.total >= best_post.total) {
      best_a = a;
      best_b = b;
      best_post = post;
    }
    if (std::abs(post.total - previous) < config.tol * std::abs(previous)) {
      diag.converged = true;
      break;
    }
  }
  diag.log_likelihood = best_post.total;

  result.items.resize(static_cast<std::size_t>(matrix.n_items()));
  for (Index col = 0; col < matrix.n_items(); ++col) {
    auto& item = result.items[static_cast<std::size_t>(col)];
    item.item_id = matrix.item_ids[static_cast<std::size_t>(col)];
    if (degenerate[static_cast<std::size_t>(col)]) {
      // Unidentified: keep the starting slope and pin b to the bound on the
      // side the responses point to.
      const auto column = matrix.cells.col(col).array();
      const auto ones = (column == 1).count();
      const auto zeros = (column == 0).count();
      item.a = 1.0;
      item.b = ones > 0 ? -config.b_bound : (zeros > 0 ? config.b_bound : 0.0);
      item.degenerate = true;
    }
  }
  const double a_edge = config.a_bound * (1 - 1e-9);
  const double b_edge = config.b_bound * (1 - 1e-9);
  for (Index c = 0; c < j; ++c) {
    auto& item = result.items[static_cast<std::size_t>(columns[static_cast<std::size_t>(c)])];
    item.a = best_a(c);
    item.b = best_b(c);
    item.degenerate = std::abs(item.a) >= a_edge || std::abs(item.b) >= b_edge;
    if (config.standard_errors && !item.degenerate) standard_errors(d, q, best_a, best_b, c, item);
  }
  result.abilities = abilities_from(matrix, d, best_post, q.nodes);
  return result;
}

std::vector<AbilityEstimate> estimate_abilities(const ResponseMatrix& matrix,
                                                std::span<const ItemParameters> params,
                                                const QuadratureSpec& quadrature) {
  const Design d = design_for_params(matrix, params);
  const auto q = quadrature_arrays(quadrature);
  VectorXd a, b;
  gather(params, d, a, b);
  const auto post = e_step(d, q.nodes, q.log_w, a, b);
  return abilities_from(matrix, d, post, q.nodes);
}

double test_information(std::span<const ItemParameters> items, double theta) {
  if (items.empty()) throw Error(ErrorCode::EmptyItemSet, "test information of an empty item set");
  double total = 0.0;
  for (const auto& item : items) total += item_information(item.a, item.b, theta);
  return total;
}

}  // namespace exirt
