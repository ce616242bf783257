#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "exirt/irt_model.hpp"
#include "exirt/quadrature.hpp"
#include "exirt/response_matrix.hpp"

namespace exirt {

struct FitConfig {
  QuadratureSpec quadrature;
  double tol = 1e-6;  // relative log-likelihood change
  int max_iter = 500;
  int newton_max_steps = 50;
  double a_bound = 10.0;
  double b_bound = 50.0;
  int min_students = 10;
  bool standard_errors = true;
  std::uint64_t seed = 0;  // recorded only; the fit itself draws no random numbers

  static FitConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

struct AbilityEstimate {
  std::string student_id;
  double theta = 0.0;     // posterior mean
  double se_theta = 1.0;  // posterior standard deviation
};

struct FitDiagnostics {
  std::string group_id;
  int n_iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::vector<double> trace;  // log-likelihood before the first and after every EM cycle
  std::vector<std::string> excluded_items;
};

struct FitResult {
  std::vector<ItemParameters> items;  // matrix column order
  std::vector<AbilityEstimate> abilities;
  FitDiagnostics diagnostics;
};

// Items enter the likelihood functions below when they have parameters,
// except those flagged degenerate whose observed responses are all equal
// (fit_2pl leaves those out of calibration). A column with varying
// responses but no parameters raises DimensionMismatch.

/// sum_s log sum_k w_k prod_j P_jk^x (1 - P_jk)^(1 - x), missing cells skipped.
double marginal_log_likelihood(const ResponseMatrix& matrix, std::span<const ItemParameters> params,
                               const QuadratureSpec& quadrature = {});

/// Analytic gradient with respect to each entry of `params` (zero for
/// entries that do not enter the likelihood).
struct ParameterGradient {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};
ParameterGradient marginal_log_likelihood_gradient(const ResponseMatrix& matrix,
                                                   std::span<const ItemParameters> params,
                                                   const QuadratureSpec& quadrature = {});

/// Marginal maximum likelihood by EM over a fixed quadrature. Returns the
/// best iterate with converged = false when max_iter is exhausted. Throws
/// DegenerateMatrix when fewer than two items vary or too few students
/// answered.
FitResult fit_2pl(const ResponseMatrix& matrix, const FitConfig& config = {});

/// Posterior-mean abilities; students with no usable responses get the
/// prior (0, 1).
std::vector<AbilityEstimate> estimate_abilities(const ResponseMatrix& matrix,
                                                std::span<const ItemParameters> params,
                                                const QuadratureSpec& quadrature = {});

}  // namespace exirt
