#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthweave/kernels.hpp"

namespace synthweave {

struct OlsFit {
  /// Coefficients; aliased columns hold 0.
  Eigen::VectorXd beta;
  std::vector<bool> aliased;
  double rss = 0.0;
  /// sqrt(rss / (n - rank)), or 0 when there are no residual degrees of freedom.
  double residual_sd = 0.0;
  std::size_t rank = 0;
  std::size_t n = 0;
};

OlsFit fit_ols(const Eigen::MatrixXd& x, std::span<const double> y, Execution exec = Execution::parallel);

struct LogitOptions {
  int max_iter = 100;
  double tol = 1e-6;
  /// Coefficients are clamped to +-max_coef so separated data stay finite.
  double max_coef = 30.0;
};

struct LogitFit {
  /// Coefficients; aliased columns hold NaN.
  Eigen::VectorXd beta;
  /// Wald standard errors from the final information matrix (NaN when aliased).
  Eigen::VectorXd se;
  std::vector<bool> aliased;
  /// Fitted probabilities, one per row of the design.
  Eigen::VectorXd fitted;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ridge_used = false;
  /// Some coefficient reached the clamp (typically separation).
  bool capped = false;
  std::vector<std::string> warnings;

  std::size_t rank() const;
};

/// Binary logistic regression by Newton-Raphson (IRLS) with step halving.
/// `y` holds proportions in [0, 1] and `weights` the number of trials per row
/// (empty means 1), so grouped data can be fitted directly. Iteration stops
/// when both the largest score component (per unit weight) and the largest
/// step fall below tol, or once a clamped fit stops improving the likelihood.
LogitFit fit_logit(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> weights,
                   const LogitOptions& options = {}, Execution exec = Execution::parallel);

struct MultinomialOptions {
  int max_iter = 100;
  double tol = 1e-6;
  double max_coef = 30.0;
  /// Upper bound on free parameters ((levels present - 1) * columns).
  std::size_t max_parameters = 2500;
};

struct MultinomialFit {
  /// Columns of the design by target level; the reference level and levels
  /// absent from the data have zero columns.
  Eigen::MatrixXd beta;
  std::vector<bool> aliased;
  /// Target levels observed in the data, ascending; the first is the reference.
  std::vector<std::int32_t> present;
  std::size_t n_levels = 0;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ridge_used = false;
  std::vector<std::string> warnings;
};

/// Baseline-category logit model fitted by Newton's method on the full block
/// Hessian. Throws FitError when the parameter count exceeds max_parameters.
MultinomialFit fit_multinomial(const Eigen::MatrixXd& x, std::span<const std::int32_t> y, std::size_t n_levels,
                               const MultinomialOptions& options = {}, Execution exec = Execution::parallel);

/// Row-wise level probabilities (n x n_levels); absent levels get 0.
Eigen::MatrixXd multinomial_probabilities(const MultinomialFit& fit, const Eigen::MatrixXd& x);

double logistic(double eta);

}  // namespace synthweave
