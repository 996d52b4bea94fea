#include "synthweave/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthweave/dataset.hpp"
#include "synthweave/linalg.hpp"

namespace synthweave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

Eigen::MatrixXd kept_columns(const Eigen::MatrixXd& x, const std::vector<bool>& aliased) {
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < aliased.size(); ++j) {
    if (!aliased[j]) keep.push_back(static_cast<Eigen::Index>(j));
  }
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);
  return out;
}

std::size_t count_kept(const std::vector<bool>& aliased) {
  return static_cast<std::size_t>(std::count(aliased.begin(), aliased.end(), false));
}

void clamp(Eigen::VectorXd& b, double limit) {
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = std::clamp(b(i), -limit, limit);
}

}  // namespace

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::size_t LogitFit::rank() const { return count_kept(aliased); }

OlsFit fit_ols(const Eigen::MatrixXd& x, std::span<const double> y, Execution exec) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw FitError("design and response differ in length");
  OlsFit fit;
  fit.n = y.size();
  const Eigen::MatrixXd gram = weighted_gram(x, {}, exec);
  const Eigen::VectorXd xty = weighted_crossprod(x, {}, y, exec);
  SpdSolution sol = solve_spd(gram, xty);
  fit.beta = sol.x;
  fit.aliased = sol.aliased;
  fit.rank = sol.rank();
  const Eigen::VectorXd resid = Eigen::Map<const Eigen::VectorXd>(y.data(), x.rows()) - x * fit.beta;
  fit.rss = resid.squaredNorm();
  fit.residual_sd = fit.n > fit.rank ? std::sqrt(fit.rss / static_cast<double>(fit.n - fit.rank)) : 0.0;
  return fit;
}

LogitFit fit_logit(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> weights,
                   const LogitOptions& options, Execution exec) {
  const auto n = x.rows();
  if (static_cast<Eigen::Index>(y.size()) != n) throw FitError("design and response differ in length");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != n) {
    throw FitError("weights and response differ in length");
  }
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w.begin());
  double total_w = 0.0;
  for (double v : w) total_w += v;
  if (!(total_w > 0.0)) throw FitError("logistic regression needs positive total weight");

  LogitFit fit;
  fit.aliased = find_aliased(weighted_gram(x, w, exec));
  const Eigen::MatrixXd xr = kept_columns(x, fit.aliased);
  const Eigen::Index p = xr.cols();

  auto loglik = [&](const Eigen::VectorXd& eta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(i);
      ll += w[r] * (y[r] * eta(i) - softplus(eta(i)));
    }
    return ll;
  };

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = xr * b;
  double ll = loglik(eta);
  std::vector<double> resid(static_cast<std::size_t>(n));
  std::vector<double> wt(static_cast<std::size_t>(n));
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);

  double prev_ll = ll;
  for (int it = 0; it < options.max_iter && p > 0; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(i);
      const double mu = logistic(eta(i));
      resid[r] = w[r] * (y[r] - mu);
      wt[r] = w[r] * mu * (1.0 - mu);
    }
    const Eigen::VectorXd score = weighted_crossprod(xr, {}, resid, exec);
    info = weighted_gram(xr, wt, exec);
    const SpdSolution sol = solve_spd(info, score);
    fit.ridge_used = fit.ridge_used || sol.ridge_used;
    const Eigen::VectorXd step = sol.x;

    double t = 1.0;
    Eigen::VectorXd trial;
    Eigen::VectorXd trial_eta;
    double trial_ll = ll;
    for (;;) {
      trial = b + t * step;
      clamp(trial, options.max_coef);
      trial_eta = xr * trial;
      trial_ll = loglik(trial_eta);
      if (trial_ll >= ll - 1e-12 * std::abs(ll) || t < 1e-10) break;
      t *= 0.5;
    }
    const double moved = (trial - b).cwiseAbs().maxCoeff();
    const bool accept = trial_ll >= ll - 1e-12 * std::abs(ll);
    if (accept) {
      b = trial;
      eta = trial_eta;
      ll = trial_ll;
    }
    fit.iterations = it + 1;
    const double score_max = score.cwiseAbs().maxCoeff() / total_w;
    const bool stalled = accept && it > 0 && b.cwiseAbs().maxCoeff() >= options.max_coef * (1.0 - 1e-12) &&
                         trial_ll - prev_ll <= 1e-7 * std::abs(ll);
    prev_ll = ll;
    if ((score_max < options.tol && moved < options.tol) || !accept || moved == 0.0 || stalled) {
      fit.converged = accept || score_max < options.tol;
      break;
    }
  }
  if (p == 0) fit.converged = true;

  // Information at the final coefficients.
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    const double mu = logistic(eta(i));
    wt[r] = w[r] * mu * (1.0 - mu);
  }
  info = weighted_gram(xr, wt, exec);

  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(b(j)) >= options.max_coef * (1.0 - 1e-12)) fit.capped = true;
  }
  if (fit.capped) {
    fit.converged = false;
    fit.warnings.push_back("coefficients reached +-" + std::to_string(static_cast<int>(options.max_coef)) +
                           " (separation); fitted probabilities are near 0 or 1");
  } else if (!fit.converged) {
    fit.warnings.push_back("logistic regression did not converge in " + std::to_string(options.max_iter) +
                           " iterations");
  }
  if (fit.ridge_used) fit.warnings.push_back("ill-conditioned information matrix; ridge added");

  const auto kept = static_cast<std::size_t>(p);
  std::vector<bool> none(kept, false);
  const Eigen::MatrixXd cov = spd_inverse(info, none, fit.ridge_used);

  fit.beta = Eigen::VectorXd::Constant(x.cols(), kNaN);
  fit.se = Eigen::VectorXd::Constant(x.cols(), kNaN);
  Eigen::Index k = 0;
  for (std::size_t j = 0; j < fit.aliased.size(); ++j) {
    if (fit.aliased[j]) continue;
    fit.beta(static_cast<Eigen::Index>(j)) = b(k);
    const double v = cov(k, k);
    fit.se(static_cast<Eigen::Index>(j)) = v >= 0.0 ? std::sqrt(v) : kNaN;
    ++k;
  }
  fit.fitted.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) fit.fitted(i) = logistic(eta(i));
  fit.log_likelihood = ll;
  return fit;
}

MultinomialFit fit_multinomial(const Eigen::MatrixXd& x, std::span<const std::int32_t> y, std::size_t n_levels,
                               const MultinomialOptions& options, Execution exec) {
  const auto n = x.rows();
  if (static_cast<Eigen::Index>(y.size()) != n) throw FitError("design and response differ in length");
  if (n == 0) throw FitError("multinomial regression on zero rows");
  MultinomialFit fit;
  fit.n_levels = n_levels;
  std::vector<std::size_t> counts(n_levels, 0);
  for (auto c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_levels) throw FitError("multinomial response code out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t l = 0; l < n_levels; ++l) {
    if (counts[l] > 0) fit.present.push_back(static_cast<std::int32_t>(l));
  }
  fit.aliased = find_aliased(weighted_gram(x, {}, exec));
  const Eigen::MatrixXd xr = kept_columns(x, fit.aliased);
  const Eigen::Index p = xr.cols();
  const auto j_free = static_cast<Eigen::Index>(fit.present.size()) - 1;
  const auto n_par = static_cast<std::size_t>(j_free * p);
  if (n_par > options.max_parameters) {
    throw FitError("multinomial model needs " + std::to_string(n_par) + " parameters (limit " +
                   std::to_string(options.max_parameters) + "); use cart or a nested method");
  }
  fit.beta = Eigen::MatrixXd::Zero(x.cols(), static_cast<Eigen::Index>(n_levels));
  if (j_free <= 0) {
    fit.converged = true;
    return fit;
  }

  // Response position among present levels (0 = reference).
  std::vector<Eigen::Index> pos(n_levels, -1);
  for (std::size_t q = 0; q < fit.present.size(); ++q) pos[static_cast<std::size_t>(fit.present[q])] = static_cast<Eigen::Index>(q);
  std::vector<Eigen::Index> yi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) yi[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])];

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, j_free);
  auto probs_of = [&](const Eigen::MatrixXd& coef, Eigen::MatrixXd& prob) {
    const Eigen::MatrixXd eta = xr * coef;
    prob.resize(n, j_free);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = 0.0;
      for (Eigen::Index a = 0; a < j_free; ++a) mx = std::max(mx, eta(i, a));
      double denom = std::exp(-mx);
      for (Eigen::Index a = 0; a < j_free; ++a) denom += std::exp(eta(i, a) - mx);
      for (Eigen::Index a = 0; a < j_free; ++a) prob(i, a) = std::exp(eta(i, a) - mx) / denom;
      const Eigen::Index yy = yi[static_cast<std::size_t>(i)];
      ll += (yy == 0 ? -mx : eta(i, yy - 1) - mx) - std::log(denom);
    }
    return ll;
  };

  Eigen::MatrixXd prob;
  double ll = probs_of(b, prob);
  const auto np = static_cast<Eigen::Index>(n_par);
  std::vector<double> wv(static_cast<std::size_t>(n));
  std::vector<double> rv(static_cast<std::size_t>(n));
  for (int it = 0; it < options.max_iter; ++it) {
    Eigen::VectorXd score(np);
    Eigen::MatrixXd hess(np, np);
    for (Eigen::Index a = 0; a < j_free; ++a) {
      for (Eigen::Index i = 0; i < n; ++i) {
        rv[static_cast<std::size_t>(i)] = (yi[static_cast<std::size_t>(i)] == a + 1 ? 1.0 : 0.0) - prob(i, a);
      }
      score.segment(a * p, p) = weighted_crossprod(xr, {}, rv, exec);
      for (Eigen::Index c = a; c < j_free; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) {
          wv[static_cast<std::size_t>(i)] = prob(i, a) * ((a == c ? 1.0 : 0.0) - prob(i, c));
        }
        const Eigen::MatrixXd block = weighted_gram(xr, wv, exec);
        hess.block(a * p, c * p, p, p) = block;
        if (c != a) hess.block(c * p, a * p, p, p) = block.transpose();
      }
    }
    const SpdSolution sol = solve_spd(hess, score);
    fit.ridge_used = fit.ridge_used || sol.ridge_used;
    const Eigen::MatrixXd step = Eigen::Map<const Eigen::MatrixXd>(sol.x.data(), p, j_free);

    double t = 1.0;
    Eigen::MatrixXd trial;
    Eigen::MatrixXd trial_prob;
    double trial_ll = ll;
    for (;;) {
      trial = (b + t * step).cwiseMax(-options.max_coef).cwiseMin(options.max_coef);
      trial_ll = probs_of(trial, trial_prob);
      if (trial_ll >= ll - 1e-12 * std::abs(ll) || t < 1e-10) break;
      t *= 0.5;
    }
    const bool accept = trial_ll >= ll - 1e-12 * std::abs(ll);
    const double moved = (trial - b).cwiseAbs().maxCoeff();
    const double gain = trial_ll - ll;
    if (accept) {
      b = trial;
      prob = trial_prob;
      ll = trial_ll;
    }
    fit.iterations = it + 1;
    const double score_max = score.cwiseAbs().maxCoeff() / static_cast<double>(n);
    // A stalled likelihood means the remaining movement is drift towards the clamp.
    const bool at_clamp = b.cwiseAbs().maxCoeff() >= options.max_coef * (1.0 - 1e-12);
    const bool stalled = accept && it > 0 && gain <= (at_clamp ? 1e-7 : 1e-10) * std::abs(ll);
    if ((score_max < options.tol && moved < options.tol) || !accept || moved == 0.0 || stalled) {
      fit.converged = stalled ? score_max < std::sqrt(options.tol) : (accept || score_max < options.tol);
      break;
    }
  }
  if (b.cwiseAbs().maxCoeff() >= options.max_coef * (1.0 - 1e-12)) {
    fit.converged = false;
    fit.warnings.push_back("multinomial coefficients reached the clamp (separation)");
  } else if (!fit.converged) {
    fit.warnings.push_back("multinomial regression did not converge in " + std::to_string(options.max_iter) +
                           " iterations");
  }
  if (fit.ridge_used) fit.warnings.push_back("ill-conditioned Hessian; ridge added");

  Eigen::Index k = 0;
  for (std::size_t j = 0; j < fit.aliased.size(); ++j) {
    if (fit.aliased[j]) continue;
    for (Eigen::Index a = 0; a < j_free; ++a) {
      fit.beta(static_cast<Eigen::Index>(j), fit.present[static_cast<std::size_t>(a + 1)]) = b(k, a);
    }
    ++k;
  }
  fit.log_likelihood = ll;
  return fit;
}

Eigen::MatrixXd multinomial_probabilities(const MultinomialFit& fit, const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  const auto k = static_cast<Eigen::Index>(fit.n_levels);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, k);
  if (fit.present.empty()) return out;
  const Eigen::MatrixXd eta = x * fit.beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (auto l : fit.present) mx = std::max(mx, eta(i, l));
    double denom = 0.0;
    for (auto l : fit.present) denom += std::exp(eta(i, l) - mx);
    for (auto l : fit.present) out(i, l) = std::exp(eta(i, l) - mx) / denom;
  }
  return out;
}

}  // namespace synthweave
