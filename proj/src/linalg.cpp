#include "synthweave/linalg.hpp"

#include <cmath>
#include <limits>

namespace synthweave {

std::size_t SpdSolution::rank() const {
  std::size_t r = 0;
  for (bool a : aliased) r += a ? 0 : 1;
  return r;
}

std::vector<bool> find_aliased(const Eigen::MatrixXd& a, double alias_tol) {
  const Eigen::Index p = a.rows();
  std::vector<bool> aliased(static_cast<std::size_t>(p), false);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(a(j, j) > 0.0) || d <= alias_tol * a(j, j)) {
      aliased[static_cast<std::size_t>(j)] = true;
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return aliased;
}

namespace {

std::vector<Eigen::Index> kept_indices(const std::vector<bool>& aliased) {
  std::vector<Eigen::Index> kept;
  for (std::size_t j = 0; j < aliased.size(); ++j) {
    if (!aliased[j]) kept.push_back(static_cast<Eigen::Index>(j));
  }
  return kept;
}

Eigen::MatrixXd reduce(const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& kept) {
  const auto r = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd out(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) out(i, j) = a(kept[i], kept[j]);
  }
  return out;
}

}  // namespace

SpdSolution solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double ridge, double alias_tol) {
  SpdSolution sol;
  sol.aliased = find_aliased(a, alias_tol);
  sol.x = Eigen::VectorXd::Zero(a.rows());
  const auto kept = kept_indices(sol.aliased);
  if (kept.empty()) return sol;

  Eigen::MatrixXd ar = reduce(a, kept);
  Eigen::VectorXd br(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) br(static_cast<Eigen::Index>(i)) = b(kept[i]);

  Eigen::LLT<Eigen::MatrixXd> llt(ar);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    ar.diagonal().array() += ridge;
    llt.compute(ar);
    sol.ridge_used = true;
  }
  Eigen::VectorXd xr = llt.solve(br);
  for (std::size_t i = 0; i < kept.size(); ++i) sol.x(kept[i]) = xr(static_cast<Eigen::Index>(i));
  return sol;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::vector<bool>& aliased, bool ridge_used,
                            double ridge) {
  const Eigen::Index p = a.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  const auto kept = kept_indices(aliased);
  if (kept.empty()) return out;
  Eigen::MatrixXd ar = reduce(a, kept);
  if (ridge_used) ar.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(ar);
  if (llt.info() != Eigen::Success) {
    ar.diagonal().array() += ridge;
    llt.compute(ar);
  }
  const auto r = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(r, r));
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) out(kept[i], kept[j]) = inv(i, j);
  }
  return out;
}

}  // namespace synthweave
