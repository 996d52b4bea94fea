#pragma once

#include <vector>

#include <Eigen/Dense>

namespace synthweave {

struct SpdSolution {
  Eigen::VectorXd x;
  /// Columns found linearly dependent on earlier ones; their entries in x are 0.
  std::vector<bool> aliased;
  /// A diagonal ridge was added because the reduced system was ill-conditioned.
  bool ridge_used = false;
  std::size_t rank() const;
};

/// Solves A x = b for symmetric positive semi-definite A, dropping aliased
/// columns in order: column j is aliased when its Cholesky pivot falls below
/// `alias_tol` times A(j, j). When the reduced system has reciprocal condition
/// below 1e-12, `ridge` is added to its diagonal.
SpdSolution solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double ridge = 1e-4,
                      double alias_tol = 1e-9);

/// Inverse of A over the non-aliased block; aliased rows and columns are NaN.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::vector<bool>& aliased, bool ridge_used = false,
                            double ridge = 1e-4);

/// Aliasing pattern alone (same rule as solve_spd).
std::vector<bool> find_aliased(const Eigen::MatrixXd& a, double alias_tol = 1e-9);

}  // namespace synthweave
