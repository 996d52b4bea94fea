#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial reference with
// the same per-element summation order, so the two agree bit for bit and the
// results do not depend on the thread count.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace synthweave {

enum class Execution { serial, parallel };

/// X' diag(w) X. An empty `w` means unit weights.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, std::span<const double> w,
                              Execution exec = Execution::parallel);
Eigen::MatrixXd weighted_gram_serial(const Eigen::MatrixXd& x, std::span<const double> w);

/// X' (w .* y). An empty `w` means unit weights.
Eigen::VectorXd weighted_crossprod(const Eigen::MatrixXd& x, std::span<const double> w, std::span<const double> y,
                                   Execution exec = Execution::parallel);

/// Histogram of cell indices in [0, k).
std::vector<std::int64_t> count_cells(std::span<const std::int32_t> cells, std::size_t k,
                                      Execution exec = Execution::parallel);
std::vector<std::int64_t> count_cells_serial(std::span<const std::int32_t> cells, std::size_t k);

/// Number of OpenMP threads available to parallel kernels (1 without OpenMP).
int kernel_threads();

}  // namespace synthweave
