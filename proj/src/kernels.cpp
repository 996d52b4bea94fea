#include "synthweave/kernels.hpp"

#include <omp.h>

namespace synthweave {

namespace {

// Below this many multiply-adds the thread start-up cost dominates.
constexpr double kParallelWork = 2e5;

inline void gram_column(const Eigen::MatrixXd& x, std::span<const double> w, Eigen::MatrixXd& out, Eigen::Index j,
                        std::vector<double>& scratch) {
  const Eigen::Index n = x.rows();
  const double* xj = x.col(j).data();
  if (w.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) scratch[i] = xj[i];
  } else {
    for (Eigen::Index i = 0; i < n; ++i) scratch[i] = w[i] * xj[i];
  }
  for (Eigen::Index k = 0; k <= j; ++k) {
    const double* xk = x.col(k).data();
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    Eigen::Index i = 0;
    for (; i + 4 <= n; i += 4) {
      a0 += scratch[i] * xk[i];
      a1 += scratch[i + 1] * xk[i + 1];
      a2 += scratch[i + 2] * xk[i + 2];
      a3 += scratch[i + 3] * xk[i + 3];
    }
    for (; i < n; ++i) a0 += scratch[i] * xk[i];
    const double s = (a0 + a1) + (a2 + a3);
    out(j, k) = s;
    out(k, j) = s;
  }
}

}  // namespace

Eigen::MatrixXd weighted_gram_serial(const Eigen::MatrixXd& x, std::span<const double> w) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd out(p, p);
  std::vector<double> scratch(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < p; ++j) gram_column(x, w, out, j, scratch);
  return out;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, std::span<const double> w, Execution exec) {
  const Eigen::Index p = x.cols();
  const double work = static_cast<double>(x.rows()) * static_cast<double>(p) * static_cast<double>(p) / 2.0;
  if (exec == Execution::serial || work < kParallelWork) return weighted_gram_serial(x, w);
  Eigen::MatrixXd out(p, p);
#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<std::size_t>(x.rows()));
#pragma omp for schedule(dynamic, 1)
    for (Eigen::Index j = p - 1; j >= 0; --j) gram_column(x, w, out, j, scratch);
  }
  return out;
}

Eigen::VectorXd weighted_crossprod(const Eigen::MatrixXd& x, std::span<const double> w, std::span<const double> y,
                                   Execution exec) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::VectorXd out(p);
  const bool parallel = exec == Execution::parallel && static_cast<double>(n) * static_cast<double>(p) >= kParallelWork;
#pragma omp parallel for if (parallel) schedule(static)
  for (Eigen::Index j = 0; j < p; ++j) {
    const double* xj = x.col(j).data();
    double s = 0.0;
    if (w.empty()) {
      for (Eigen::Index i = 0; i < n; ++i) s += xj[i] * y[i];
    } else {
      for (Eigen::Index i = 0; i < n; ++i) s += xj[i] * w[i] * y[i];
    }
    out(j) = s;
  }
  return out;
}

std::vector<std::int64_t> count_cells_serial(std::span<const std::int32_t> cells, std::size_t k) {
  std::vector<std::int64_t> counts(k, 0);
  for (auto c : cells) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

std::vector<std::int64_t> count_cells(std::span<const std::int32_t> cells, std::size_t k, Execution exec) {
  if (exec == Execution::serial || cells.size() < 50000) return count_cells_serial(cells, k);
  std::vector<std::int64_t> counts(k, 0);
#pragma omp parallel
  {
    std::vector<std::int64_t> local(k, 0);
#pragma omp for schedule(static) nowait
    for (std::size_t i = 0; i < cells.size(); ++i) ++local[static_cast<std::size_t>(cells[i])];
#pragma omp critical
    for (std::size_t c = 0; c < k; ++c) counts[c] += local[c];
  }
  return counts;
}

int kernel_threads() { return omp_get_max_threads(); }

}  // namespace synthweave
