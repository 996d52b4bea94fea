#pragma once

#include <functional>
#include <span>
#include <vector>

namespace synthweave {

/// Standard normal distribution function.
double normal_cdf(double z);

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Halley step, accurate to about 1e-15 on (0, 1).
double normal_quantile(double p);

/// Regularized upper incomplete gamma Q(a, x), by series for x < a + 1 and
/// by Lentz's continued fraction otherwise.
double gamma_q(double a, double x);

/// Upper tail P(X > x) of a chi-square with `df` degrees of freedom.
double chisq_upper_tail(double x, double df);

/// Linear-interpolation sample quantile (R type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Normal scores Phi^-1((rank - 0.375) / (n + 0.25)) with average ranks.
std::vector<double> blom_scores(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov distance sup |F1 - F2|.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// One-sample Kolmogorov-Smirnov distance against a continuous CDF.
double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov p-value for a one-sample distance `d` at size n.
double ks_p_value(double d, double n);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(std::span<const double> values);

}  // namespace synthweave
