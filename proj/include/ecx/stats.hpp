#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ecx::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> xs);

/// Average ("tied") ranks, 1-based: equal values share the mean of their positions.
std::vector<double> tied_rank(std::span<const double> xs);

/// Linear-interpolation quantile of the sorted sample (numpy's default method).
double quantile_sorted(std::span<const double> sorted, double q);

double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

/// One-sided p-value for a negative Spearman correlation: P(rho <= observed)
/// under exchangeability. Exact enumeration up to 9 points, Student-t
/// approximation above.
double spearman_negative_p_value(std::span<const double> xs, std::span<const double> ys);

/// Inverse of the standard normal CDF.
double normal_quantile(double p);

/// Silverman rule of thumb, 1.06 sd n^(-1/5).
double silverman_bandwidth(std::span<const double> xs);

}  // namespace ecx::stats
