#pragma once

#include <span>

namespace bnptrial {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_cdf(double x);
// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x);
double log_sum_exp(double a, double b);

double sample_mean(std::span<const double> x);
// Sample standard deviation with the n - 1 divisor; 0 for n < 2.
double sample_sd(std::span<const double> x);

}  // namespace bnptrial
