#include "bnptrial/stats.hpp"

#include <cmath>
#include <limits>

namespace bnptrial {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double log_normal_cdf(double x) {
    if (x > -20.0) return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
    // Asymptotic expansion of the Mills ratio.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double top = a > b ? a : b;
    return top + std::log(std::exp(a - top) + std::exp(b - top));
}

double sample_mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = sample_mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace bnptrial
