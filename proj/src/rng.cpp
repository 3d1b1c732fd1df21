#include "bnptrial/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bnptrial {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Standard normal conditioned on z >= a.
double std_truncated_lower(Rng& rng, double a) {
    if (a <= 0.0) {
        for (;;) {
            const double z = rng.normal();
            if (z >= a) return z;
        }
    }
    // Exponential proposal with the optimal rate (Robert 1995).
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double z = a + rng.exponential(lambda);
        const double d = z - lambda;
        if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
    }
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
    // 53 random bits, shifted off zero.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal(double mean, double sd) {
    std::normal_distribution<double> dist(mean, sd);
    return dist(engine_);
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
}

double Rng::log_gamma_variate(double shape) {
    if (shape >= 1.0) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return std::log(dist(engine_));
    }
    // G(a) = G(a + 1) * U^(1/a)
    std::gamma_distribution<double> dist(shape + 1.0, 1.0);
    return std::log(dist(engine_)) + std::log(uniform()) / shape;
}

double Rng::beta(double a, double b) {
    const double la = log_gamma_variate(a);
    const double lb = log_gamma_variate(b);
    // a / (a + b) computed from logs
    return 1.0 / (1.0 + std::exp(lb - la));
}

int Rng::binomial(int n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<int> dist(n, p);
    return dist(engine_);
}

std::size_t Rng::uniform_index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
    if (log_weights.empty()) throw std::invalid_argument("categorical_log: no categories");
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(top)) throw std::domain_error("categorical_log: no finite weight");
    double total = 0.0;
    for (double lw : log_weights) total += std::exp(lw - top);
    double target = uniform() * total;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        target -= std::exp(log_weights[i] - top);
        if (target <= 0.0) return i;
    }
    // rounding fallthrough: last category with positive weight
    for (std::size_t i = log_weights.size(); i-- > 0;) {
        if (std::isfinite(log_weights[i])) return i;
    }
    return log_weights.size() - 1;
}

double truncated_normal_lower(Rng& rng, double mean, double sd, double lower) {
    return mean + sd * std_truncated_lower(rng, (lower - mean) / sd);
}

double truncated_normal_upper(Rng& rng, double mean, double sd, double upper) {
    return mean - sd * std_truncated_lower(rng, (mean - upper) / sd);
}

}  // namespace bnptrial
