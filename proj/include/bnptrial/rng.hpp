#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace bnptrial {

// Derives an independent stream seed from (master, index). Counter based, so
// stream k does not depend on how many other streams were drawn.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1).
    double uniform();
    double normal(double mean = 0.0, double sd = 1.0);
    double exponential(double rate);
    // Gamma with shape/rate parameterization (mean shape / rate).
    double gamma(double shape, double rate);
    // log of a Gamma(shape, 1) variate; stays finite for tiny shapes.
    double log_gamma_variate(double shape);
    double beta(double a, double b);
    int binomial(int n, double p);
    std::size_t uniform_index(std::size_t n);
    // Draws an index with probability proportional to exp(log_weights[i]).
    std::size_t categorical_log(std::span<const double> log_weights);

    std::mt19937_64& engine() { return engine_; }

   private:
    std::mt19937_64 engine_;
};

// Normal(mean, sd) conditioned on x >= lower.
double truncated_normal_lower(Rng& rng, double mean, double sd, double lower);
// Normal(mean, sd) conditioned on x <= upper.
double truncated_normal_upper(Rng& rng, double mean, double sd, double upper);

}  // namespace bnptrial
