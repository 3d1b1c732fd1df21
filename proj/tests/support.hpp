#pragma once

// Shared oracles for the unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <boost/math/distributions/normal.hpp>

#include "bnptrial/bnp_model.hpp"
#include "bnptrial/io.hpp"

namespace testsupport {

// sup |F_n - F| for a sample against a continuous CDF.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return d;
}

inline double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double var_of(const std::vector<double>& x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

// Variance of the mean of a correlated series by non-overlapping batch means.
inline double batch_means_var(const std::vector<double>& x, int n_batches) {
    const std::size_t len = x.size() / n_batches;
    std::vector<double> means;
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += x[b * len + i];
        means.push_back(s / static_cast<double>(len));
    }
    return var_of(means) / n_batches;
}

// Forward simulation of the DDP prior and its data, written against the model
// definition rather than the library's sampler.
struct PriorSimulator {
    bnptrial::Hyperparameters hyper;
    std::array<int, 2> n_per_arm{3, 3};
    std::mt19937_64 gen;

    PriorSimulator(const bnptrial::Hyperparameters& h, std::uint64_t seed) : hyper(h), gen(seed) {}

    double gamma(double shape, double rate) { return std::gamma_distribution<double>(shape, 1.0 / rate)(gen); }
    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        return x / (x + gamma(b, 1.0));
    }
    double normal(double m, double s) { return std::normal_distribution<double>(m, s)(gen); }
    double unif() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen); }

    bnptrial::DdpState draw_parameters() {
        const int H = hyper.truncation;
        bnptrial::DdpState s;
        s.alpha = gamma(hyper.alpha_shape, hyper.alpha_rate);
        s.v.resize(H - 1);
        s.w.resize(H);
        double rest = 1.0;
        for (int h = 0; h + 1 < H; ++h) {
            s.v[h] = beta(1.0, s.alpha);
            s.w[h] = s.v[h] * rest;
            rest *= 1.0 - s.v[h];
        }
        s.w[H - 1] = rest;
        s.kappa = beta(hyper.kappa_a, hyper.kappa_b);
        s.tau2 = 1.0 / gamma(hyper.tau2_shape, hyper.tau2_rate);
        s.sigma2 = 1.0 / gamma(hyper.sigma2_shape, hyper.sigma2_rate);
        s.theta0.resize(H);
        s.theta1.resize(H);
        s.tie.resize(H);
        for (int h = 0; h < H; ++h) {
            s.theta1[h] = normal(hyper.mu1, hyper.sigma1);
            s.tie[h] = unif() < s.kappa;
            if (s.tie[h]) {
                s.theta0[h] = s.theta1[h];
            } else {
                const double step = normal(0.0, std::sqrt(s.tau2));
                s.theta0[h] = s.theta1[h] + (hyper.ordered ? std::abs(step) : step);
            }
        }
        double g[3];
        double tot = 0.0;
        for (int k = 0; k < 3; ++k) tot += (g[k] = gamma(hyper.zeta_concentration[k], 1.0));
        for (int k = 0; k < 3; ++k) s.zeta[k] = g[k] / tot;
        return s;
    }

    // Outcomes and their component labels given the parameters.
    bnptrial::StandardizedData draw_data(bnptrial::DdpState& s) {
        bnptrial::StandardizedData d;
        const std::array<double, 2> nu{s.nu00(), s.nu10()};
        for (int j = 0; j < 2; ++j) {
            s.z[j].clear();
            for (int i = 0; i < n_per_arm[j]; ++i) {
                if (unif() < nu[j]) {
                    ++d.n_zero[j];
                    continue;
                }
                double u = unif();
                int h = 0;
                while (h + 1 < static_cast<int>(s.w.size()) && u > s.w[h]) u -= s.w[h++];
                s.z[j].push_back(h);
                d.nonzero[j].push_back(normal(s.theta(j)[h], std::sqrt(s.sigma2)));
            }
        }
        return d;
    }
};

struct GewekeStat {
    std::string name;
    std::function<double(const bnptrial::DdpState&)> g;
};

inline std::vector<GewekeStat> geweke_statistics() {
    return {
        {"sigma2", [](const bnptrial::DdpState& s) { return s.sigma2; }},
        {"1/sigma2", [](const bnptrial::DdpState& s) { return 1.0 / s.sigma2; }},
        {"1/tau2", [](const bnptrial::DdpState& s) { return 1.0 / s.tau2; }},
        {"kappa", [](const bnptrial::DdpState& s) { return s.kappa; }},
        {"alpha", [](const bnptrial::DdpState& s) { return s.alpha; }},
        {"zeta0", [](const bnptrial::DdpState& s) { return s.zeta[0]; }},
        {"zeta1", [](const bnptrial::DdpState& s) { return s.zeta[1]; }},
        {"w1", [](const bnptrial::DdpState& s) { return s.w[0]; }},
        {"theta1_1", [](const bnptrial::DdpState& s) { return s.theta1[0]; }},
        {"theta0_1", [](const bnptrial::DdpState& s) { return s.theta0[0]; }},
    };
}

struct GewekeResult {
    std::vector<std::string> names;
    std::vector<double> z;
    double critical = 0.0;  // Bonferroni two-sided critical value

    bool passed() const {
        for (double v : z) {
            if (!(std::abs(v) < critical)) return false;
        }
        return true;
    }
};

// Marginal-conditional draws (independent prior/data pairs) against the
// successive-conditional chain that alternates one Gibbs sweep with a fresh
// data draw. Equal means for every statistic is the null.
inline GewekeResult run_geweke(const bnptrial::Hyperparameters& hyper, int iterations, std::uint64_t seed,
                               double family_level) {
    const auto stats = geweke_statistics();
    PriorSimulator forward(hyper, seed);
    std::vector<std::vector<double>> mc(stats.size()), sc(stats.size());
    for (int i = 0; i < iterations; ++i) {
        const auto s = forward.draw_parameters();
        for (std::size_t k = 0; k < stats.size(); ++k) mc[k].push_back(stats[k].g(s));
    }
    PriorSimulator chain_data(hyper, seed ^ 0x9e3779b97f4a7c15ULL);
    bnptrial::DdpState state = chain_data.draw_parameters();
    bnptrial::StandardizedData data = chain_data.draw_data(state);
    bnptrial::Rng rng(seed + 17);
    for (int i = 0; i < iterations; ++i) {
        bnptrial::gibbs_sweep(state, data, hyper, rng);
        bnptrial::check_invariants(state, hyper, &data);
        for (std::size_t k = 0; k < stats.size(); ++k) sc[k].push_back(stats[k].g(state));
        data = chain_data.draw_data(state);
    }
    GewekeResult r;
    const double alpha = family_level / static_cast<double>(stats.size());
    r.critical = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    for (std::size_t k = 0; k < stats.size(); ++k) {
        const double se = std::sqrt(var_of(mc[k]) / mc[k].size() + batch_means_var(sc[k], 50));
        r.names.push_back(stats[k].name);
        r.z.push_back((mean_of(mc[k]) - mean_of(sc[k])) / se);
    }
    return r;
}

// Proper priors for the Geweke check; the vague defaults have no usable
// prior moments.
inline bnptrial::Hyperparameters geweke_hyper() {
    bnptrial::Hyperparameters h;
    h.truncation = 3;
    h.sigma2_shape = 4.0;
    h.sigma2_rate = 3.0;
    h.tau2_shape = 3.0;
    h.tau2_rate = 2.0;
    h.zeta_concentration = {1.0, 1.0, 1.0};
    h.alpha_shape = 2.0;
    h.alpha_rate = 2.0;
    return h;
}

struct ConjugateCheck {
    double ks_sigma2 = 1.0;
    bool all_tied = true;
    double theta_mean = 0.0;
    double post_mean = 0.0;
    double post_sd = 0.0;
};

// One tied component (H = 1) reduces the model to y ~ N(theta, sigma^2),
// theta ~ N(0, 1), 1/sigma^2 ~ Ga(a, b). The sigma^2 marginal is integrated on
// a fine log grid and compared with 5000 thinned Gibbs draws.
inline ConjugateCheck conjugate_sigma2_check(std::uint64_t init_seed, std::uint64_t chain_seed) {
    using namespace bnptrial;
    StandardizedData d;
    d.nonzero[0] = {0.42, 0.95, 0.11, 0.63, 1.20, 0.75, 0.38, 0.81};
    d.nonzero[1] = {0.22, 0.58, 0.99, 0.47, 0.70, 0.05, 0.66};
    Hyperparameters h;
    h.truncation = 1;
    h.force_ties = true;

    std::vector<double> all = d.nonzero[0];
    all.insert(all.end(), d.nonzero[1].begin(), d.nonzero[1].end());
    const double n = static_cast<double>(all.size());
    double sum = 0, sumsq = 0;
    for (double y : all) {
        sum += y;
        sumsq += y * y;
    }
    // log posterior density of s = log sigma^2, theta integrated out
    auto log_post = [&](double s) {
        const double v = std::exp(s);
        const double A = n / v + 1.0;
        const double B = sum / v;
        const double loglik = -0.5 * n * std::log(v) - 0.5 * sumsq / v - 0.5 * std::log(A) + 0.5 * B * B / A;
        // Ga(a, b) on the precision, expressed on s: lambda^a exp(-b lambda)
        const double lam = 1.0 / v;
        return loglik + h.sigma2_shape * std::log(lam) - h.sigma2_rate * lam;
    };
    const double lo = std::log(1e-4), hi = std::log(10.0);
    const int grid_n = 40001;
    std::vector<double> grid(grid_n), cdf(grid_n, 0.0);
    double top = -1e300;
    for (int i = 0; i < grid_n; ++i) {
        grid[i] = lo + (hi - lo) * i / (grid_n - 1);
        top = std::max(top, log_post(grid[i]));
    }
    for (int i = 1; i < grid_n; ++i) {
        cdf[i] = cdf[i - 1] + 0.5 * (std::exp(log_post(grid[i]) - top) + std::exp(log_post(grid[i - 1]) - top)) *
                                  (grid[i] - grid[i - 1]);
    }
    for (auto& c : cdf) c /= cdf.back();
    auto sigma2_cdf = [&](double v) {
        const double s = std::log(v);
        if (s <= lo) return 0.0;
        if (s >= hi) return 1.0;
        const double pos = (s - lo) / (hi - lo) * (grid_n - 1);
        const int i = static_cast<int>(pos);
        const double f = pos - i;
        return cdf[i] * (1 - f) + cdf[std::min(i + 1, grid_n - 1)] * f;
    };

    ConjugateCheck out;
    auto s = init_state(d, h, init_seed);
    Rng rng(chain_seed);
    for (int i = 0; i < 1000; ++i) gibbs_sweep(s, d, h, rng);
    std::vector<double> sig, theta;
    for (int i = 0; i < 5000; ++i) {
        for (int k = 0; k < 5; ++k) gibbs_sweep(s, d, h, rng);
        out.all_tied = out.all_tied && s.tie[0];
        sig.push_back(s.sigma2);
        theta.push_back(s.theta1[0]);
    }
    out.ks_sigma2 = ks_distance(sig, sigma2_cdf);

    // theta | data is a scale mixture of normals over the sigma^2 posterior
    double num = 0.0, den = 0.0, second = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        const double v = std::exp(grid[i]);
        const double wgt = std::exp(log_post(grid[i]) - top);
        const double A = n / v + 1.0;
        const double m = sum / v / A;
        num += wgt * m;
        second += wgt * (1.0 / A + m * m);
        den += wgt;
    }
    out.post_mean = num / den;
    out.post_sd = std::sqrt(second / den - out.post_mean * out.post_mean);
    out.theta_mean = mean_of(theta);
    return out;
}

// Runs the CLI, capturing stdout+stderr; returns the exit status.
inline int run_cli(const std::string& args, std::string* output = nullptr, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + BNPTRIAL_CLI + "\" " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return -1;
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int status = pclose(p);
    if (output) *output = out;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("bnptrial_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
