#include "bnptrial/weibull_model.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <stdexcept>

#include "bnptrial/rng.hpp"

namespace bnptrial {

namespace {

constexpr double kMinShape = 0.05;
constexpr double kMaxShape = 20.0;
constexpr double kMinDays = 1e-3;

struct ArmSample {
    int n_zero = 0;
    std::vector<double> days;  // positive times
    double sum_log = 0.0;
};

double sum_pow(const std::vector<double>& t, double shape) {
    double s = 0.0;
    for (double x : t) s += std::pow(x, shape);
    return s;
}

double log_shape_target(double shape, double scale, const ArmSample& a, const WeibullArmPrior& p) {
    const double n = static_cast<double>(a.days.size());
    return (p.a1 + n) * std::log(shape) - p.a2 * shape + (shape - 1.0) * a.sum_log -
           (std::pow(p.a3, shape) + sum_pow(a.days, shape)) / scale;
}

}  // namespace

WeibullMle weibull_mle(std::span<const double> days) {
    if (days.empty()) throw std::invalid_argument("weibull_mle: no positive resolution times");
    std::vector<double> logs;
    logs.reserve(days.size());
    for (double t : days) {
        if (!(t > 0.0)) throw std::invalid_argument("weibull_mle: times must be positive");
        logs.push_back(std::log(t));
    }
    const double n = static_cast<double>(days.size());
    double sum_log = 0.0;
    for (double l : logs) sum_log += l;
    // profile: scale(k) = mean(t^k)
    auto neg_profile = [&](double log_k) {
        const double k = std::exp(log_k);
        double s = 0.0;
        for (double l : logs) s += std::exp(k * l);
        const double scale = s / n;
        return -(n * std::log(k) - n * std::log(scale) + (k - 1.0) * sum_log - n);
    };
    const auto [log_k, value] =
        boost::math::tools::brent_find_minima(neg_profile, std::log(kMinShape), std::log(kMaxShape), 40);
    (void)value;
    WeibullMle out;
    out.shape = std::exp(log_k);
    double s = 0.0;
    for (double l : logs) s += std::exp(out.shape * l);
    out.scale = s / n;
    out.interior = log_k > std::log(kMinShape) + 1e-3 && log_k < std::log(kMaxShape) - 1e-3;
    return out;
}

WeibullArmPrior match_arm_prior(std::span<const double> positive_days, const WeibullHyper& hyper,
                                std::vector<std::string>* warnings) {
    WeibullArmPrior p;
    p.a1 = hyper.a1;
    p.a3 = hyper.a3;
    double mean = 1.0;
    if (positive_days.empty()) {
        p.a2 = 2.0;
        if (warnings) warnings->push_back("arm without positive times: prior-only Weibull shape/scale");
    } else {
        const WeibullMle mle = weibull_mle(positive_days);
        mean = mle.scale;
        double sum_log = 0.0;
        for (double t : positive_days) sum_log += std::log(t);
        p.a2 = sum_log + 2.0;
        if (!mle.interior && warnings) warnings->push_back("Weibull MLE on a search bound");
    }
    p.b1 = 2.0 + mean * mean / hyper.scale_prior_variance;
    p.b2 = mean * (p.b1 - 1.0);
    return p;
}

double weibull_survival(double t, const WeibullParams& p) { return std::exp(-std::pow(t, p.shape) / p.scale); }

double weibull_expected_utility(const WeibullParams& p, const UtilityTable& table) {
    const double cont = table.continuous_expectation(
        [&](double t) { return -std::expm1(-std::pow(t, p.shape) / p.scale); });
    const double top = table.zero_utility();
    return top - (1.0 - p.pi) * (top - cont);
}

std::array<std::vector<double>, 2> days_from_trial_data(const TrialData& data) {
    std::array<std::vector<double>, 2> out;
    for (int j = 0; j < 2; ++j) {
        out[j].reserve(data.y[j].size());
        for (double y : data.y[j]) out[j].push_back(y == 0.0 ? 0.0 : std::max(std::expm1(y), kMinDays));
    }
    return out;
}

PosteriorDraws fit_weibull(const TrialData& data, const WeibullHyper& hyper, const McmcConfig& mcmc,
                           const UtilityTable& table, std::vector<WeibullState>* states) {
    mcmc.validate();
    PosteriorDraws out;
    const auto days = days_from_trial_data(data);
    std::array<ArmSample, 2> arms;
    std::array<WeibullArmPrior, 2> prior;
    WeibullState state;
    for (int j = 0; j < 2; ++j) {
        for (double t : days[j]) {
            if (t == 0.0) {
                ++arms[j].n_zero;
            } else {
                arms[j].days.push_back(t);
                arms[j].sum_log += std::log(t);
            }
        }
        prior[j] = hyper.fixed_prior[j] ? *hyper.fixed_prior[j] : match_arm_prior(arms[j].days, hyper, &out.warnings);
        const double n = static_cast<double>(arms[j].days.size() + arms[j].n_zero);
        state.arm[j].pi = (arms[j].n_zero + 0.5) / (n + 1.0);
        state.arm[j].scale = prior[j].b2 / (prior[j].b1 - 1.0);
        state.arm[j].shape = arms[j].days.size() >= 2 ? std::clamp(weibull_mle(arms[j].days).shape, 0.2, 5.0) : 1.0;
    }

    Rng rng(split_seed(mcmc.seed, 2));
    std::array<double, 2> step{0.5, 0.5};
    std::array<int, 2> accepted{0, 0};
    std::array<int, 2> proposed{0, 0};
    std::array<int, 2> kept_accepted{0, 0};

    auto sweep = [&](bool adapting) {
        for (int j = 0; j < 2; ++j) {
            auto& p = state.arm[j];
            const auto& a = arms[j];
            const double nc = static_cast<double>(a.days.size());
            p.pi = rng.beta(hyper.pi_a + a.n_zero, hyper.pi_b + nc);
            const double rate = prior[j].b2 + sum_pow(a.days, p.shape) + std::pow(prior[j].a3, p.shape);
            p.scale = 1.0 / rng.gamma(prior[j].b1 + nc, rate);

            // random walk on log(shape); the log-Jacobian is log(shape)
            const double cur = log_shape_target(p.shape, p.scale, a, prior[j]) + std::log(p.shape);
            const double prop_shape = p.shape * std::exp(step[j] * rng.normal());
            const double prop = log_shape_target(prop_shape, p.scale, a, prior[j]) + std::log(prop_shape);
            ++proposed[j];
            if (std::log(rng.uniform()) < prop - cur) {
                p.shape = prop_shape;
                ++accepted[j];
                if (!adapting) ++kept_accepted[j];
            }
            if (adapting && proposed[j] == 50) {
                const double rate_acc = accepted[j] / 50.0;
                if (rate_acc > 0.45) step[j] *= 1.25;
                if (rate_acc < 0.25) step[j] /= 1.25;
                accepted[j] = 0;
                proposed[j] = 0;
            }
        }
    };

    for (int it = 0; it < mcmc.n_burnin; ++it) sweep(true);
    out.u_bar0.reserve(mcmc.n_retained);
    out.u_bar1.reserve(mcmc.n_retained);
    for (int r = 0; r < mcmc.n_retained; ++r) {
        for (int k = 0; k < mcmc.thin; ++k) sweep(false);
        out.u_bar0.push_back(weibull_expected_utility(state.arm[0], table));
        out.u_bar1.push_back(weibull_expected_utility(state.arm[1], table));
        if (states && mcmc.keep_states) states->push_back(state);
    }
    const double kept = static_cast<double>(mcmc.n_retained) * mcmc.thin;
    out.diagnostics["shape_acceptance_arm0"] = kept_accepted[0] / kept;
    out.diagnostics["shape_acceptance_arm1"] = kept_accepted[1] / kept;
    for (int j = 0; j < 2; ++j) {
        out.diagnostics[j == 0 ? "a2_arm0" : "a2_arm1"] = prior[j].a2;
        out.diagnostics[j == 0 ? "b1_arm0" : "b1_arm1"] = prior[j].b1;
    }
    return out;
}

}  // namespace bnptrial
