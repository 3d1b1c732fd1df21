#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnptrial/bnp_model.hpp"
#include "bnptrial/posterior.hpp"
#include "bnptrial/utility.hpp"

namespace bnptrial {

// Zero-enriched Weibull on the days scale: pi * delta_0 + (1 - pi) * Weibull
// with density (shape / scale) t^(shape - 1) exp(-t^shape / scale), so that
// `scale` has a conjugate inverse-gamma prior.
struct WeibullParams {
    double pi = 0.5;
    double shape = 1.0;  // lambda1
    double scale = 1.0;  // lambda2
};

struct WeibullState {
    std::array<WeibullParams, 2> arm;
};

// Per-arm prior constants. scale ~ InvGamma(b1, b2); the shape prior is
// p(shape | scale) ∝ shape^a1 exp(-a2 shape - a3^shape / scale).
struct WeibullArmPrior {
    double b1 = 3.0;
    double b2 = 2.0;
    double a1 = 1.0;
    double a2 = 2.0;
    double a3 = 2.0;
};

struct WeibullHyper {
    double pi_a = 0.1;
    double pi_b = 0.1;
    double scale_prior_variance = 10.0;
    double a1 = 1.0;
    double a3 = 2.0;
    // When set, used instead of matching the prior to the current data.
    std::array<std::optional<WeibullArmPrior>, 2> fixed_prior;
};

struct WeibullMle {
    double shape = 1.0;
    double scale = 1.0;
    bool interior = true;  // false when the optimum sits on a search bound
};

// Maximum likelihood for positive resolution times; throws for an empty sample.
WeibullMle weibull_mle(std::span<const double> days);

// Prior matched to the data: E[scale] equals the MLE, Var[scale] equals
// hyper.scale_prior_variance, a2 = sum(log t) + 2. Falls back to a unit-scale
// prior (with a warning) when there are no positive times.
WeibullArmPrior match_arm_prior(std::span<const double> positive_days, const WeibullHyper& hyper,
                                std::vector<std::string>* warnings = nullptr);

double weibull_survival(double t, const WeibullParams& p);
// Closed-form expected utility of one arm.
double weibull_expected_utility(const WeibullParams& p, const UtilityTable& table);

// Days per arm from Y = log(T + 1). Continuous outcomes below Y = 0 are mapped
// to a small positive time.
std::array<std::vector<double>, 2> days_from_trial_data(const TrialData& data);

// Metropolis-within-Gibbs fit on T = exp(Y) - 1. Diagnostics include the
// post-burn-in shape acceptance rate of each arm. With mcmc.keep_states and a
// non-null `states`, every retained state is stored.
PosteriorDraws fit_weibull(const TrialData& data, const WeibullHyper& hyper, const McmcConfig& mcmc,
                           const UtilityTable& table, std::vector<WeibullState>* states = nullptr);

}  // namespace bnptrial
