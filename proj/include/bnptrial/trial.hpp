#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bnptrial/bnp_model.hpp"
#include "bnptrial/posterior.hpp"
#include "bnptrial/truth.hpp"
#include "bnptrial/utility.hpp"
#include "bnptrial/weibull_model.hpp"

namespace bnptrial {

enum class ModelKind { bnp_ordered, bnp_unordered, zero_weibull };

std::string to_string(ModelKind m);
// Accepts "bnp-ordered", "bnp-unordered", "zero-weibull" (underscores too).
ModelKind parse_model_kind(const std::string& s);

struct DesignConfig {
    int cohort_size = 16;
    int max_n = 48;
    double epsilon_u = 18.0;
    double xi_lower = 0.05;
    double xi_upper = 0.9;
    ModelKind model = ModelKind::bnp_ordered;

    // Throws std::invalid_argument unless xi_lower < 0.5 < xi_upper, the cohort
    // is even and divides max_n.
    void validate() const;
    int n_looks() const { return max_n / cohort_size; }
};

enum class Decision { continue_trial, stop_superior, stop_futile };
std::string to_string(Decision d);

// Fraction of draws with U1 > U0 + epsilon_u.
double posterior_eta(const PosteriorDraws& draws, double epsilon_u);

// At n == max_n the trial is forced to stop and the decision follows the
// terminal rule.
Decision interim_decision(double eta_hat, const DesignConfig& design, int n);

// 1 recommends the treatment arm: eta_hat > 0.5.
int terminal_decision(double eta_hat);

// m / 2 outcomes per arm, control drawn first.
TrialData generate_cohort(const TruthSpec& control, const TruthSpec& treatment, int m, std::uint64_t seed);

// Posterior engine used at each look.
class TrialModel {
   public:
    virtual ~TrialModel() = default;
    // `data` holds all outcomes accrued so far, in enrollment order.
    virtual PosteriorDraws fit(const TrialData& data, std::uint64_t seed) const = 0;
};

struct ModelSettings {
    Hyperparameters bnp;
    WeibullHyper weibull;
    McmcConfig mcmc;
    UtilityTable utility = UtilityTable::elicited();
    // Weibull only: match the prior to the first cohort and keep it fixed.
    bool freeze_weibull_prior = false;
};

std::unique_ptr<TrialModel> make_model(const DesignConfig& design, const ModelSettings& settings);

struct TrialResult {
    std::vector<double> interim_etas;
    std::vector<Decision> decisions;
    std::vector<double> delta_u_means;  // posterior mean of U1 - U0 per look
    int terminal = 0;
    int n_used = 0;
    std::uint64_t seed = 0;

    bool stopped_early(const DesignConfig& design) const { return n_used < design.max_n; }
};

// Looks at n = m, 2m, ..., N; refits on all accrued data each time.
TrialResult run_trial(const TruthSpec& control, const TruthSpec& treatment, const DesignConfig& design,
                      const TrialModel& model, std::uint64_t seed);

// Seeds used inside a replication, fixed by look index so every look's data
// and fit are independent of earlier stopping.
std::uint64_t cohort_seed(std::uint64_t trial_seed, int look);
std::uint64_t fit_seed(std::uint64_t trial_seed, int look);

}  // namespace bnptrial
