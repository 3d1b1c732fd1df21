#include "bnptrial/trial.hpp"

#include <algorithm>
#include <stdexcept>

namespace bnptrial {

namespace {

class BnpTrialModel final : public TrialModel {
   public:
    BnpTrialModel(ModelSettings settings, bool ordered) : settings_(std::move(settings)) {
        settings_.bnp.ordered = ordered;
        settings_.bnp.validate();
    }
    PosteriorDraws fit(const TrialData& data, std::uint64_t seed) const override {
        McmcConfig mcmc = settings_.mcmc;
        mcmc.seed = seed;
        mcmc.keep_states = false;
        return fit_bnp(data, settings_.bnp, mcmc, settings_.utility).draws;
    }

   private:
    ModelSettings settings_;
};

class WeibullTrialModel final : public TrialModel {
   public:
    WeibullTrialModel(ModelSettings settings, int cohort_size)
        : settings_(std::move(settings)), cohort_size_(cohort_size) {}
    PosteriorDraws fit(const TrialData& data, std::uint64_t seed) const override {
        McmcConfig mcmc = settings_.mcmc;
        mcmc.seed = seed;
        WeibullHyper hyper = settings_.weibull;
        if (settings_.freeze_weibull_prior) {
            // the first cohort is the first m/2 entries of each arm
            TrialData first;
            for (int j = 0; j < 2; ++j) {
                const auto take = std::min<std::size_t>(data.y[j].size(), cohort_size_ / 2);
                first.y[j].assign(data.y[j].begin(), data.y[j].begin() + take);
            }
            const auto days = days_from_trial_data(first);
            for (int j = 0; j < 2; ++j) {
                if (hyper.fixed_prior[j]) continue;
                std::vector<double> positive;
                for (double t : days[j]) {
                    if (t > 0.0) positive.push_back(t);
                }
                hyper.fixed_prior[j] = match_arm_prior(positive, hyper);
            }
        }
        return fit_weibull(data, hyper, mcmc, settings_.utility);
    }

   private:
    ModelSettings settings_;
    int cohort_size_;
};

}  // namespace

std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::bnp_ordered:
            return "bnp-ordered";
        case ModelKind::bnp_unordered:
            return "bnp-unordered";
        case ModelKind::zero_weibull:
            return "zero-weibull";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& s) {
    std::string k = s;
    std::replace(k.begin(), k.end(), '_', '-');
    if (k == "bnp-ordered") return ModelKind::bnp_ordered;
    if (k == "bnp-unordered") return ModelKind::bnp_unordered;
    if (k == "zero-weibull") return ModelKind::zero_weibull;
    throw std::invalid_argument("unknown model '" + s + "' (expected bnp-ordered, bnp-unordered or zero-weibull)");
}

std::string to_string(Decision d) {
    switch (d) {
        case Decision::continue_trial:
            return "continue";
        case Decision::stop_superior:
            return "stop_superior";
        case Decision::stop_futile:
            return "stop_futile";
    }
    return "?";
}

void DesignConfig::validate() const {
    if (cohort_size <= 0 || cohort_size % 2 != 0) throw std::invalid_argument("cohort size must be positive and even");
    if (max_n <= 0 || max_n % cohort_size != 0)
        throw std::invalid_argument("maximum sample size must be a positive multiple of the cohort size");
    if (!(epsilon_u >= 0.0)) throw std::invalid_argument("epsilon_u must be nonnegative");
    if (!(xi_lower > 0.0 && xi_lower < 0.5 && xi_upper > 0.5 && xi_upper < 1.0))
        throw std::invalid_argument("thresholds must satisfy 0 < xi_lower < 0.5 < xi_upper < 1");
}

double posterior_eta(const PosteriorDraws& draws, double epsilon_u) {
    if (draws.u_bar0.empty() || draws.u_bar0.size() != draws.u_bar1.size())
        throw std::invalid_argument("posterior_eta: empty or mismatched draws");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws.u_bar0.size(); ++i) {
        if (draws.u_bar1[i] > draws.u_bar0[i] + epsilon_u) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(draws.u_bar0.size());
}

Decision interim_decision(double eta_hat, const DesignConfig& design, int n) {
    if (!(eta_hat >= 0.0 && eta_hat <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
    if (n <= 0 || n > design.max_n || n % design.cohort_size != 0)
        throw std::invalid_argument("invalid look size " + std::to_string(n));
    if (n == design.max_n) return terminal_decision(eta_hat) == 1 ? Decision::stop_superior : Decision::stop_futile;
    if (eta_hat >= design.xi_upper) return Decision::stop_superior;
    if (eta_hat <= design.xi_lower) return Decision::stop_futile;
    return Decision::continue_trial;
}

int terminal_decision(double eta_hat) { return eta_hat > 0.5 ? 1 : 0; }

TrialData generate_cohort(const TruthSpec& control, const TruthSpec& treatment, int m, std::uint64_t seed) {
    if (m <= 0 || m % 2 != 0) throw std::invalid_argument("cohort size must be positive and even");
    Rng rng(seed);
    TrialData out;
    for (int i = 0; i < m / 2; ++i) out.y[0].push_back(control.sample(rng));
    for (int i = 0; i < m / 2; ++i) out.y[1].push_back(treatment.sample(rng));
    return out;
}

std::unique_ptr<TrialModel> make_model(const DesignConfig& design, const ModelSettings& settings) {
    switch (design.model) {
        case ModelKind::bnp_ordered:
            return std::make_unique<BnpTrialModel>(settings, true);
        case ModelKind::bnp_unordered:
            return std::make_unique<BnpTrialModel>(settings, false);
        case ModelKind::zero_weibull:
            return std::make_unique<WeibullTrialModel>(settings, design.cohort_size);
    }
    throw std::invalid_argument("unknown model kind");
}

std::uint64_t cohort_seed(std::uint64_t trial_seed, int look) { return split_seed(trial_seed, 2 * look); }
std::uint64_t fit_seed(std::uint64_t trial_seed, int look) { return split_seed(trial_seed, 2 * look + 1); }

TrialResult run_trial(const TruthSpec& control, const TruthSpec& treatment, const DesignConfig& design,
                      const TrialModel& model, std::uint64_t seed) {
    design.validate();
    TrialResult result;
    result.seed = seed;
    TrialData data;
    for (int look = 0; look < design.n_looks(); ++look) {
        data.append(generate_cohort(control, treatment, design.cohort_size, cohort_seed(seed, look)));
        const int n = (look + 1) * design.cohort_size;
        const PosteriorDraws draws = model.fit(data, fit_seed(seed, look));
        const double eta = posterior_eta(draws, design.epsilon_u);
        const Decision d = interim_decision(eta, design, n);
        result.interim_etas.push_back(eta);
        result.decisions.push_back(d);
        result.delta_u_means.push_back(draws.mean_delta());
        result.n_used = n;
        if (d != Decision::continue_trial) {
            result.terminal = terminal_decision(eta);
            break;
        }
    }
    return result;
}

}  // namespace bnptrial
