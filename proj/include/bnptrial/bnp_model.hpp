#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bnptrial/posterior.hpp"
#include "bnptrial/rng.hpp"
#include "bnptrial/utility.hpp"

namespace bnptrial {

// Prior settings of the two-arm DDP mixture. Shape/rate pairs are on the
// precisions 1/sigma^2 and 1/tau^2.
struct Hyperparameters {
    double mu1 = 0.0;
    double sigma1 = 1.0;
    double sigma2_shape = 0.001;
    double sigma2_rate = 0.001;
    double tau2_shape = 0.5;
    double tau2_rate = 0.5;
    std::array<double, 3> zeta_concentration{0.1, 0.1, 0.1};
    double kappa_a = 1.0;
    double kappa_b = 1.0;
    double alpha_shape = 1.0;
    double alpha_rate = 1.0;
    int truncation = 10;
    // false replaces the truncated N+ atom coupling with an untruncated normal
    bool ordered = true;
    // standardize with the treatment arm's zeros included
    bool standardize_with_zeros = true;
    // pins every atom pair to a tie; used for conjugate checks
    bool force_ties = false;

    void validate() const;
};

struct StandardizationTransform {
    double center = 0.0;
    double scale = 1.0;
    // set when the treatment sample could not provide a positive scale
    bool degenerate = false;

    double forward(double y) const { return (y - center) / scale; }
    double inverse(double z) const { return center + scale * z; }
};

// Nonzero outcomes on the standardized scale plus zero counts per arm.
struct StandardizedData {
    std::array<std::vector<double>, 2> nonzero;
    std::array<int, 2> n_zero{0, 0};

    int n_total(int j) const { return n_zero[j] + static_cast<int>(nonzero[j].size()); }
};

StandardizedData standardize(const TrialData& data, const StandardizationTransform& transform);
// Computes the treatment-arm transform and applies it to both arms.
std::pair<StandardizedData, StandardizationTransform> standardize(const TrialData& data, bool with_zeros = true);

struct DdpState {
    std::vector<double> v;  // H - 1 stick fractions
    std::vector<double> w;  // H weights
    std::vector<double> theta0;
    std::vector<double> theta1;
    std::vector<bool> tie;
    double sigma2 = 1.0;
    double tau2 = 1.0;
    double kappa = 0.5;
    double alpha = 1.0;
    // nu00 = zeta0, nu10 = zeta0 + zeta1
    std::array<double, 3> zeta{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::array<std::vector<int>, 2> z;

    int truncation() const { return static_cast<int>(w.size()); }
    double nu00() const { return zeta[0]; }
    double nu10() const { return zeta[0] + zeta[1]; }
    const std::vector<double>& theta(int j) const { return j == 0 ? theta0 : theta1; }
};

// Throws std::logic_error describing the first violated invariant.
void check_invariants(const DdpState& state, const Hyperparameters& hyper, const StandardizedData* data = nullptr);

DdpState init_state(const StandardizedData& data, const Hyperparameters& hyper, std::uint64_t seed);

// One blocked Gibbs sweep: assignments, sticks, atom pairs with tie flags,
// sigma^2, tau^2, kappa, alpha, zero-mass probabilities.
void gibbs_sweep(DdpState& state, const StandardizedData& data, const Hyperparameters& hyper, Rng& rng);

struct McmcConfig {
    int n_burnin = 2000;
    int n_retained = 2000;
    int thin = 1;
    std::uint64_t seed = 0;
    // keep every retained DdpState (diagnostics and property checks)
    bool keep_states = false;

    void validate() const;
};

struct BnpFit {
    PosteriorDraws draws;
    StandardizationTransform transform;
    std::vector<DdpState> states;
};

BnpFit fit_bnp(const TrialData& data, const Hyperparameters& hyper, const McmcConfig& mcmc,
               const UtilityTable& table);

// Expected utilities (U0, U1) of one state on the original scale.
std::array<double, 2> state_expected_utilities(const DdpState& state, const StandardizationTransform& transform,
                                               const UtilityTable& table);

// Per-arm CDFs F_j(y) on the original Y scale.
std::array<std::vector<double>, 2> posterior_cdf_grid(const DdpState& state,
                                                      const StandardizationTransform& transform,
                                                      const std::vector<double>& grid);

namespace detail {

// Sufficient statistics of the members of one mixture component, per arm.
struct ClusterStats {
    std::array<int, 2> n{0, 0};
    std::array<double, 2> sum{0.0, 0.0};
    std::array<double, 2> sumsq{0.0, 0.0};
};

struct AtomPairMarginals {
    double log_tie;       // log of int N(t | mu1, s1^2) L0(t) L1(t) dt
    double log_separate;  // log of the untied branch integral
};

// Marginal likelihoods of the two branches of the atom-pair prior for one
// component, given sigma^2 and tau^2.
AtomPairMarginals atom_pair_marginals(const ClusterStats& stats, double sigma2, double tau2,
                                      const Hyperparameters& hyper);

// Draws (theta0, theta1, tie) from their exact joint conditional.
void sample_atom_pair(const ClusterStats& stats, double sigma2, double tau2, double kappa,
                      const Hyperparameters& hyper, Rng& rng, double& theta0, double& theta1, bool& tie);

}  // namespace detail

}  // namespace bnptrial
