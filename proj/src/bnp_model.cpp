#include "bnptrial/bnp_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bnptrial/stats.hpp"

namespace bnptrial {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.83787706640934548356;

// Variance clamps on the standardized scale. They only bind when an arm has no
// continuous data and the vague precision prior is sampled directly.
constexpr double kMinVariance = 1e-8;
constexpr double kMaxVariance = 1e8;
constexpr double kMaxStick = 1.0 - 0x1.0p-52;
constexpr double kMinStick = 1e-300;

// exp(c - (A t^2 - 2 B t) / 2) as a function of t.
struct GaussFactor {
    double c = 0.0;
    double a = 0.0;
    double b = 0.0;

    GaussFactor& operator+=(const GaussFactor& o) {
        c += o.c;
        a += o.a;
        b += o.b;
        return *this;
    }
    double log_integral() const { return c + 0.5 * b * b / a + 0.5 * (kLog2Pi - std::log(a)); }
    double mean() const { return b / a; }
    double var() const { return 1.0 / a; }
};

GaussFactor likelihood_factor(const detail::ClusterStats& s, int j, double sigma2) {
    const double n = s.n[j];
    return {-0.5 * n * (kLog2Pi + std::log(sigma2)) - 0.5 * s.sumsq[j] / sigma2, n / sigma2, s.sum[j] / sigma2};
}

GaussFactor prior_factor(const Hyperparameters& h) {
    const double v = h.sigma1 * h.sigma1;
    return {-0.5 * (kLog2Pi + std::log(v)) - 0.5 * h.mu1 * h.mu1 / v, 1.0 / v, h.mu1 / v};
}

// Pieces of the untied branch after integrating theta0 out analytically.
struct SeparateBranch {
    GaussFactor outer;  // remaining Gaussian factor in theta1
    double inner_a;     // precision of theta0 | theta1
    double inner_b0;    // theta0 | theta1 has mean (inner_b0 + theta1 / tau2) / inner_a
    double gamma;       // truncation probability is Phi(gamma + delta * theta1)
    double delta;
};

SeparateBranch separate_branch(const detail::ClusterStats& s, double sigma2, double tau2,
                               const Hyperparameters& h) {
    const GaussFactor l0 = likelihood_factor(s, 0, sigma2);
    const GaussFactor l1 = likelihood_factor(s, 1, sigma2);
    const double a_in = l0.a + 1.0 / tau2;
    GaussFactor coupled{l0.c + 0.5 * l0.b * l0.b / a_in - 0.5 * std::log(tau2 * a_in), l0.a / (tau2 * a_in),
                        l0.b / (tau2 * a_in)};
    SeparateBranch out;
    out.outer = prior_factor(h);
    out.outer += l1;
    out.outer += coupled;
    out.inner_a = a_in;
    out.inner_b0 = l0.b;
    const double root = std::sqrt(a_in);
    out.gamma = l0.b / root;
    out.delta = -l0.a / root;
    if (h.ordered) out.outer.c += std::log(2.0);
    return out;
}

std::array<double, 3> dirichlet(Rng& rng, const std::array<double, 3>& conc) {
    std::array<double, 3> lg{};
    for (int k = 0; k < 3; ++k) lg[k] = rng.log_gamma_variate(conc[k]);
    const double top = std::max({lg[0], lg[1], lg[2]});
    double total = 0.0;
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
        out[k] = std::exp(lg[k] - top);
        total += out[k];
    }
    for (auto& x : out) x /= total;
    return out;
}

double share(double a, double b) {
    const double s = a + b;
    return s > 0.0 ? a / s : 0.5;
}

double clamp_variance_from_log_precision(double log_precision) {
    const double v = std::exp(-log_precision);
    return std::clamp(v, kMinVariance, kMaxVariance);
}

void refresh_weights(DdpState& s) {
    const int H = s.truncation();
    double rest = 1.0;
    for (int h = 0; h + 1 < H; ++h) {
        s.w[h] = s.v[h] * rest;
        rest *= 1.0 - s.v[h];
    }
    s.w[H - 1] = rest;
}

}  // namespace

void Hyperparameters::validate() const {
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(sigma1, "sigma1");
    positive(sigma2_shape, "sigma2_shape");
    positive(sigma2_rate, "sigma2_rate");
    positive(tau2_shape, "tau2_shape");
    positive(tau2_rate, "tau2_rate");
    for (double c : zeta_concentration) positive(c, "zeta concentration");
    positive(kappa_a, "kappa_a");
    positive(kappa_b, "kappa_b");
    positive(alpha_shape, "alpha_shape");
    positive(alpha_rate, "alpha_rate");
    if (truncation < 1) throw std::invalid_argument("truncation level H must be >= 1");
}

void McmcConfig::validate() const {
    if (n_burnin < 0) throw std::invalid_argument("n_burnin must be >= 0");
    if (n_retained < 1) throw std::invalid_argument("n_retained must be >= 1");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
}

StandardizedData standardize(const TrialData& data, const StandardizationTransform& transform) {
    StandardizedData out;
    for (int j = 0; j < 2; ++j) {
        for (double y : data.y[j]) {
            if (y == 0.0) {
                ++out.n_zero[j];
            } else {
                out.nonzero[j].push_back(transform.forward(y));
            }
        }
    }
    return out;
}

std::pair<StandardizedData, StandardizationTransform> standardize(const TrialData& data, bool with_zeros) {
    std::vector<double> ref;
    for (double y : data.y[1]) {
        if (with_zeros || y != 0.0) ref.push_back(y);
    }
    StandardizationTransform t;
    const double sd = sample_sd(ref);
    if (ref.size() >= 2 && sd > 0.0) {
        t.center = sample_mean(ref);
        t.scale = sd;
    } else {
        t.center = ref.empty() ? 0.0 : sample_mean(ref);
        t.scale = 1.0;
        t.degenerate = true;
    }
    return {standardize(data, t), t};
}

void check_invariants(const DdpState& s, const Hyperparameters& hyper, const StandardizedData* data) {
    auto fail = [](const std::string& what) { throw std::logic_error("DdpState invariant violated: " + what); };
    const int H = hyper.truncation;
    if (static_cast<int>(s.w.size()) != H || static_cast<int>(s.v.size()) != H - 1 ||
        static_cast<int>(s.theta0.size()) != H || static_cast<int>(s.theta1.size()) != H ||
        static_cast<int>(s.tie.size()) != H)
        fail("component vectors do not have length H");
    double total = 0.0;
    double rest = 1.0;
    for (int h = 0; h < H; ++h) {
        if (h + 1 < H) {
            if (!(s.v[h] > 0.0 && s.v[h] < 1.0)) fail("stick fraction outside (0,1)");
            if (std::abs(s.w[h] - s.v[h] * rest) > 1e-12) fail("weights inconsistent with sticks");
            rest *= 1.0 - s.v[h];
        }
        if (!(s.w[h] >= 0.0)) fail("negative weight");
        total += s.w[h];
        if (!std::isfinite(s.theta0[h]) || !std::isfinite(s.theta1[h])) fail("non-finite atom");
        if (hyper.ordered && s.theta0[h] < s.theta1[h]) fail("theta0 < theta1 under ordering");
        if (s.tie[h] && s.theta0[h] != s.theta1[h]) fail("tied atoms differ");
    }
    if (std::abs(total - 1.0) > 1e-10) fail("weights do not sum to 1");
    if (!(s.sigma2 > 0.0) || !(s.tau2 > 0.0) || !(s.alpha > 0.0)) fail("nonpositive variance or concentration");
    if (!(s.kappa >= 0.0 && s.kappa <= 1.0)) fail("kappa outside [0,1]");
    double zsum = 0.0;
    for (double x : s.zeta) {
        if (!(x >= 0.0)) fail("negative zeta");
        zsum += x;
    }
    if (std::abs(zsum - 1.0) > 1e-10) fail("zeta not a simplex");
    if (s.nu10() < s.nu00()) fail("nu10 < nu00");
    if (data) {
        for (int j = 0; j < 2; ++j) {
            if (s.z[j].size() != data->nonzero[j].size()) fail("assignment count mismatch");
            for (int zz : s.z[j]) {
                if (zz < 0 || zz >= H) fail("assignment out of range");
            }
        }
    }
}

namespace detail {

AtomPairMarginals atom_pair_marginals(const ClusterStats& stats, double sigma2, double tau2,
                                      const Hyperparameters& hyper) {
    GaussFactor tied = prior_factor(hyper);
    tied += likelihood_factor(stats, 0, sigma2);
    tied += likelihood_factor(stats, 1, sigma2);

    const SeparateBranch sep = separate_branch(stats, sigma2, tau2, hyper);
    double log_sep = sep.outer.log_integral();
    if (hyper.ordered) {
        const double m = sep.outer.mean();
        const double v = sep.outer.var();
        log_sep += log_normal_cdf((sep.gamma + sep.delta * m) / std::sqrt(1.0 + sep.delta * sep.delta * v));
    }
    return {tied.log_integral(), log_sep};
}

void sample_atom_pair(const ClusterStats& stats, double sigma2, double tau2, double kappa,
                      const Hyperparameters& hyper, Rng& rng, double& theta0, double& theta1, bool& tie) {
    if (hyper.force_ties) {
        tie = true;
    } else {
        const AtomPairMarginals m = atom_pair_marginals(stats, sigma2, tau2, hyper);
        const double lt = kappa > 0.0 ? std::log(kappa) + m.log_tie : kNegInf;
        const double ls = kappa < 1.0 ? std::log1p(-kappa) + m.log_separate : kNegInf;
        const double p_tie = std::exp(lt - log_sum_exp(lt, ls));
        tie = rng.uniform() < p_tie;
    }

    if (tie) {
        GaussFactor f = prior_factor(hyper);
        f += likelihood_factor(stats, 0, sigma2);
        f += likelihood_factor(stats, 1, sigma2);
        theta1 = rng.normal(f.mean(), std::sqrt(f.var()));
        theta0 = theta1;
        return;
    }

    const SeparateBranch sep = separate_branch(stats, sigma2, tau2, hyper);
    const double m = sep.outer.mean();
    const double sd = std::sqrt(sep.outer.var());
    if (!hyper.ordered) {
        theta1 = rng.normal(m, sd);
        const double mean0 = (sep.inner_b0 + theta1 / tau2) / sep.inner_a;
        theta0 = rng.normal(mean0, 1.0 / std::sqrt(sep.inner_a));
        return;
    }
    // theta1 has density N(m, sd^2) * Phi(gamma + delta * theta1). With
    // theta1 = m + sd * Z and W ~ N(0,1), condition on S = W - d Z <= c.
    const double c = sep.gamma + sep.delta * m;
    const double d = sep.delta * sd;
    const double var_s = 1.0 + d * d;
    const double s = truncated_normal_upper(rng, 0.0, std::sqrt(var_s), c);
    const double zed = rng.normal(-d * s / var_s, 1.0 / std::sqrt(var_s));
    theta1 = m + sd * zed;
    const double mean0 = (sep.inner_b0 + theta1 / tau2) / sep.inner_a;
    theta0 = truncated_normal_lower(rng, mean0, 1.0 / std::sqrt(sep.inner_a), theta1);
    // the truncated draw is exact, but keep the ordering exact under rounding
    if (theta0 < theta1) theta0 = theta1;
}

}  // namespace detail

DdpState init_state(const StandardizedData& data, const Hyperparameters& hyper, std::uint64_t seed) {
    hyper.validate();
    Rng rng(seed);
    const int H = hyper.truncation;
    DdpState s;
    s.v.assign(H - 1, 0.5);
    s.w.assign(H, 0.0);
    s.theta0.assign(H, 0.0);
    s.theta1.assign(H, 0.0);
    s.tie.assign(H, false);

    s.alpha = rng.gamma(hyper.alpha_shape, hyper.alpha_rate);
    s.alpha = std::max(s.alpha, 1e-6);
    for (auto& v : s.v) v = std::clamp(rng.beta(1.0, s.alpha), kMinStick, kMaxStick);
    refresh_weights(s);
    s.kappa = hyper.force_ties ? 1.0 : rng.beta(hyper.kappa_a, hyper.kappa_b);
    s.tau2 = clamp_variance_from_log_precision(rng.log_gamma_variate(hyper.tau2_shape) - std::log(hyper.tau2_rate));
    // The vague sigma^2 prior is useless as a starting point; start at a
    // within-cluster scale of half the standardized spread.
    s.sigma2 = 0.25;
    for (int h = 0; h < H; ++h) {
        s.theta1[h] = rng.normal(hyper.mu1, hyper.sigma1);
        s.tie[h] = hyper.force_ties || rng.uniform() < s.kappa;
        if (s.tie[h]) {
            s.theta0[h] = s.theta1[h];
        } else {
            const double step = rng.normal(0.0, std::sqrt(s.tau2));
            s.theta0[h] = s.theta1[h] + (hyper.ordered ? std::abs(step) : step);
        }
    }
    s.zeta = dirichlet(rng, hyper.zeta_concentration);
    for (int j = 0; j < 2; ++j) {
        const auto& atoms = s.theta(j);
        s.z[j].clear();
        for (double y : data.nonzero[j]) {
            int best = 0;
            for (int h = 1; h < H; ++h) {
                if (std::abs(y - atoms[h]) < std::abs(y - atoms[best])) best = h;
            }
            s.z[j].push_back(best);
        }
    }
    return s;
}

void gibbs_sweep(DdpState& s, const StandardizedData& data, const Hyperparameters& hyper, Rng& rng) {
    const int H = hyper.truncation;
    std::vector<double> logp(H);

    // (a) component assignments of the continuous observations
    {
        std::vector<double> logw(H);
        for (int h = 0; h < H; ++h) logw[h] = s.w[h] > 0.0 ? std::log(s.w[h]) : kNegInf;
        const double inv2s = 0.5 / s.sigma2;
        for (int j = 0; j < 2; ++j) {
            const auto& atoms = s.theta(j);
            const auto& ys = data.nonzero[j];
            s.z[j].resize(ys.size());
            for (std::size_t i = 0; i < ys.size(); ++i) {
                for (int h = 0; h < H; ++h) {
                    const double d = ys[i] - atoms[h];
                    logp[h] = logw[h] - d * d * inv2s;
                }
                s.z[j][i] = static_cast<int>(rng.categorical_log(logp));
            }
        }
    }

    std::vector<detail::ClusterStats> stats(H);
    for (int j = 0; j < 2; ++j) {
        const auto& ys = data.nonzero[j];
        for (std::size_t i = 0; i < ys.size(); ++i) {
            auto& st = stats[s.z[j][i]];
            st.n[j] += 1;
            st.sum[j] += ys[i];
            st.sumsq[j] += ys[i] * ys[i];
        }
    }

    // (b) stick fractions
    {
        std::vector<int> tail(H + 1, 0);
        for (int h = H - 1; h >= 0; --h) tail[h] = tail[h + 1] + stats[h].n[0] + stats[h].n[1];
        for (int h = 0; h + 1 < H; ++h) {
            const int nh = stats[h].n[0] + stats[h].n[1];
            s.v[h] = std::clamp(rng.beta(1.0 + nh, s.alpha + tail[h + 1]), kMinStick, kMaxStick);
        }
        refresh_weights(s);
    }

    // (c) atom pairs and tie indicators
    for (int h = 0; h < H; ++h) {
        bool tie = false;
        detail::sample_atom_pair(stats[h], s.sigma2, s.tau2, s.kappa, hyper, rng, s.theta0[h], s.theta1[h], tie);
        s.tie[h] = tie;
    }

    // (d) kernel variance
    {
        double rss = 0.0;
        int n_plus = 0;
        for (int j = 0; j < 2; ++j) {
            const auto& atoms = s.theta(j);
            const auto& ys = data.nonzero[j];
            for (std::size_t i = 0; i < ys.size(); ++i) {
                const double d = ys[i] - atoms[s.z[j][i]];
                rss += d * d;
            }
            n_plus += static_cast<int>(ys.size());
        }
        const double shape = hyper.sigma2_shape + 0.5 * n_plus;
        const double rate = hyper.sigma2_rate + 0.5 * rss;
        s.sigma2 = clamp_variance_from_log_precision(rng.log_gamma_variate(shape) - std::log(rate));
    }

    // (e) atom coupling variance over untied pairs; the N+ normalizer is the
    // tau-free constant 2, so the update stays conjugate
    int n_ties = 0;
    {
        double ss = 0.0;
        int k = 0;
        for (int h = 0; h < H; ++h) {
            if (s.tie[h]) {
                ++n_ties;
                continue;
            }
            const double d = s.theta0[h] - s.theta1[h];
            ss += d * d;
            ++k;
        }
        const double shape = hyper.tau2_shape + 0.5 * k;
        const double rate = hyper.tau2_rate + 0.5 * ss;
        s.tau2 = clamp_variance_from_log_precision(rng.log_gamma_variate(shape) - std::log(rate));
    }

    // (f) tie probability
    s.kappa = rng.beta(hyper.kappa_a + n_ties, hyper.kappa_b + H - n_ties);

    // (g) DP concentration
    {
        double sum_log = 0.0;
        for (double v : s.v) sum_log += std::log1p(-v);
        s.alpha = rng.gamma(hyper.alpha_shape + H - 1, hyper.alpha_rate - sum_log);
        s.alpha = std::max(s.alpha, 1e-300);
    }

    // (h) zero-mass probabilities. Each arm-0 continuous outcome is credited to
    // zeta1 or zeta2 and each arm-1 zero to zeta0 or zeta1; given those
    // allocations the update is Dirichlet.
    {
        const int nz0 = data.n_zero[0];
        const int nc0 = static_cast<int>(data.nonzero[0].size());
        const int nz1 = data.n_zero[1];
        const int nc1 = static_cast<int>(data.nonzero[1].size());
        const int c0_to_z1 = rng.binomial(nc0, share(s.zeta[1], s.zeta[2]));
        const int z1_to_z0 = rng.binomial(nz1, share(s.zeta[0], s.zeta[1]));
        std::array<double, 3> conc = hyper.zeta_concentration;
        conc[0] += nz0 + z1_to_z0;
        conc[1] += c0_to_z1 + (nz1 - z1_to_z0);
        conc[2] += (nc0 - c0_to_z1) + nc1;
        s.zeta = dirichlet(rng, conc);
    }
}

std::array<double, 2> state_expected_utilities(const DdpState& s, const StandardizationTransform& t,
                                               const UtilityTable& table) {
    const int H = s.truncation();
    const double sd = t.scale * std::sqrt(s.sigma2);
    std::array<double, 2> cont{0.0, 0.0};
    for (int h = 0; h < H; ++h) {
        if (s.w[h] == 0.0) continue;
        const double e1 = normal_component_utility(t.inverse(s.theta1[h]), sd, table);
        const double e0 = s.tie[h] ? e1 : normal_component_utility(t.inverse(s.theta0[h]), sd, table);
        cont[0] += s.w[h] * e0;
        cont[1] += s.w[h] * e1;
    }
    const double top = table.zero_utility();
    // top - (1 - nu)(top - cont) is monotone in both nu and cont under rounding
    return {top - (1.0 - s.nu00()) * (top - cont[0]), top - (1.0 - s.nu10()) * (top - cont[1])};
}

std::array<std::vector<double>, 2> posterior_cdf_grid(const DdpState& s, const StandardizationTransform& t,
                                                      const std::vector<double>& grid) {
    const int H = s.truncation();
    const double sd = t.scale * std::sqrt(s.sigma2);
    const std::array<double, 2> nu{s.nu00(), s.nu10()};
    std::array<std::vector<double>, 2> out;
    for (int j = 0; j < 2; ++j) {
        const auto& atoms = s.theta(j);
        out[j].reserve(grid.size());
        for (double y : grid) {
            // upper tail summed directly so that values near 1 keep their order
            const double sign = y >= 0.0 ? -1.0 : 1.0;
            double m = 0.0;
            for (int h = 0; h < H; ++h) m += s.w[h] * normal_cdf(sign * (y - t.inverse(atoms[h])) / sd);
            out[j].push_back(y >= 0.0 ? 1.0 - (1.0 - nu[j]) * m : (1.0 - nu[j]) * m);
        }
    }
    return out;
}

BnpFit fit_bnp(const TrialData& data, const Hyperparameters& hyper, const McmcConfig& mcmc,
               const UtilityTable& table) {
    hyper.validate();
    mcmc.validate();
    for (int j = 0; j < 2; ++j) {
        for (double y : data.y[j]) {
            if (!std::isfinite(y)) throw std::invalid_argument("fit_bnp: non-finite outcome");
        }
    }
    BnpFit out;
    auto [sdata, transform] = standardize(data, hyper.standardize_with_zeros);
    out.transform = transform;
    if (transform.degenerate) {
        out.draws.warnings.push_back("treatment arm has no spread; standardization fell back to scale 1");
    }

    DdpState state = init_state(sdata, hyper, split_seed(mcmc.seed, 0));
    Rng rng(split_seed(mcmc.seed, 1));
    for (int it = 0; it < mcmc.n_burnin; ++it) gibbs_sweep(state, sdata, hyper, rng);

    auto& d = out.draws;
    d.u_bar0.reserve(mcmc.n_retained);
    d.u_bar1.reserve(mcmc.n_retained);
    d.trace.reserve(mcmc.n_retained);
    double occupied = 0.0;
    for (int r = 0; r < mcmc.n_retained; ++r) {
        for (int k = 0; k < mcmc.thin; ++k) gibbs_sweep(state, sdata, hyper, rng);
        const auto u = state_expected_utilities(state, transform, table);
        d.u_bar0.push_back(u[0]);
        d.u_bar1.push_back(u[1]);
        d.trace.push_back({u[0], u[1], state.sigma2 * transform.scale * transform.scale, state.kappa, state.alpha,
                           state.nu00(), state.nu10()});
        std::vector<bool> used(state.truncation(), false);
        for (int j = 0; j < 2; ++j) {
            for (int zz : state.z[j]) used[zz] = true;
        }
        occupied += static_cast<double>(std::count(used.begin(), used.end(), true));
        if (mcmc.keep_states) out.states.push_back(state);
    }
    d.diagnostics["mean_occupied_components"] = occupied / mcmc.n_retained;
    return out;
}

}  // namespace bnptrial
