#include "bnptrial/utility.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bnptrial/stats.hpp"

namespace bnptrial {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

UtilityTable::UtilityTable(std::vector<UtilityKnot> knots, double zero_utility)
    : knots_(std::move(knots)), zero_utility_(zero_utility) {
    if (knots_.empty()) throw std::invalid_argument("utility table needs at least one knot");
    double prev_t = 0.0;
    double prev_u = zero_utility_;
    for (const auto& k : knots_) {
        if (!(k.t_days > prev_t))
            throw std::invalid_argument("utility knots must be strictly increasing and above 0 days");
        if (k.utility > prev_u)
            throw std::invalid_argument("utilities must be non-increasing in t and bounded by u(0)");
        prev_t = k.t_days;
        prev_u = k.utility;
    }
    if (knots_.back().utility != 0.0) throw std::invalid_argument("last utility knot must be 0");
    y_bounds_.reserve(knots_.size());
    for (const auto& k : knots_) y_bounds_.push_back(std::log1p(k.t_days));
}

UtilityTable UtilityTable::elicited() {
    return UtilityTable({{5, 50}, {10, 10}, {15, 6}, {20, 5}, {25, 4}, {30, 3}, {35, 2}, {40, 0}}, 100.0);
}

double eval_utility(double t_days, const UtilityTable& table) {
    if (!(t_days >= 0.0)) throw std::domain_error("eval_utility: negative resolution time");
    if (t_days == 0.0) return table.zero_utility();
    const auto& knots = table.knots();
    auto it = std::lower_bound(knots.begin(), knots.end(), t_days,
                               [](const UtilityKnot& k, double t) { return k.t_days < t; });
    return it == knots.end() ? knots.back().utility : it->utility;
}

namespace {

// Compares against log1p(knot) so that y = log1p(t) at a knot lands in the
// same interval as t itself (expm1(log1p(10)) exceeds 10). A few ulps of
// slack absorb log(t + 1) versus log1p(t).
double step_at_y(double y, const UtilityTable& table) {
    const auto& yb = table.y_bounds();
    const double y_adj = y - 4.0 * std::numeric_limits<double>::epsilon() * y;
    const auto it = std::lower_bound(yb.begin(), yb.end(), y_adj);
    const auto& knots = table.knots();
    return it == yb.end() ? knots.back().utility : knots[static_cast<std::size_t>(it - yb.begin())].utility;
}

}  // namespace

double eval_utility_logscale(double y, const UtilityTable& table) {
    if (!(y >= 0.0)) throw std::domain_error("eval_utility_logscale: negative y");
    if (y == 0.0) return table.zero_utility();
    return step_at_y(y, table);
}

double outcome_utility(double y, const UtilityTable& table) {
    if (y == 0.0) return table.zero_utility();
    if (y < 0.0) return table.knots().front().utility;
    return step_at_y(y, table);
}

double normal_component_utility(double mean_y, double sd_y, const UtilityTable& table) {
    const auto& knots = table.knots();
    const auto& yb = table.y_bounds();
    double value = knots.back().utility;
    const double inv_sd = 1.0 / sd_y;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        value += (knots[k].utility - knots[k + 1].utility) * normal_cdf((yb[k] - mean_y) * inv_sd);
    }
    return value;
}

ExpectedUtility expected_utility_normal_component(double mean_y, double sd_y, const UtilityTable& table) {
    if (!(sd_y > 0.0)) throw std::domain_error("expected_utility_normal_component: sd must be positive");
    return {normal_component_utility(mean_y, sd_y, table), EuMethod::closed_form, std::nullopt};
}

double component_expected_utility(const Component& c, const UtilityTable& table) {
    return std::visit(
        overloaded{
            [&](const PointMassZero&) { return table.zero_utility(); },
            [&](const NormalY& n) { return expected_utility_normal_component(n.mean, n.sd, table).value; },
            [&](const ExponentialY& e) {
                return table.continuous_expectation(
                    [&](double t) { return -std::expm1(-e.rate * std::log1p(t)); });
            },
            [&](const WeibullY& w) {
                return table.continuous_expectation(
                    [&](double t) { return -std::expm1(-std::pow(std::log1p(t) / w.scale, w.shape)); });
            },
            [&](const EmpiricalDays& e) {
                // exact mean over the resampled records
                double s = 0.0;
                for (double d : *e.days) s += eval_utility(d, table);
                return s / static_cast<double>(e.days->size());
            },
        },
        c);
}

ExpectedUtility expected_utility_mixture(const std::vector<double>& weights,
                                         const std::vector<Component>& components,
                                         const UtilityTable& table) {
    if (weights.size() != components.size())
        throw std::invalid_argument("expected_utility_mixture: weights and components differ in length");
    validate_simplex(weights);
    double value = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        value += weights[k] * component_expected_utility(components[k], table);
    }
    return {value, EuMethod::closed_form, std::nullopt};
}

ExpectedUtility expected_utility(const TruthSpec& truth, const UtilityTable& table) {
    return expected_utility_mixture(truth.weights(), truth.components(), table);
}

ExpectedUtility mc_oracle_expected_utility(const TruthSpec& truth, std::int64_t n_samples, std::uint64_t seed,
                                           const UtilityTable& table) {
    if (n_samples < 1) throw std::invalid_argument("mc_oracle_expected_utility: n_samples must be >= 1");
    Rng rng(seed);
    // Welford accumulation
    double mean = 0.0;
    double m2 = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const double u = outcome_utility(truth.sample(rng), table);
        const double delta = u - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (u - mean);
    }
    const double n = static_cast<double>(n_samples);
    const double se = n_samples > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return {mean, EuMethod::monte_carlo, se};
}

ExpectedUtility mc_oracle_stratified(const TruthSpec& truth, std::int64_t n_samples, std::uint64_t seed,
                                     const UtilityTable& table) {
    if (n_samples < 1) throw std::invalid_argument("mc_oracle_stratified: n_samples must be >= 1");
    Rng rng(seed);
    const auto& w = truth.weights();
    const auto& comps = truth.components();
    double value = 0.0;
    double var = 0.0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        if (w[k] <= 0.0) continue;
        const auto m = std::max<std::int64_t>(1, std::llround(w[k] * static_cast<double>(n_samples)));
        std::vector<double> sorted_days;
        if (auto* e = std::get_if<EmpiricalDays>(&comps[k])) {
            sorted_days = *e->days;
            std::sort(sorted_days.begin(), sorted_days.end());
        }
        // quantile of the component on the Y scale
        auto quantile = [&](double u) {
            return std::visit(overloaded{
                                  [](const PointMassZero&) { return 0.0; },
                                  [&](const NormalY& n) {
                                      return boost::math::quantile(boost::math::normal(n.mean, n.sd), u);
                                  },
                                  [&](const ExponentialY& e) { return -std::log1p(-u) / e.rate; },
                                  [&](const WeibullY& wb) { return wb.scale * std::pow(-std::log1p(-u), 1.0 / wb.shape); },
                                  [&](const EmpiricalDays&) {
                                      const auto i = std::min(sorted_days.size() - 1,
                                                              static_cast<std::size_t>(u * sorted_days.size()));
                                      return std::log1p(sorted_days[i]);
                                  },
                              },
                              comps[k]);
        };
        double mean = 0.0;
        double m2 = 0.0;
        for (std::int64_t i = 0; i < m; ++i) {
            const double u = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(m);
            const double x = outcome_utility(quantile(u), table);
            const double delta = x - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta * (x - mean);
        }
        value += w[k] * mean;
        if (m > 1) var += w[k] * w[k] * m2 / static_cast<double>(m - 1) / static_cast<double>(m);
    }
    return {value, EuMethod::monte_carlo, std::sqrt(var)};
}

}  // namespace bnptrial
