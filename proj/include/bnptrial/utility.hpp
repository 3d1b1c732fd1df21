#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnptrial/truth.hpp"

namespace bnptrial {

struct UtilityKnot {
    double t_days;
    double utility;
};

// Step utility over resolution time in days. u(0) is the no-leak value; for
// t > 0, u(t) is the utility of the smallest knot >= t, and the last knot's
// utility applies beyond it.
class UtilityTable {
   public:
    // Throws std::invalid_argument when an invariant is violated.
    UtilityTable(std::vector<UtilityKnot> knots, double zero_utility);

    // The elicited clinical table: 0:100, 5:50, 10:10, 15:6, 20:5, 25:4,
    // 30:3, 35:2, 40:0.
    static UtilityTable elicited();

    const std::vector<UtilityKnot>& knots() const { return knots_; }
    double zero_utility() const { return zero_utility_; }
    double min_utility() const { return knots_.back().utility; }
    double max_utility() const { return zero_utility_; }

    // Expected utility of a continuous outcome given its CDF on the days
    // scale, cdf_days(t) = P(T <= t). Mass at or below the first knot gets the
    // first knot's utility.
    template <class CdfDays>
    double continuous_expectation(CdfDays&& cdf_days) const {
        double value = knots_.back().utility;
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
            value += (knots_[k].utility - knots_[k + 1].utility) * cdf_days(knots_[k].t_days);
        }
        return value;
    }

    // Knot positions on the Y = log(t + 1) scale.
    const std::vector<double>& y_bounds() const { return y_bounds_; }

   private:
    std::vector<UtilityKnot> knots_;
    std::vector<double> y_bounds_;
    double zero_utility_;
};

double eval_utility(double t_days, const UtilityTable& table);
double eval_utility_logscale(double y, const UtilityTable& table);

// Utility of one observed or simulated outcome on the Y scale: y == 0 is the
// no-leak event, y < 0 (only reachable through normal kernels) is credited
// like the first interval.
double outcome_utility(double y, const UtilityTable& table);

enum class EuMethod { closed_form, monte_carlo };

struct ExpectedUtility {
    double value = 0.0;
    EuMethod method = EuMethod::closed_form;
    std::optional<double> mc_std_error;
};

// E u(Y) for Y ~ N(mean_y, sd_y^2) on the original Y scale. Throws
// std::domain_error for sd_y <= 0.
ExpectedUtility expected_utility_normal_component(double mean_y, double sd_y, const UtilityTable& table);

// Raw value of the above without validation or wrapping; used in MCMC loops.
double normal_component_utility(double mean_y, double sd_y, const UtilityTable& table);

double component_expected_utility(const Component& c, const UtilityTable& table);

// Weighted closed-form expected utility. Throws std::invalid_argument if the
// weights are not a simplex (tolerance 1e-10).
ExpectedUtility expected_utility_mixture(const std::vector<double>& weights,
                                         const std::vector<Component>& components,
                                         const UtilityTable& table);
ExpectedUtility expected_utility(const TruthSpec& truth, const UtilityTable& table);

// Monte Carlo estimate with standard error; deterministic for a fixed seed.
ExpectedUtility mc_oracle_expected_utility(const TruthSpec& truth, std::int64_t n_samples, std::uint64_t seed,
                                           const UtilityTable& table);

// Same draw budget, allocated to components in proportion to their weights
// and stratified in the uniform driving each component's quantile function.
// The reported standard error is the unstratified one, an upper bound.
ExpectedUtility mc_oracle_stratified(const TruthSpec& truth, std::int64_t n_samples, std::uint64_t seed,
                                     const UtilityTable& table);

}  // namespace bnptrial
