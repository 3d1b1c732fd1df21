#include "bnptrial/scenarios.hpp"

#include <cmath>
#include <stdexcept>

#include "bnptrial/rng.hpp"

namespace bnptrial {

namespace {

constexpr double kSigmaBar = 0.3;

Component N(double mean, double sd = kSigmaBar) { return NormalY{mean, sd}; }
Component Z() { return PointMassZero{}; }

}  // namespace

double true_delta_u(const Scenario& s, const UtilityTable& table) {
    return expected_utility(s.treatment, table).value - expected_utility(s.control, table).value;
}

int correct_terminal_decision(const Scenario& s, double epsilon_u, const UtilityTable& table) {
    if (s.correct_terminal) return *s.correct_terminal;
    if (s.null_hypothesis) return 0;
    return true_delta_u(s, table) >= epsilon_u ? 1 : 0;
}

std::vector<double> generate_historical_days(std::uint64_t seed, int n) {
    // bulk of quick resolutions, a week-long mode, and two late modes
    constexpr double kZeroShare = 0.05;
    constexpr double weights[] = {0.47, 0.33, 0.115, 0.085};
    constexpr double means[] = {3.0, 7.0, 16.0, 32.0};
    constexpr double sds[] = {1.2, 2.0, 3.0, 6.0};
    Rng rng(seed);
    std::vector<double> days;
    days.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (rng.uniform() < kZeroShare) {
            days.push_back(0.0);
            continue;
        }
        double u = rng.uniform();
        int k = 0;
        while (k < 3 && u > weights[k]) u -= weights[k++];
        days.push_back(std::max(1.0, std::round(rng.normal(means[k], sds[k]))));
    }
    return days;
}

std::shared_ptr<const std::vector<double>> historical_days() {
    static const auto days = std::make_shared<const std::vector<double>>(generate_historical_days());
    return days;
}

std::vector<Scenario> scenario_library() {
    std::vector<Scenario> out;
    const Component hist = EmpiricalDays{historical_days(), "historical"};

    out.push_back({"1", "null: both arms resampled from historical data", TruthSpec({1.0}, {hist}),
                   TruthSpec({1.0}, {hist}), std::nullopt, std::nullopt, true, std::nullopt});
    out.push_back({"2", "null: identical normal mixtures",
                   TruthSpec({0.1, 0.63, 0.27}, {Z(), N(2), N(3)}), TruthSpec({0.1, 0.63, 0.27}, {Z(), N(2), N(3)}),
                   23.44, 23.44, true, std::nullopt});
    out.push_back({"3", "large effect",
                   TruthSpec({0.1, 0.63, 0.18, 0.09}, {Z(), N(2.5), N(3), N(4.5)}),
                   TruthSpec({0.3, 0.49, 0.14, 0.07}, {Z(), N(1), N(2), N(3.5)}), 15.61, 57.25, false,
                   std::nullopt});
    out.push_back({"4", "small effect just above epsilon",
                   TruthSpec({0.1, 0.63, 0.27}, {Z(), N(1.8), N(3)}),
                   TruthSpec({0.2, 0.56, 0.24}, {Z(), N(1.5), N(2)}), 29.79, 48.94, false, std::nullopt});
    out.push_back({"5", "moderate effect",
                   TruthSpec({0.1, 0.54, 0.18, 0.18}, {Z(), N(1.5), N(2.5), N(3.5)}),
                   TruthSpec({0.4, 0.48, 0.12}, {Z(), N(1), N(2.5)}), 35.14, 64.82, false, std::nullopt});
    out.push_back({"6", "moderate effect",
                   TruthSpec({0.1, 0.36, 0.54}, {Z(), N(1.5), N(3.5)}),
                   TruthSpec({0.4, 0.36, 0.12, 0.12}, {Z(), N(1), N(2), N(3)}), 26.65, 60.80, false,
                   std::nullopt});
    const TruthSpec expo({0.3, 0.3, 0.4}, {Z(), ExponentialY{1.0}, ExponentialY{0.5}});
    const TruthSpec weib({0.2, 0.4, 0.4}, {Z(), WeibullY{1.0, 2.0}, WeibullY{0.7, 2.0}});
    out.push_back({"7", "exponential treatment vs normal control",
                   TruthSpec({0.1, 0.4, 0.5}, {Z(), N(3, 0.2), N(4, 0.2)}), expo, 11.86, 55.33, false,
                   std::nullopt});
    out.push_back({"8", "Weibull treatment, effect below epsilon",
                   TruthSpec({0.2, 0.5, 0.3}, {Z(), N(1.8, 0.2), N(2.5, 0.3)}), weib, 36.95, 45.08, false,
                   std::nullopt});
    out.push_back({"9", "exponential vs Weibull, effect below epsilon", weib, expo, 45.08, 55.33, false,
                   std::nullopt});
    return out;
}

const Scenario& find_scenario(const std::vector<Scenario>& scenarios, const std::string& id) {
    for (const auto& s : scenarios) {
        if (s.id == id) return s;
    }
    std::string ids;
    for (const auto& s : scenarios) ids += (ids.empty() ? "" : ", ") + s.id;
    throw std::out_of_range("unknown scenario '" + id + "'; available: " + ids);
}

}  // namespace bnptrial
