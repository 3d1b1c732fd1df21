#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bnptrial/truth.hpp"
#include "bnptrial/utility.hpp"

namespace bnptrial {

struct Scenario {
    std::string id;
    std::string description;
    TruthSpec control;
    TruthSpec treatment;
    // Reference expected utilities, when the scenario has them.
    std::optional<double> reference_u_control;
    std::optional<double> reference_u_treatment;
    // Identical arms; type I error is reported.
    bool null_hypothesis = false;
    // Terminal decision counted as correct. Unset means: 1 iff the true
    // utility difference reaches epsilon_u.
    std::optional<int> correct_terminal;
};

// True difference U1 - U0 under the scenario's truths, closed form.
double true_delta_u(const Scenario& s, const UtilityTable& table);

// The terminal decision a that counts as correct for this scenario.
int correct_terminal_decision(const Scenario& s, double epsilon_u, const UtilityTable& table);

// Synthetic historical resolution times (days) standing in for the
// institutional database: 1000 records, about 5% zeros, multimodal and right
// skewed with mean near 8 days and sd near 8.76.
inline constexpr std::uint64_t kHistoricalSeed = 20140601;
inline constexpr int kHistoricalRecords = 1000;
std::vector<double> generate_historical_days(std::uint64_t seed = kHistoricalSeed, int n = kHistoricalRecords);
std::shared_ptr<const std::vector<double>> historical_days();

// The nine simulation scenarios; spread sigma-bar = 0.3 unless stated.
std::vector<Scenario> scenario_library();

// Looks up by id; throws std::out_of_range listing the available ids.
const Scenario& find_scenario(const std::vector<Scenario>& scenarios, const std::string& id);

}  // namespace bnptrial
