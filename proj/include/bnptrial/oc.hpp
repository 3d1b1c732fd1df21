#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bnptrial/scenarios.hpp"
#include "bnptrial/trial.hpp"

namespace bnptrial {

// true iff terminal decision `a` is correct for a scenario whose true utility
// difference is delta_u_star: a == 0 for no effect or an effect below
// epsilon_u, a == 1 otherwise.
bool pcd_classify(double delta_u_star, double epsilon_u, int a);

struct ReplicationOutcome {
    TrialResult result;
    bool failed = false;
    std::string error;
};

struct OcReport {
    std::string scenario_id;
    std::string model;
    int n_reps = 0;
    int n_failed = 0;
    std::vector<std::string> failures;
    double delta_u_star = 0.0;
    int correct_terminal = 0;
    double mss = 0.0;
    std::optional<double> tie;
    double pcd = 0.0;
    double pr_ears = 0.0;
    double pr_fins = 0.0;
    double pr_earf = 0.0;
    double pr_finf = 0.0;
    double bias = 0.0;
    double rmse = 0.0;

    int n_completed() const { return n_reps - n_failed; }
    bool complete() const { return n_failed == 0; }
};

// Independent replications; replication r uses split_seed(master_seed, r) and
// results are stored by index, so output does not depend on thread count.
std::vector<ReplicationOutcome> run_replications(const Scenario& scenario, const DesignConfig& design,
                                                 const TrialModel& model, int n_reps, std::uint64_t master_seed,
                                                 int threads = 1);

// Rates use completed replications as denominator; failures are listed.
OcReport aggregate_oc(const std::vector<ReplicationOutcome>& outcomes, const Scenario& scenario,
                      const DesignConfig& design, const UtilityTable& table);

OcReport run_oc(const Scenario& scenario, const DesignConfig& design, const TrialModel& model, int n_reps,
                std::uint64_t master_seed, const UtilityTable& table, int threads = 1);

// eta and posterior mean difference at every look, ignoring stopping.
struct EtaPath {
    std::vector<double> etas;
    std::vector<double> delta_u_means;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
};

std::vector<EtaPath> simulate_eta_paths(const Scenario& scenario, const DesignConfig& design,
                                        const TrialModel& model, int n_reps, std::uint64_t master_seed,
                                        int threads = 1);

// Replays the stopping rules of `design` along precomputed paths; identical to
// run_replications with the same seeds.
std::vector<ReplicationOutcome> apply_design(const std::vector<EtaPath>& paths, const DesignConfig& design);

struct CalibrationPoint {
    double xi_lower = 0.0;
    double xi_upper = 0.0;
    double tie = 0.0;
    double pcd_alternative = 0.0;
    double mss_null = 0.0;
    double mss_alternative = 0.0;
    bool feasible = false;
};

struct CalibrationReport {
    std::vector<CalibrationPoint> grid;
    std::optional<std::size_t> selected;  // index into grid
    double target_tie = 0.0;
};

// Picks the grid point with the highest PCD on the alternative among those
// whose estimated type I error on the null is <= target_tie. An empty feasible
// set leaves `selected` unset.
CalibrationReport calibrate_thresholds(const Scenario& null_scenario, const Scenario& alternative,
                                       const DesignConfig& design_template,
                                       const std::vector<std::pair<double, double>>& grid, double target_tie,
                                       const TrialModel& model, int n_reps, std::uint64_t seed,
                                       const UtilityTable& table, int threads = 1);

}  // namespace bnptrial
