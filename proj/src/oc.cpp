#include "bnptrial/oc.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

namespace bnptrial {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) body(i);
        });
    }
}

TrialResult replay(const EtaPath& path, const DesignConfig& design) {
    TrialResult r;
    r.seed = path.seed;
    for (int look = 0; look < design.n_looks(); ++look) {
        const int n = (look + 1) * design.cohort_size;
        const double eta = path.etas.at(look);
        const Decision d = interim_decision(eta, design, n);
        r.interim_etas.push_back(eta);
        r.decisions.push_back(d);
        r.delta_u_means.push_back(path.delta_u_means.at(look));
        r.n_used = n;
        if (d != Decision::continue_trial) {
            r.terminal = terminal_decision(eta);
            break;
        }
    }
    return r;
}

}  // namespace

bool pcd_classify(double delta_u_star, double epsilon_u, int a) {
    const bool superior = std::abs(delta_u_star) > 1e-9 && delta_u_star >= epsilon_u;
    return a == (superior ? 1 : 0);
}

std::vector<ReplicationOutcome> run_replications(const Scenario& scenario, const DesignConfig& design,
                                                 const TrialModel& model, int n_reps, std::uint64_t master_seed,
                                                 int threads) {
    if (n_reps < 1) throw std::invalid_argument("n_reps must be >= 1");
    design.validate();
    std::vector<ReplicationOutcome> out(n_reps);
    parallel_for(n_reps, threads, [&](int r) {
        const std::uint64_t seed = split_seed(master_seed, static_cast<std::uint64_t>(r));
        try {
            out[r].result = run_trial(scenario.control, scenario.treatment, design, model, seed);
        } catch (const std::exception& e) {
            out[r].failed = true;
            out[r].error = e.what();
            out[r].result.seed = seed;
        }
    });
    return out;
}

OcReport aggregate_oc(const std::vector<ReplicationOutcome>& outcomes, const Scenario& scenario,
                      const DesignConfig& design, const UtilityTable& table) {
    OcReport rep;
    rep.scenario_id = scenario.id;
    rep.model = to_string(design.model);
    rep.n_reps = static_cast<int>(outcomes.size());
    rep.delta_u_star = scenario.null_hypothesis ? 0.0 : true_delta_u(scenario, table);
    rep.correct_terminal = correct_terminal_decision(scenario, design.epsilon_u, table);

    int ears = 0, fins = 0, earf = 0, finf = 0, correct = 0, rejected = 0;
    double sum_n = 0.0, sum_err = 0.0, sum_err2 = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.failed) {
            ++rep.n_failed;
            rep.failures.push_back("replication " + std::to_string(i) + ": " + o.error);
            continue;
        }
        const auto& r = o.result;
        const bool early = r.n_used < design.max_n;
        if (r.terminal == 1) {
            ++rejected;
            (early ? ears : fins) += 1;
        } else {
            (early ? earf : finf) += 1;
        }
        if (r.terminal == rep.correct_terminal) ++correct;
        sum_n += r.n_used;
        const double err = r.delta_u_means.back() - rep.delta_u_star;
        sum_err += err;
        sum_err2 += err * err;
    }
    const double n = rep.n_completed();
    if (n == 0) {
        const double nan = std::nan("");
        rep.mss = rep.pcd = rep.pr_ears = rep.pr_fins = rep.pr_earf = rep.pr_finf = rep.bias = rep.rmse = nan;
        if (scenario.null_hypothesis) rep.tie = nan;
        return rep;
    }
    rep.mss = sum_n / n;
    rep.pcd = correct / n;
    rep.pr_ears = ears / n;
    rep.pr_fins = fins / n;
    rep.pr_earf = earf / n;
    rep.pr_finf = finf / n;
    if (scenario.null_hypothesis) rep.tie = rejected / n;
    rep.bias = sum_err / n;
    rep.rmse = std::sqrt(sum_err2 / n);
    return rep;
}

OcReport run_oc(const Scenario& scenario, const DesignConfig& design, const TrialModel& model, int n_reps,
                std::uint64_t master_seed, const UtilityTable& table, int threads) {
    return aggregate_oc(run_replications(scenario, design, model, n_reps, master_seed, threads), scenario, design,
                        table);
}

std::vector<EtaPath> simulate_eta_paths(const Scenario& scenario, const DesignConfig& design,
                                        const TrialModel& model, int n_reps, std::uint64_t master_seed,
                                        int threads) {
    if (n_reps < 1) throw std::invalid_argument("n_reps must be >= 1");
    design.validate();
    std::vector<EtaPath> out(n_reps);
    parallel_for(n_reps, threads, [&](int r) {
        auto& p = out[r];
        p.seed = split_seed(master_seed, static_cast<std::uint64_t>(r));
        try {
            TrialData data;
            for (int look = 0; look < design.n_looks(); ++look) {
                data.append(generate_cohort(scenario.control, scenario.treatment, design.cohort_size,
                                            cohort_seed(p.seed, look)));
                const PosteriorDraws draws = model.fit(data, fit_seed(p.seed, look));
                p.etas.push_back(posterior_eta(draws, design.epsilon_u));
                p.delta_u_means.push_back(draws.mean_delta());
            }
        } catch (const std::exception& e) {
            p.failed = true;
            p.error = e.what();
        }
    });
    return out;
}

std::vector<ReplicationOutcome> apply_design(const std::vector<EtaPath>& paths, const DesignConfig& design) {
    design.validate();
    std::vector<ReplicationOutcome> out(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (paths[i].failed) {
            out[i].failed = true;
            out[i].error = paths[i].error;
            out[i].result.seed = paths[i].seed;
            continue;
        }
        out[i].result = replay(paths[i], design);
    }
    return out;
}

CalibrationReport calibrate_thresholds(const Scenario& null_scenario, const Scenario& alternative,
                                       const DesignConfig& design_template,
                                       const std::vector<std::pair<double, double>>& grid, double target_tie,
                                       const TrialModel& model, int n_reps, std::uint64_t seed,
                                       const UtilityTable& table, int threads) {
    if (grid.empty()) throw std::invalid_argument("calibration grid is empty");
    for (const auto& [lo, hi] : grid) {
        DesignConfig d = design_template;
        d.xi_lower = lo;
        d.xi_upper = hi;
        d.validate();
    }
    const auto null_paths = simulate_eta_paths(null_scenario, design_template, model, n_reps, split_seed(seed, 0),
                                               threads);
    const auto alt_paths = simulate_eta_paths(alternative, design_template, model, n_reps, split_seed(seed, 1),
                                              threads);
    CalibrationReport report;
    report.target_tie = target_tie;
    for (const auto& [lo, hi] : grid) {
        DesignConfig d = design_template;
        d.xi_lower = lo;
        d.xi_upper = hi;
        const OcReport null_oc = aggregate_oc(apply_design(null_paths, d), null_scenario, d, table);
        const OcReport alt_oc = aggregate_oc(apply_design(alt_paths, d), alternative, d, table);
        CalibrationPoint p;
        p.xi_lower = lo;
        p.xi_upper = hi;
        // the null scenario's rejection rate, whether or not it is flagged null
        p.tie = null_oc.pr_ears + null_oc.pr_fins;
        p.pcd_alternative = alt_oc.pcd;
        p.mss_null = null_oc.mss;
        p.mss_alternative = alt_oc.mss;
        p.feasible = null_oc.n_completed() > 0 && p.tie <= target_tie;
        report.grid.push_back(p);
    }
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
        const auto& p = report.grid[i];
        if (!p.feasible) continue;
        if (!report.selected) {
            report.selected = i;
            continue;
        }
        const auto& best = report.grid[*report.selected];
        if (p.pcd_alternative > best.pcd_alternative ||
            (p.pcd_alternative == best.pcd_alternative && p.mss_null < best.mss_null))
            report.selected = i;
    }
    return report;
}

}  // namespace bnptrial
