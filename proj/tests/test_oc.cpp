#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bnptrial/oc.hpp"
#include "bnptrial/scenarios.hpp"

using namespace bnptrial;

namespace {

const UtilityTable kTable = UtilityTable::elicited();

Scenario scenario(const std::string& id) { return find_scenario(scenario_library(), id); }

ModelSettings small_mcmc() {
    ModelSettings s;
    s.mcmc.n_burnin = 150;
    s.mcmc.n_retained = 150;
    return s;
}

// eta is a fixed function of the data so that the trial depends on the seeds.
class DataDrivenModel final : public TrialModel {
   public:
    explicit DataDrivenModel(int fail_every = 0) : fail_every_(fail_every) {}
    PosteriorDraws fit(const TrialData& data, std::uint64_t seed) const override {
        if (fail_every_ > 0 && seed % fail_every_ == 0) throw std::runtime_error("synthetic failure");
        int zeros1 = 0;
        for (double y : data.y[1]) zeros1 += y == 0.0;
        const double eta = static_cast<double>(zeros1) / data.y[1].size();
        PosteriorDraws d;
        for (int i = 0; i < 100; ++i) {
            d.u_bar0.push_back(0.0);
            d.u_bar1.push_back(i < std::lround(eta * 100) ? 50.0 : 0.0);
        }
        return d;
    }

   private:
    int fail_every_;
};

ReplicationOutcome outcome(int n_used, int terminal, double delta) {
    ReplicationOutcome o;
    o.result.n_used = n_used;
    o.result.terminal = terminal;
    o.result.delta_u_means = {delta};
    return o;
}

}  // namespace

TEST_CASE("correct decision classification") {
    CHECK(pcd_classify(0.0, 18.0, 0));
    CHECK(!pcd_classify(0.0, 18.0, 1));
    CHECK(pcd_classify(41.64, 18.0, 1));
    CHECK(!pcd_classify(41.64, 18.0, 0));
    // effects below epsilon count futility as correct
    CHECK(pcd_classify(8.13, 18.0, 0));
    CHECK(!pcd_classify(8.13, 18.0, 1));
    CHECK(pcd_classify(18.0, 18.0, 1));
    CHECK(pcd_classify(5.0, 0.0, 1));
}

TEST_CASE("aggregation by hand") {
    const DesignConfig design;
    const Scenario s3 = scenario("3");
    const double star = true_delta_u(s3, kTable);
    std::vector<ReplicationOutcome> outs{outcome(16, 1, star + 2), outcome(48, 1, star - 4), outcome(32, 0, star),
                                         outcome(48, 0, star + 6)};
    ReplicationOutcome bad;
    bad.failed = true;
    bad.error = "boom";
    outs.push_back(bad);
    const OcReport r = aggregate_oc(outs, s3, design, kTable);
    CHECK(r.n_reps == 5);
    CHECK(r.n_failed == 1);
    CHECK(r.n_completed() == 4);
    CHECK(!r.complete());
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].find("replication 4") != std::string::npos);
    CHECK(r.failures[0].find("boom") != std::string::npos);
    CHECK(r.mss == doctest::Approx((16 + 48 + 32 + 48) / 4.0));
    CHECK(r.pcd == doctest::Approx(0.5));
    CHECK(r.pr_ears == doctest::Approx(0.25));
    CHECK(r.pr_fins == doctest::Approx(0.25));
    CHECK(r.pr_earf == doctest::Approx(0.25));
    CHECK(r.pr_finf == doctest::Approx(0.25));
    CHECK(r.bias == doctest::Approx(1.0));
    CHECK(r.rmse == doctest::Approx(std::sqrt((4.0 + 16.0 + 0.0 + 36.0) / 4.0)));
    CHECK(!r.tie.has_value());
    CHECK(r.delta_u_star == doctest::Approx(star));

    const Scenario s2 = scenario("2");
    const OcReport n = aggregate_oc({outcome(16, 0, 1.0), outcome(48, 1, -3.0)}, s2, design, kTable);
    REQUIRE(n.tie.has_value());
    CHECK(*n.tie == doctest::Approx(0.5));
    CHECK(n.delta_u_star == 0.0);
    CHECK(n.bias == doctest::Approx(-1.0));

    const OcReport none = aggregate_oc({bad}, s2, design, kTable);
    CHECK(std::isnan(none.pcd));
    CHECK(none.n_failed == 1);
}

TEST_CASE("single replication") {
    const DesignConfig design;
    DataDrivenModel model;
    for (const char* id : {"2", "3", "5"}) {
        const Scenario s = scenario(id);
        const OcReport r = run_oc(s, design, model, 1, 3, kTable);
        for (double p : {r.pcd, r.pr_ears, r.pr_fins, r.pr_earf, r.pr_finf}) CHECK((p == 0.0 || p == 1.0));
        const auto outs = run_replications(s, design, model, 1, 3);
        CHECK(r.mss == outs[0].result.n_used);
    }
}

TEST_CASE("rates partition and sample sizes are looks") {
    const DesignConfig design;
    DataDrivenModel model;
    for (const auto& s : scenario_library()) {
        const auto outs = run_replications(s, design, model, 60, 19);
        for (const auto& o : outs) {
            const int n = o.result.n_used;
            CHECK((n == 16 || n == 32 || n == 48));
        }
        const OcReport r = aggregate_oc(outs, s, design, kTable);
        CHECK(r.pr_ears + r.pr_fins + r.pr_earf + r.pr_finf == doctest::Approx(1.0));
        CHECK(r.mss >= 16);
        CHECK(r.mss <= 48);
        CHECK(r.pcd >= 0.0);
        CHECK(r.pcd <= 1.0);
    }
}

TEST_CASE("replication seeds") {
    const DesignConfig design;
    DataDrivenModel model;
    const Scenario s = scenario("4");
    const auto outs = run_replications(s, design, model, 5, 123);
    for (int r = 0; r < 5; ++r) {
        CHECK(outs[r].result.seed == split_seed(123, r));
        const TrialResult direct = run_trial(s.control, s.treatment, design, model, split_seed(123, r));
        CHECK(direct.interim_etas == outs[r].result.interim_etas);
    }
    CHECK_THROWS_AS(run_replications(s, design, model, 0, 1), std::invalid_argument);
}

TEST_CASE("failures are recorded, not skipped") {
    const DesignConfig design;
    DataDrivenModel model(2);
    const Scenario s = scenario("3");
    const auto outs = run_replications(s, design, model, 30, 8);
    int failed = 0;
    for (const auto& o : outs) failed += o.failed;
    CHECK(failed > 0);
    const OcReport r = aggregate_oc(outs, s, design, kTable);
    CHECK(r.n_failed == failed);
    CHECK(r.failures.size() == static_cast<std::size_t>(failed));
    CHECK(r.pr_ears + r.pr_fins + r.pr_earf + r.pr_finf == doctest::Approx(1.0));
}

TEST_CASE("thread count does not change results") {
    DesignConfig design;
    const auto model = make_model(design, small_mcmc());
    const Scenario s = scenario("4");
    const auto one = run_replications(s, design, *model, 6, 42, 1);
    const auto three = run_replications(s, design, *model, 6, 42, 3);
    for (int r = 0; r < 6; ++r) {
        CHECK(one[r].result.interim_etas == three[r].result.interim_etas);
        CHECK(one[r].result.delta_u_means == three[r].result.delta_u_means);
        CHECK(one[r].result.n_used == three[r].result.n_used);
    }
}

TEST_CASE("replaying eta paths equals running the trials") {
    for (auto kind : {ModelKind::bnp_ordered, ModelKind::zero_weibull}) {
        DesignConfig design;
        design.model = kind;
        const auto model = make_model(design, small_mcmc());
        const Scenario s = scenario("5");
        const auto paths = simulate_eta_paths(s, design, *model, 5, 9, 2);
        const auto replayed = apply_design(paths, design);
        const auto direct = run_replications(s, design, *model, 5, 9, 2);
        for (int r = 0; r < 5; ++r) {
            CHECK(paths[r].etas.size() == 3);
            CHECK(replayed[r].result.interim_etas == direct[r].result.interim_etas);
            CHECK(replayed[r].result.n_used == direct[r].result.n_used);
            CHECK(replayed[r].result.terminal == direct[r].result.terminal);
            CHECK(replayed[r].result.delta_u_means == direct[r].result.delta_u_means);
        }
        DesignConfig tight = design;
        tight.xi_lower = 0.3;
        tight.xi_upper = 0.6;
        // a narrower continuation band can only stop sooner
        const auto again = apply_design(paths, tight);
        for (int r = 0; r < 5; ++r) CHECK(again[r].result.n_used <= replayed[r].result.n_used);
    }
}

TEST_CASE("calibration grid") {
    DesignConfig design;
    DataDrivenModel model;
    const Scenario null = scenario("2"), alt = scenario("5");
    const std::vector<std::pair<double, double>> grid{{0.02, 0.85}, {0.05, 0.9}, {0.1, 0.95}, {0.2, 0.6}};
    const CalibrationReport rep = calibrate_thresholds(null, alt, design, grid, 0.1, model, 40, 5, kTable);
    REQUIRE(rep.grid.size() == grid.size());
    CHECK(rep.target_tie == 0.1);
    const auto null_paths = simulate_eta_paths(null, design, model, 40, split_seed(5, 0));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(rep.grid[i].xi_lower == grid[i].first);
        CHECK(rep.grid[i].xi_upper == grid[i].second);
        CHECK(rep.grid[i].feasible == (rep.grid[i].tie <= 0.1));
        DesignConfig d = design;
        d.xi_lower = grid[i].first;
        d.xi_upper = grid[i].second;
        int rejected = 0;
        for (const auto& o : apply_design(null_paths, d)) rejected += o.result.terminal;
        CHECK(rep.grid[i].tie == doctest::Approx(rejected / 40.0));
    }
    if (rep.selected) {
        for (const auto& p : rep.grid) {
            if (p.feasible) CHECK(p.pcd_alternative <= rep.grid[*rep.selected].pcd_alternative);
        }
    }

    const CalibrationReport single = calibrate_thresholds(null, alt, design, {{0.05, 0.9}}, 1.0, model, 10, 5, kTable);
    REQUIRE(single.grid.size() == 1);
    CHECK(single.selected == std::size_t{0});

    const CalibrationReport none = calibrate_thresholds(null, alt, design, {{0.05, 0.9}}, -1.0, model, 10, 5, kTable);
    CHECK(!none.selected.has_value());

    CHECK_THROWS_AS(calibrate_thresholds(null, alt, design, {}, 0.05, model, 10, 5, kTable), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_thresholds(null, alt, design, {{0.6, 0.9}}, 0.05, model, 10, 5, kTable),
                    std::invalid_argument);
}

TEST_CASE("default thresholds are feasible on the identical-mixture null") {
    const DesignConfig design;
    const auto model = make_model(design, ModelSettings{});
    const CalibrationReport rep = calibrate_thresholds(scenario("2"), scenario("3"), design, {{0.05, 0.9}}, 0.05,
                                                       *model, 100, 2014, kTable);
    INFO("tie ", rep.grid[0].tie, " pcd ", rep.grid[0].pcd_alternative);
    CHECK(rep.grid[0].feasible);
    CHECK(rep.selected == std::size_t{0});
}
