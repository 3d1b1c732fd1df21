// Command line front end: interim analysis, trial simulation, threshold
// calibration, expected-utility checks and the synthetic historical file.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bnptrial/io.hpp"
#include "bnptrial/mixture_parser.hpp"
#include "bnptrial/oc.hpp"
#include "bnptrial/scenarios.hpp"
#include "bnptrial/trial.hpp"

using namespace bnptrial;

namespace {

constexpr int kExitSuperior = 10;
constexpr int kExitFutile = 11;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::optional<std::uint64_t> seed;
    std::string model = "bnp-ordered";
    double eps_u = 18.0;
    double xi_lower = 0.05;
    double xi_upper = 0.9;
    int cohort = 16;
    int max_n = 48;
    int burnin = 2000;
    int iters = 2000;
    int threads = 0;
    bool freeze_weibull = false;
    std::string utility_path;
    std::string config_path;
    std::string out;
    std::vector<std::string> scenarios;
    // interim
    std::string data_path;
    std::string chain_dump;
    // simulate / calibrate
    int reps = 100;
    std::string grid = "0.02,0.05,0.1:0.85,0.9,0.95";
    double target = 0.05;
    std::string alt_scenario = "3";
    // utility-check
    std::string mixture;
    long long draws = 1000000;
    // gen-historical
    int records = kHistoricalRecords;
};

void add_seed(CLI::App* cmd, Options& o) {
    cmd->add_option("--seed", o.seed, "Master seed (falls back to BNPTRIAL_SEED)");
}

void add_design(CLI::App* cmd, Options& o) {
    cmd->add_option("--model", o.model, "bnp-ordered | bnp-unordered | zero-weibull")->capture_default_str();
    cmd->add_option("--eps-u", o.eps_u, "Clinically meaningful utility improvement")->capture_default_str();
    cmd->add_option("--xi-lower", o.xi_lower, "Futility threshold")->capture_default_str();
    cmd->add_option("--xi-upper", o.xi_upper, "Superiority threshold")->capture_default_str();
    cmd->add_option("--cohort", o.cohort, "Cohort size")->capture_default_str();
    cmd->add_option("--max-n", o.max_n, "Maximum sample size")->capture_default_str();
    cmd->add_option("--burnin", o.burnin, "MCMC burn-in sweeps")->capture_default_str();
    cmd->add_option("--iters", o.iters, "Retained MCMC draws")->capture_default_str();
    cmd->add_option("--utility", o.utility_path, "Utility table file (days utility per line)");
    cmd->add_flag("--freeze-weibull-prior", o.freeze_weibull, "Match the Weibull prior to the first cohort only");
}

std::uint64_t resolve_seed(const Options& o) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("BNPTRIAL_SEED")) {
        try {
            std::size_t used = 0;
            const std::string s = env;
            const auto v = std::stoull(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw UsageError(std::string("BNPTRIAL_SEED is not an unsigned integer: '") + env + "'");
    }
    throw UsageError("no seed: pass --seed or set BNPTRIAL_SEED");
}

UtilityTable resolve_utility(const Options& o) {
    return o.utility_path.empty() ? UtilityTable::elicited() : load_utility_table(o.utility_path);
}

DesignConfig resolve_design(const Options& o) {
    DesignConfig d;
    d.cohort_size = o.cohort;
    d.max_n = o.max_n;
    d.epsilon_u = o.eps_u;
    d.xi_lower = o.xi_lower;
    d.xi_upper = o.xi_upper;
    try {
        d.model = parse_model_kind(o.model);
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return d;
}

ModelSettings resolve_settings(const Options& o, const UtilityTable& table) {
    ModelSettings s;
    s.utility = table;
    s.mcmc.n_burnin = o.burnin;
    s.mcmc.n_retained = o.iters;
    s.freeze_weibull_prior = o.freeze_weibull;
    try {
        s.mcmc.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return s;
}

int resolve_threads(const Options& o) {
    if (o.threads < 0) throw UsageError("--threads must be nonnegative");
    if (o.threads > 0) return o.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Scenario> scenario_set(const Options& o) {
    return o.config_path.empty() ? scenario_library() : load_scenarios(o.config_path);
}

const Scenario& pick(const std::vector<Scenario>& all, const std::string& id) {
    try {
        return find_scenario(all, id);
    } catch (const std::out_of_range& e) {
        throw UsageError(e.what());
    }
}

std::string config_fingerprint(const std::vector<std::string>& args, const Options& o) {
    std::string text;
    for (const auto& a : args) text += a + '\x1f';
    if (!o.config_path.empty()) text += read_text_file(o.config_path);
    if (!o.utility_path.empty()) text += read_text_file(o.utility_path);
    return fnv1a_hex(text);
}

void emit_manifest(const std::string& out_dir, const std::string& command, const std::vector<std::string>& args,
                   const Options& o, std::uint64_t seed, const std::string& started) {
    RunManifest m;
    m.command = command;
    m.arguments = args;
    m.config_hash = config_fingerprint(args, o);
    m.master_seed = seed;
    m.version = BNPTRIAL_VERSION;
    m.started_utc = started;
    m.finished_utc = utc_timestamp();
    write_text_file(std::filesystem::path(out_dir) / "manifest.json", m.to_json());
}

int cmd_interim(const Options& o) {
    const std::uint64_t seed = resolve_seed(o);
    const UtilityTable table = resolve_utility(o);
    const DesignConfig design = resolve_design(o);
    const ModelSettings settings = resolve_settings(o, table);
    const DataSet data = load_dataset(o.data_path);
    const int n = static_cast<int>(data.records.size());
    if (n == 0) throw UsageError(o.data_path + ": dataset has no patients");
    if (n > design.max_n || n % design.cohort_size != 0) {
        throw UsageError(o.data_path + ": " + std::to_string(n) + " patients is not an interim look (multiples of " +
                         std::to_string(design.cohort_size) + " up to " + std::to_string(design.max_n) + ")");
    }
    const TrialData trial = data.to_trial_data();
    if (trial.y[0].empty() || trial.y[1].empty()) throw UsageError(o.data_path + ": both arms need patients");

    const auto model = make_model(design, settings);
    const PosteriorDraws draws = model->fit(trial, seed);
    const double eta = posterior_eta(draws, design.epsilon_u);
    const Decision decision = interim_decision(eta, design, n);

    std::printf("patients       %d (control %zu, treatment %zu)\n", n, trial.y[0].size(), trial.y[1].size());
    std::printf("model          %s\n", to_string(design.model).c_str());
    std::printf("eta            %.4f  (Pr(U1 > U0 + %.4g | data))\n", eta, design.epsilon_u);
    std::printf("mean U0        %.3f\n", draws.mean_u0());
    std::printf("mean U1        %.3f\n", draws.mean_u1());
    std::printf("mean U1 - U0   %.3f\n", draws.mean_delta());
    std::printf("decision       %s\n", to_string(decision).c_str());
    for (const auto& w : draws.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!o.chain_dump.empty()) write_text_file(o.chain_dump, format_chain_csv(draws));

    switch (decision) {
        case Decision::stop_superior:
            return kExitSuperior;
        case Decision::stop_futile:
            return kExitFutile;
        default:
            return 0;
    }
}

int cmd_simulate(const Options& o, const std::vector<std::string>& args) {
    const std::string started = utc_timestamp();
    if (o.reps <= 0) throw UsageError("--reps must be positive");
    const std::uint64_t seed = resolve_seed(o);
    const UtilityTable table = resolve_utility(o);
    const DesignConfig design = resolve_design(o);
    const ModelSettings settings = resolve_settings(o, table);
    const int threads = resolve_threads(o);
    const auto all = scenario_set(o);

    std::vector<std::string> ids = o.scenarios;
    if (ids.empty()) throw UsageError("--scenario is required (an id, a comma separated list, or 'all')");
    if (ids.size() == 1 && ids[0] == "all") {
        ids.clear();
        for (const auto& s : all) ids.push_back(s.id);
    }
    std::vector<const Scenario*> chosen;
    for (const auto& id : ids) chosen.push_back(&pick(all, id));

    const auto model = make_model(design, settings);
    std::vector<OcReport> reports;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        const Scenario& s = *chosen[k];
        // each scenario gets its own stream so adding scenarios leaves the
        // others unchanged
        const std::uint64_t scenario_seed = split_seed(seed, std::stoull(fnv1a_hex(s.id), nullptr, 16));
        const auto outcomes = run_replications(s, design, *model, o.reps, scenario_seed, threads);
        reports.push_back(aggregate_oc(outcomes, s, design, table));
        if (!o.out.empty()) {
            write_text_file(std::filesystem::path(o.out) / ("replications_" + s.id + ".csv"),
                            format_replications_csv(outcomes));
        }
    }
    std::fputs(format_oc_text(reports).c_str(), stdout);
    if (!o.out.empty()) {
        const std::filesystem::path dir(o.out);
        write_text_file(dir / "oc.txt", format_oc_text(reports));
        write_text_file(dir / "oc.csv", format_oc_csv(reports));
        write_text_file(dir / "oc.json", format_oc_json(reports));
        emit_manifest(o.out, "simulate", args, o, seed, started);
    }
    for (const auto& r : reports) {
        if (!r.complete()) return kExitRuntime;
    }
    return 0;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
            throw UsageError("malformed grid value '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty grid list");
    return out;
}

std::vector<std::pair<double, double>> parse_grid(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || text.find(':', colon + 1) != std::string::npos)
        throw UsageError("grid must look like 'L1,L2,...:U1,U2,...'");
    const auto lower = parse_list(text.substr(0, colon));
    const auto upper = parse_list(text.substr(colon + 1));
    std::vector<std::pair<double, double>> grid;
    for (double lo : lower) {
        for (double hi : upper) {
            if (!(lo > 0.0 && lo < 0.5 && hi > 0.5 && hi < 1.0))
                throw UsageError("grid point (" + std::to_string(lo) + ", " + std::to_string(hi) +
                                 ") violates 0 < xi_lower < 0.5 < xi_upper < 1");
            grid.emplace_back(lo, hi);
        }
    }
    return grid;
}

int cmd_calibrate(const Options& o, const std::vector<std::string>& args) {
    const std::string started = utc_timestamp();
    if (o.reps <= 0) throw UsageError("--reps must be positive");
    if (!(o.target > 0.0 && o.target < 1.0)) throw UsageError("--target must lie in (0, 1)");
    const auto grid = parse_grid(o.grid);
    const std::uint64_t seed = resolve_seed(o);
    const UtilityTable table = resolve_utility(o);
    const DesignConfig design = resolve_design(o);
    const ModelSettings settings = resolve_settings(o, table);
    const int threads = resolve_threads(o);
    const auto all = scenario_set(o);
    const Scenario& null_s = pick(all, o.scenarios.empty() ? "2" : o.scenarios.front());
    const Scenario& alt_s = pick(all, o.alt_scenario);

    const auto model = make_model(design, settings);
    const CalibrationReport report =
        calibrate_thresholds(null_s, alt_s, design, grid, o.target, *model, o.reps, seed, table, threads);
    const std::string csv = format_calibration_csv(report);
    std::fputs(csv.c_str(), stdout);
    if (report.selected) {
        const auto& p = report.grid[*report.selected];
        std::printf("selected xi_lower=%.4g xi_upper=%.4g (TIE %.3f, PCD %.3f)\n", p.xi_lower, p.xi_upper, p.tie,
                    p.pcd_alternative);
    } else {
        std::printf("no grid point meets the target type I error %.4g\n", o.target);
    }
    if (!o.out.empty()) {
        write_text_file(std::filesystem::path(o.out) / "calibration.csv", csv);
        emit_manifest(o.out, "calibrate", args, o, seed, started);
    }
    return 0;
}

int cmd_utility_check(const Options& o) {
    if (o.draws <= 0) throw UsageError("--draws must be positive");
    const std::uint64_t seed = resolve_seed(o);
    const UtilityTable table = resolve_utility(o);

    struct Arm {
        std::string label;
        TruthSpec truth;
        std::optional<double> reference;
    };
    std::vector<Arm> arms;
    if (!o.mixture.empty()) {
        try {
            arms.push_back({"mixture", parse_mixture(o.mixture), std::nullopt});
        } catch (const MixtureParseError& e) {
            throw UsageError(std::string("mixture: ") + e.what());
        }
    } else if (!o.scenarios.empty()) {
        const auto all = scenario_set(o);
        for (const auto& id : o.scenarios) {
            const Scenario& s = pick(all, id);
            arms.push_back({s.id + "/control", s.control, s.reference_u_control});
            arms.push_back({s.id + "/treatment", s.treatment, s.reference_u_treatment});
        }
    } else {
        throw UsageError("give --scenario or --mixture");
    }

    std::string csv = "arm,closed_form,oracle,oracle_se,stratified,reference\n";
    std::printf("%-14s %12s %12s %9s %12s %10s\n", "arm", "closed_form", "oracle", "oracle_se", "stratified",
                "reference");
    for (std::size_t k = 0; k < arms.size(); ++k) {
        const auto& a = arms[k];
        const double closed = expected_utility(a.truth, table).value;
        const auto mc = mc_oracle_expected_utility(a.truth, o.draws, split_seed(seed, k), table);
        const double se = mc.mc_std_error.value_or(0.0);
        const double strat = mc_oracle_stratified(a.truth, o.draws, split_seed(seed, 1000 + k), table).value;
        char ref[32] = "";
        if (a.reference) std::snprintf(ref, sizeof ref, "%.2f", *a.reference);
        std::printf("%-14s %12.4f %12.4f %9.4f %12.4f %10s\n", a.label.c_str(), closed, mc.value, se, strat,
                    a.reference ? ref : "-");
        char line[256];
        std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%s\n", a.label.c_str(), closed, mc.value, se, strat,
                      ref);
        csv += line;
    }
    if (!o.out.empty()) write_text_file(o.out, csv);
    return 0;
}

int cmd_gen_historical(const Options& o) {
    const std::uint64_t seed = resolve_seed(o);
    if (o.records <= 0) throw UsageError("--records must be positive");
    const auto days = generate_historical_days(seed, o.records);
    DataSet d;
    for (std::size_t i = 0; i < days.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "H%04zu", i + 1);
        d.records.push_back({id, 0, days[i]});
    }
    const std::string text = format_dataset(d);
    if (o.out.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        write_text_file(o.out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Utility-based sequential two-arm trial design with a nonparametric Bayesian model"};
    app.set_version_flag("--version", std::string(BNPTRIAL_VERSION));
    app.require_subcommand(1);
    Options o;

    auto* interim = app.add_subcommand("interim", "Analyse accrued data and report the interim decision");
    add_seed(interim, o);
    add_design(interim, o);
    interim->add_option("--data", o.data_path, "CSV with patient_id,group,days")->required();
    interim->add_option("--chain-dump", o.chain_dump, "Write retained draws to this CSV");

    auto* simulate = app.add_subcommand("simulate", "Operating characteristics by repeated trial simulation");
    add_seed(simulate, o);
    add_design(simulate, o);
    simulate->add_option("--scenario", o.scenarios, "Scenario id(s), comma separated, or 'all'")->delimiter(',');
    simulate->add_option("--config", o.config_path, "Scenario file (JSON); default is the built-in library");
    simulate->add_option("--reps", o.reps, "Replications per scenario")->capture_default_str();
    simulate->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    simulate->add_option("--out", o.out, "Output directory for reports and manifest");

    auto* calibrate = app.add_subcommand("calibrate", "Grid search over (xi_lower, xi_upper)");
    add_seed(calibrate, o);
    add_design(calibrate, o);
    calibrate->add_option("--scenario", o.scenarios, "Null scenario id")->expected(1);
    calibrate->add_option("--alt-scenario", o.alt_scenario, "Alternative scenario id")->capture_default_str();
    calibrate->add_option("--config", o.config_path, "Scenario file (JSON)");
    calibrate->add_option("--grid", o.grid, "Grid 'L1,L2,...:U1,U2,...'")->capture_default_str();
    calibrate->add_option("--target", o.target, "Largest acceptable type I error")->capture_default_str();
    calibrate->add_option("--reps", o.reps, "Replications per scenario")->capture_default_str();
    calibrate->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    calibrate->add_option("--out", o.out, "Output directory");

    auto* ucheck = app.add_subcommand("utility-check", "Closed-form versus Monte Carlo expected utilities");
    add_seed(ucheck, o);
    ucheck->add_option("--scenario", o.scenarios, "Scenario id(s)")->delimiter(',');
    ucheck->add_option("--config", o.config_path, "Scenario file (JSON)");
    ucheck->add_option("--mixture", o.mixture, "e.g. '0.2*zero + 0.8*normal(1.5,0.3)'");
    ucheck->add_option("--draws", o.draws, "Monte Carlo oracle draws")->capture_default_str();
    ucheck->add_option("--utility", o.utility_path, "Utility table file");
    ucheck->add_option("--out", o.out, "Write the table as CSV");

    auto* hist = app.add_subcommand("gen-historical", "Write the synthetic historical resolution times");
    add_seed(hist, o);
    hist->add_option("--records", o.records, "Number of records")->capture_default_str();
    hist->add_option("--out", o.out, "Output CSV (default stdout)");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*interim) return cmd_interim(o);
        if (*simulate) return cmd_simulate(o, args);
        if (*calibrate) return cmd_calibrate(o, args);
        if (*ucheck) return cmd_utility_check(o);
        if (*hist) return cmd_gen_historical(o);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
