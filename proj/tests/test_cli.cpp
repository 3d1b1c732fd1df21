#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "bnptrial/io.hpp"
#include "support.hpp"

using namespace bnptrial;
using testsupport::fresh_dir;
using testsupport::run_cli;

namespace {

const std::string kData = BNPTRIAL_DATA_DIR;
const std::string kFast = " --burnin 150 --iters 150";

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

std::filesystem::path write_separated(const std::filesystem::path& dir) {
    DataSet d;
    for (int i = 0; i < 8; ++i) {
        d.records.push_back({"C" + std::to_string(i), 0, 30.0});
        d.records.push_back({"T" + std::to_string(i), 1, 0.0});
    }
    save_dataset(d, dir / "separated.csv");
    return dir / "separated.csv";
}

// value of `column` on the first data row whose first field is `row`
std::string csv_field(const std::string& csv, const std::string& row, const std::string& column) {
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> names;
    std::stringstream hs(header);
    for (std::string f; std::getline(hs, f, ',');) names.push_back(f);
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ls(line);
        for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
        if (fields.empty() || fields[0] != row) continue;
        for (std::size_t i = 0; i < names.size() && i < fields.size(); ++i) {
            if (names[i] == column) return fields[i];
        }
    }
    return "";
}

}  // namespace

TEST_CASE("a seed is required") {
    const auto dir = fresh_dir("cli_seed");
    const auto data = write_separated(dir);
    std::string out;
    CHECK(run_cli("interim --data " + q(data) + kFast, &out, "env -u BNPTRIAL_SEED") == 2);
    CHECK(out.find("seed") != std::string::npos);
    CHECK(run_cli("interim --data " + q(data) + kFast, &out, "BNPTRIAL_SEED=11") == 10);
    std::string flag_out;
    CHECK(run_cli("interim --seed 11 --data " + q(data) + kFast, &flag_out, "env -u BNPTRIAL_SEED") == 10);
    CHECK(flag_out == out);
}

TEST_CASE("interim on fully separated arms stops for superiority") {
    const auto dir = fresh_dir("cli_interim");
    const auto data = write_separated(dir);
    for (const char* model : {"bnp-ordered", "bnp-unordered", "zero-weibull"}) {
        INFO(model);
        std::string out;
        const int code =
            run_cli("interim --seed 3 --model " + std::string(model) + " --data " + q(data) +
                        " --chain-dump " + q(dir / "chain.csv"),
                    &out);
        CHECK(code == 10);
        CHECK(out.find("stop_superior") != std::string::npos);
        const auto pos = out.find("eta");
        REQUIRE(pos != std::string::npos);
        const double eta = std::stod(out.substr(out.find_first_of("0123456789", pos)));
        CHECK(eta > 0.9);
    }
    const std::string chain = read_text_file(dir / "chain.csv");
    CHECK(chain.rfind("u_bar0,u_bar1", 0) == 0);
}

TEST_CASE("interim usage errors") {
    const auto dir = fresh_dir("cli_interim_bad");
    write_text_file(dir / "empty.csv", "patient_id,group,days\n");
    std::string out;
    CHECK(run_cli("interim --seed 1 --data " + q(dir / "empty.csv"), &out) == 2);
    write_text_file(dir / "nothing.csv", "");
    CHECK(run_cli("interim --seed 1 --data " + q(dir / "nothing.csv"), &out) == 2);
    write_text_file(dir / "neg.csv", "patient_id,group,days\nA,0,-1\nB,1,2\n");
    CHECK(run_cli("interim --seed 1 --data " + q(dir / "neg.csv"), &out) == 2);
    CHECK(out.find("line 2") != std::string::npos);
    // 10 patients is not a look of the default design
    DataSet d;
    for (int i = 0; i < 10; ++i) d.records.push_back({"P" + std::to_string(i), i % 2, 1.0});
    save_dataset(d, dir / "ten.csv");
    CHECK(run_cli("interim --seed 1 --data " + q(dir / "ten.csv"), &out) == 2);
    CHECK(run_cli("interim --seed 1 --data " + q(dir / "missing.csv"), &out) == 2);
    CHECK(run_cli("interim --seed 1 --model gamma --data " + q(write_separated(dir)), &out) == 2);
    CHECK(run_cli("", &out) == 2);
}

TEST_CASE("simulate is byte-for-byte reproducible") {
    const auto a = fresh_dir("cli_sim_a");
    const auto b = fresh_dir("cli_sim_b");
    const std::string args = "simulate --scenario 3,2 --reps 4 --seed 7" + kFast + " --out ";
    std::string out_a, out_b;
    REQUIRE(run_cli(args + q(a), &out_a) == 0);
    REQUIRE(run_cli(args + q(b) + " --threads 2", &out_b) == 0);
    CHECK(out_a == out_b);
    for (const char* f : {"oc.csv", "oc.txt", "oc.json", "replications_2.csv", "replications_3.csv"}) {
        INFO(f);
        CHECK(read_text_file(a / f) == read_text_file(b / f));
    }
    const std::string manifest = read_text_file(a / "manifest.json");
    CHECK(manifest.find("\"master_seed\": 7") != std::string::npos);
    const std::string csv = read_text_file(a / "oc.csv");
    CHECK(csv_field(csv, "3", "n_reps") == "4");
    CHECK(!csv_field(csv, "2", "tie").empty());

    // a scenario's results do not depend on which others run alongside it
    const auto c = fresh_dir("cli_sim_c");
    REQUIRE(run_cli("simulate --scenario 3 --reps 4 --seed 7" + kFast + " --out " + q(c)) == 0);
    CHECK(read_text_file(c / "replications_3.csv") == read_text_file(a / "replications_3.csv"));

    const auto d = fresh_dir("cli_sim_d");
    REQUIRE(run_cli("simulate --scenario 3 --reps 4 --seed 8" + kFast + " --out " + q(d)) == 0);
    CHECK(read_text_file(d / "replications_3.csv") != read_text_file(a / "replications_3.csv"));
}

TEST_CASE("simulate usage errors") {
    std::string out;
    CHECK(run_cli("simulate --scenario 3 --reps 0 --seed 7", &out) == 2);
    CHECK(run_cli("simulate --scenario 42 --reps 1 --seed 7", &out) == 2);
    CHECK(out.find("1, 2, 3, 4, 5, 6, 7, 8, 9") != std::string::npos);
    CHECK(run_cli("simulate --reps 1 --seed 7", &out) == 2);
    CHECK(run_cli("simulate --scenario 3 --reps 1 --seed 7 --xi-lower 0.7", &out) == 2);
}

TEST_CASE("simulate from the shipped scenario file") {
    const auto a = fresh_dir("cli_cfg_a");
    const auto b = fresh_dir("cli_cfg_b");
    const std::string common = " --scenario 1 --reps 3 --seed 5 --model zero-weibull" + kFast;
    REQUIRE(run_cli("simulate" + common + " --out " + q(a)) == 0);
    REQUIRE(run_cli("simulate --config " + q(std::filesystem::path(kData) / "scenarios.json") + common + " --out " +
                    q(b)) == 0);
    CHECK(read_text_file(a / "replications_1.csv") == read_text_file(b / "replications_1.csv"));
}

TEST_CASE("calibrate") {
    const auto dir = fresh_dir("cli_cal");
    std::string out;
    REQUIRE(run_cli("calibrate --seed 4 --reps 3 --grid 0.05:0.9 --target 0.5" + kFast + " --out " + q(dir),
                    &out) == 0);
    const std::string csv = read_text_file(dir / "calibration.csv");
    CHECK(csv.find("0.0500,0.9000,") != std::string::npos);
    std::istringstream lines(csv);
    int n = 0;
    for (std::string l; std::getline(lines, l);) ++n;
    CHECK(n == 2);
    if (csv.find(",1,1\n") != std::string::npos) CHECK(out.find("selected xi_lower=0.05 xi_upper=0.9") != std::string::npos);

    CHECK(run_cli("calibrate --seed 4 --reps 3 --grid 0.05,abc:0.9", &out) == 2);
    CHECK(run_cli("calibrate --seed 4 --reps 3 --grid 0.05", &out) == 2);
    CHECK(run_cli("calibrate --seed 4 --reps 3 --grid 0.6:0.9", &out) == 2);
    CHECK(run_cli("calibrate --seed 4 --reps 3 --grid 0.05:0.9:0.95", &out) == 2);
}

TEST_CASE("utility check") {
    const auto dir = fresh_dir("cli_ucheck");
    std::string out;
    REQUIRE(run_cli("utility-check --seed 1 --scenario 2,7 --draws 200000 --out " + q(dir / "u.csv"), &out) == 0);
    const std::string csv = read_text_file(dir / "u.csv");
    for (auto [arm, ref] : {std::pair{"2/control", 23.44}, std::pair{"2/treatment", 23.44},
                            std::pair{"7/control", 11.86}, std::pair{"7/treatment", 55.33}}) {
        INFO(arm);
        CHECK(std::abs(std::stod(csv_field(csv, arm, "closed_form")) - ref) < 0.15);
        CHECK(std::abs(std::stod(csv_field(csv, arm, "oracle")) - ref) < 0.15);
        CHECK(std::stod(csv_field(csv, arm, "reference")) == ref);
    }

    REQUIRE(run_cli("utility-check --seed 1 --mixture zero --draws 1000 --out " + q(dir / "z.csv"), &out) == 0);
    const std::string z = read_text_file(dir / "z.csv");
    CHECK(csv_field(z, "mixture", "closed_form") == "100.000000");
    CHECK(csv_field(z, "mixture", "oracle") == "100.000000");

    CHECK(run_cli("utility-check --seed 1 --mixture \"0.5*zero + 0.5*normal(1,)\"", &out) == 2);
    CHECK(out.find("position 24") != std::string::npos);
    CHECK(run_cli("utility-check --seed 1", &out) == 2);
    CHECK(run_cli("utility-check --scenario 2", &out, "env -u BNPTRIAL_SEED") == 2);
}

TEST_CASE("historical generator reproduces the shipped file") {
    const auto dir = fresh_dir("cli_hist");
    REQUIRE(run_cli("gen-historical --seed 20140601 --out " + q(dir / "h.csv")) == 0);
    CHECK(read_text_file(dir / "h.csv") == read_text_file(std::filesystem::path(kData) / "historical.csv"));
    std::string out;
    REQUIRE(run_cli("gen-historical --seed 3 --records 5", &out) == 0);
    CHECK(out.rfind("patient_id,group,days\nH0001,0,", 0) == 0);
    CHECK(run_cli("gen-historical --seed 3 --records 0", &out) == 2);
}
