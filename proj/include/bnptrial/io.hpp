#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnptrial/oc.hpp"
#include "bnptrial/posterior.hpp"
#include "bnptrial/scenarios.hpp"
#include "bnptrial/utility.hpp"

namespace bnptrial {

// Input file problems; the message lists every offending line.
class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct PatientRecord {
    std::string patient_id;
    int group = 0;  // 0 control, 1 treatment
    double days = 0.0;
};

struct DataSet {
    std::vector<PatientRecord> records;
    std::string provenance;

    TrialData to_trial_data() const;
};

// CSV with header `patient_id,group,days`.
DataSet load_dataset(const std::filesystem::path& path);
DataSet parse_dataset(const std::string& text, const std::string& provenance);
std::string format_dataset(const DataSet& data);
void save_dataset(const DataSet& data, const std::filesystem::path& path);

// Throws DataError unless the arm counts are within one of each other after
// every full cohort.
void check_cohort_balance(const DataSet& data, int cohort_size);

// Two columns `days utility`; the row with days 0 gives u(0). Blank lines and
// `#` comments are skipped.
UtilityTable load_utility_table(const std::filesystem::path& path);
UtilityTable parse_utility_table(const std::string& text);

// Declarative scenario file (JSON). Empirical components name a dataset, either
// "historical" (built in) or a key of the top-level "datasets" object mapping
// to a CSV of days relative to the config file.
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);
std::vector<Scenario> parse_scenarios(const std::string& json_text, const std::filesystem::path& base_dir);
std::string scenarios_to_json(const std::vector<Scenario>& scenarios);

std::string format_oc_text(const std::vector<OcReport>& reports);
std::string format_oc_csv(const std::vector<OcReport>& reports);
std::string format_oc_json(const std::vector<OcReport>& reports);
std::string format_replications_csv(const std::vector<ReplicationOutcome>& outcomes);
std::string format_calibration_csv(const CalibrationReport& report);
std::string format_chain_csv(const PosteriorDraws& draws);

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::string version;
    std::string started_utc;
    std::string finished_utc;
    std::vector<std::string> arguments;

    std::string to_json() const;
};

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);
std::string utc_timestamp();

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace bnptrial
