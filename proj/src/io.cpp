#include "bnptrial/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

namespace bnptrial {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string shortest(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

std::string fixed(double x, int digits) {
    if (std::isnan(x)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

std::vector<double> load_days_csv(const std::filesystem::path& path) {
    const DataSet d = load_dataset(path);
    std::vector<double> days;
    for (const auto& r : d.records) days.push_back(r.days);
    return days;
}

ojson component_to_json(double w, const Component& c) {
    ojson j;
    j["weight"] = w;
    if (std::holds_alternative<PointMassZero>(c)) {
        j["type"] = "zero";
    } else if (auto* n = std::get_if<NormalY>(&c)) {
        j["type"] = "normal";
        j["mean"] = n->mean;
        j["sd"] = n->sd;
    } else if (auto* e = std::get_if<ExponentialY>(&c)) {
        j["type"] = "exponential";
        j["rate"] = e->rate;
    } else if (auto* wb = std::get_if<WeibullY>(&c)) {
        j["type"] = "weibull";
        j["shape"] = wb->shape;
        j["scale"] = wb->scale;
    } else if (auto* em = std::get_if<EmpiricalDays>(&c)) {
        j["type"] = "empirical";
        j["dataset"] = em->source;
    }
    return j;
}

TruthSpec truth_from_json(const json& arm, const std::map<std::string, std::shared_ptr<const std::vector<double>>>& sets,
                          const std::string& where) {
    if (!arm.is_array()) throw DataError(where + ": arm must be an array of components");
    std::vector<double> w;
    std::vector<Component> comps;
    for (const auto& c : arm) {
        const std::string type = c.at("type").get<std::string>();
        w.push_back(c.at("weight").get<double>());
        if (type == "zero") {
            comps.push_back(PointMassZero{});
        } else if (type == "normal") {
            comps.push_back(NormalY{c.at("mean").get<double>(), c.at("sd").get<double>()});
        } else if (type == "exponential") {
            comps.push_back(ExponentialY{c.at("rate").get<double>()});
        } else if (type == "weibull") {
            comps.push_back(WeibullY{c.at("shape").get<double>(), c.at("scale").get<double>()});
        } else if (type == "empirical") {
            const std::string name = c.at("dataset").get<std::string>();
            auto it = sets.find(name);
            if (it == sets.end()) throw DataError(where + ": unknown dataset '" + name + "'");
            comps.push_back(EmpiricalDays{it->second, name});
        } else {
            throw DataError(where + ": unknown component type '" + type + "'");
        }
    }
    try {
        return TruthSpec(std::move(w), std::move(comps));
    } catch (const std::invalid_argument& e) {
        throw DataError(where + ": " + e.what());
    }
}

}  // namespace

TrialData DataSet::to_trial_data() const {
    TrialData out;
    for (const auto& r : records) out.y[r.group].push_back(std::log1p(r.days));
    return out;
}

DataSet parse_dataset(const std::string& text, const std::string& provenance) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    DataSet data;
    data.provenance = provenance;
    std::vector<std::string> errors;
    std::set<std::string> ids;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            if (t != "patient_id,group,days") {
                throw DataError(provenance + ": line " + std::to_string(line_no) +
                                ": expected header 'patient_id,group,days'");
            }
            header_seen = true;
            continue;
        }
        const auto cols = split(t, ',');
        const std::string where = "line " + std::to_string(line_no);
        if (cols.size() != 3) {
            errors.push_back(where + ": expected 3 columns, found " + std::to_string(cols.size()));
            continue;
        }
        PatientRecord r;
        r.patient_id = trim(cols[0]);
        double g = 0.0;
        if (r.patient_id.empty()) errors.push_back(where + ": empty patient_id");
        if (!parse_double(cols[1], g) || (g != 0.0 && g != 1.0)) {
            errors.push_back(where + ": group must be 0 or 1");
            continue;
        }
        r.group = static_cast<int>(g);
        if (!parse_double(cols[2], r.days) || !std::isfinite(r.days)) {
            errors.push_back(where + ": days is not a number");
            continue;
        }
        if (r.days < 0.0) {
            errors.push_back(where + ": negative days (" + trim(cols[2]) + ")");
            continue;
        }
        if (!ids.insert(r.patient_id).second) {
            errors.push_back(where + ": duplicate patient_id '" + r.patient_id + "'");
            continue;
        }
        data.records.push_back(r);
    }
    if (!header_seen) throw DataError(provenance + ": empty dataset (missing header)");
    if (!errors.empty()) {
        std::string msg = provenance + ": invalid rows";
        for (const auto& e : errors) msg += "\n  " + e;
        throw DataError(msg);
    }
    return data;
}

DataSet load_dataset(const std::filesystem::path& path) { return parse_dataset(read_text_file(path), path.string()); }

std::string format_dataset(const DataSet& data) {
    std::string out = "patient_id,group,days\n";
    for (const auto& r : data.records) out += r.patient_id + "," + std::to_string(r.group) + "," + shortest(r.days) + "\n";
    return out;
}

void save_dataset(const DataSet& data, const std::filesystem::path& path) {
    write_text_file(path, format_dataset(data));
}

void check_cohort_balance(const DataSet& data, int cohort_size) {
    int n[2] = {0, 0};
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        ++n[data.records[i].group];
        if ((i + 1) % cohort_size == 0 && std::abs(n[0] - n[1]) > 1) {
            throw DataError("arms unbalanced after " + std::to_string(i + 1) + " patients (" + std::to_string(n[0]) +
                            " control, " + std::to_string(n[1]) + " treatment)");
        }
    }
}

UtilityTable parse_utility_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<UtilityKnot> knots;
    std::optional<double> zero;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double t = 0.0, u = 0.0;
        if (!(row >> t)) {
            if (trim(line).empty()) continue;
            throw DataError("utility table line " + std::to_string(line_no) + ": expected 'days utility'");
        }
        std::string extra;
        if (!(row >> u) || (row >> extra))
            throw DataError("utility table line " + std::to_string(line_no) + ": expected 'days utility'");
        if (t == 0.0) {
            zero = u;
        } else {
            knots.push_back({t, u});
        }
    }
    if (!zero) throw DataError("utility table has no row for 0 days");
    try {
        return UtilityTable(std::move(knots), *zero);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("utility table: ") + e.what());
    }
}

UtilityTable load_utility_table(const std::filesystem::path& path) { return parse_utility_table(read_text_file(path)); }

std::vector<Scenario> parse_scenarios(const std::string& json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("scenario config: ") + e.what());
    }
    std::map<std::string, std::shared_ptr<const std::vector<double>>> sets;
    sets["historical"] = historical_days();
    if (root.contains("datasets")) {
        for (const auto& [name, file] : root["datasets"].items()) {
            sets[name] = std::make_shared<const std::vector<double>>(load_days_csv(base_dir / file.get<std::string>()));
        }
    }
    std::vector<Scenario> out;
    try {
        for (const auto& s : root.at("scenarios")) {
            Scenario sc;
            sc.id = s.at("id").get<std::string>();
            const std::string where = "scenario " + sc.id;
            sc.description = s.value("description", "");
            sc.null_hypothesis = s.value("null", false);
            sc.control = truth_from_json(s.at("control"), sets, where + " control");
            sc.treatment = truth_from_json(s.at("treatment"), sets, where + " treatment");
            if (s.contains("reference")) {
                const auto& r = s["reference"];
                if (r.contains("control")) sc.reference_u_control = r["control"].get<double>();
                if (r.contains("treatment")) sc.reference_u_treatment = r["treatment"].get<double>();
            }
            if (s.contains("correct_decision")) sc.correct_terminal = s["correct_decision"].get<int>();
            out.push_back(std::move(sc));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("scenario config: ") + e.what());
    }
    return out;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
    return parse_scenarios(read_text_file(path), path.parent_path());
}

std::string scenarios_to_json(const std::vector<Scenario>& scenarios) {
    ojson root;
    root["scenarios"] = ojson::array();
    for (const auto& s : scenarios) {
        ojson j;
        j["id"] = s.id;
        j["description"] = s.description;
        j["null"] = s.null_hypothesis;
        for (int arm = 0; arm < 2; ++arm) {
            const TruthSpec& t = arm == 0 ? s.control : s.treatment;
            ojson comps = ojson::array();
            for (std::size_t k = 0; k < t.weights().size(); ++k) comps.push_back(component_to_json(t.weights()[k], t.components()[k]));
            j[arm == 0 ? "control" : "treatment"] = comps;
        }
        if (s.reference_u_control || s.reference_u_treatment) {
            ojson r;
            if (s.reference_u_control) r["control"] = *s.reference_u_control;
            if (s.reference_u_treatment) r["treatment"] = *s.reference_u_treatment;
            j["reference"] = r;
        }
        if (s.correct_terminal) j["correct_decision"] = *s.correct_terminal;
        root["scenarios"].push_back(j);
    }
    return root.dump(2) + "\n";
}

std::string format_oc_text(const std::vector<OcReport>& reports) {
    std::ostringstream os;
    os << std::left << std::setw(9) << "scenario" << std::setw(15) << "model" << std::right << std::setw(6) << "reps"
       << std::setw(8) << "dU*" << std::setw(8) << "MSS" << std::setw(7) << "TIE" << std::setw(7) << "PCD"
       << std::setw(9) << "EarS" << std::setw(7) << "FinS" << std::setw(7) << "EarF" << std::setw(7) << "FinF"
       << std::setw(8) << "bias" << std::setw(8) << "RMSE" << "\n";
    for (const auto& r : reports) {
        os << std::left << std::setw(9) << r.scenario_id << std::setw(15) << r.model << std::right << std::setw(6)
           << r.n_completed() << std::setw(8) << fixed(r.delta_u_star, 2) << std::setw(8) << fixed(r.mss, 2)
           << std::setw(7) << (r.tie ? fixed(*r.tie, 2) : "-") << std::setw(7) << fixed(r.pcd, 2) << std::setw(9)
           << fixed(r.pr_ears, 2) << std::setw(7) << fixed(r.pr_fins, 2) << std::setw(7) << fixed(r.pr_earf, 2)
           << std::setw(7) << fixed(r.pr_finf, 2) << std::setw(8) << fixed(r.bias, 2) << std::setw(8)
           << fixed(r.rmse, 2) << "\n";
        if (!r.complete()) {
            os << "  incomplete: " << r.n_failed << " of " << r.n_reps << " replications failed\n";
            for (const auto& f : r.failures) os << "    " << f << "\n";
        }
    }
    return os.str();
}

std::string format_oc_csv(const std::vector<OcReport>& reports) {
    std::string out =
        "scenario,model,n_reps,n_failed,delta_u_star,correct_decision,mss,tie,pcd,pr_ears,pr_fins,pr_earf,pr_finf,bias,"
        "rmse\n";
    for (const auto& r : reports) {
        out += r.scenario_id + "," + r.model + "," + std::to_string(r.n_reps) + "," + std::to_string(r.n_failed) + "," +
               fixed(r.delta_u_star, 6) + "," + std::to_string(r.correct_terminal) + "," + fixed(r.mss, 6) + "," +
               (r.tie ? fixed(*r.tie, 6) : "") + "," + fixed(r.pcd, 6) + "," + fixed(r.pr_ears, 6) + "," +
               fixed(r.pr_fins, 6) + "," + fixed(r.pr_earf, 6) + "," + fixed(r.pr_finf, 6) + "," + fixed(r.bias, 6) +
               "," + fixed(r.rmse, 6) + "\n";
    }
    return out;
}

std::string format_oc_json(const std::vector<OcReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json j;
        j["scenario"] = r.scenario_id;
        j["model"] = r.model;
        j["n_reps"] = r.n_reps;
        j["n_failed"] = r.n_failed;
        j["failures"] = r.failures;
        j["delta_u_star"] = r.delta_u_star;
        j["correct_decision"] = r.correct_terminal;
        j["mss"] = r.mss;
        j["tie"] = r.tie ? json(*r.tie) : json(nullptr);
        j["pcd"] = r.pcd;
        j["pr_ears"] = r.pr_ears;
        j["pr_fins"] = r.pr_fins;
        j["pr_earf"] = r.pr_earf;
        j["pr_finf"] = r.pr_finf;
        j["bias"] = r.bias;
        j["rmse"] = r.rmse;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

std::string format_replications_csv(const std::vector<ReplicationOutcome>& outcomes) {
    std::string out = "replication,seed,status,n_used,terminal,eta_look1,eta_look2,eta_look3,delta_u_final,error\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const auto& r = o.result;
        out += std::to_string(i) + "," + std::to_string(r.seed) + "," + (o.failed ? "failed" : "ok") + ",";
        if (o.failed) {
            std::string err = o.error;
            for (char& c : err) {
                if (c == ',' || c == '\n') c = ';';
            }
            out += ",,,,,," + err + "\n";
            continue;
        }
        out += std::to_string(r.n_used) + "," + std::to_string(r.terminal);
        for (std::size_t k = 0; k < 3; ++k) out += "," + (k < r.interim_etas.size() ? fixed(r.interim_etas[k], 4) : "");
        out += "," + fixed(r.delta_u_means.back(), 6) + ",\n";
    }
    return out;
}

std::string format_calibration_csv(const CalibrationReport& report) {
    std::string out = "xi_lower,xi_upper,tie,pcd_alternative,mss_null,mss_alternative,feasible,selected\n";
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
        const auto& p = report.grid[i];
        out += fixed(p.xi_lower, 4) + "," + fixed(p.xi_upper, 4) + "," + fixed(p.tie, 4) + "," +
               fixed(p.pcd_alternative, 4) + "," + fixed(p.mss_null, 2) + "," + fixed(p.mss_alternative, 2) + "," +
               (p.feasible ? "1" : "0") + "," + (report.selected && *report.selected == i ? "1" : "0") + "\n";
    }
    return out;
}

std::string format_chain_csv(const PosteriorDraws& draws) {
    std::string out = "u_bar0,u_bar1,sigma2,kappa,alpha,nu00,nu10\n";
    for (const auto& r : draws.trace) {
        out += fixed(r.u_bar0, 6) + "," + fixed(r.u_bar1, 6) + "," + shortest(r.sigma2) + "," + fixed(r.kappa, 6) +
               "," + shortest(r.alpha) + "," + fixed(r.nu00, 6) + "," + fixed(r.nu10, 6) + "\n";
    }
    return out;
}

std::string RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["arguments"] = arguments;
    j["config_hash"] = config_hash;
    j["master_seed"] = master_seed;
    j["version"] = version;
    j["started_utc"] = started_utc;
    j["finished_utc"] = finished_utc;
    return j.dump(2) + "\n";
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace bnptrial
