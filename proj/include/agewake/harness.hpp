#pragma once

#include <atomic>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <variant>

#include <json.hpp>

#include "agewake/oracle.hpp"
#include "agewake/sim.hpp"
#include "agewake/solver.hpp"

// Experiment harness: spec files, parameter sweeps, CSV output with a sidecar
// metadata file. Spec files are either key = value text (with [battery] as a
// nested table) or the same fields as canonical JSON.

namespace agewake {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

enum class ExperimentKind {
    solve,
    simulate,
    sweep_epsilon,
    sweep_sources,
    sweep_efficiency,
    sweep_lifetime,
    validate
};

enum class SchedulerKind { age_optimal, fixed_rate, synchronized };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::sweep_epsilon: return "sweep_epsilon";
    case ExperimentKind::sweep_sources: return "sweep_sources";
    case ExperimentKind::sweep_efficiency: return "sweep_efficiency";
    case ExperimentKind::sweep_lifetime: return "sweep_lifetime";
    case ExperimentKind::validate: return "validate";
    }
    return "?";
}

inline const char* to_string(SchedulerKind k) {
    switch (k) {
    case SchedulerKind::age_optimal: return "age_optimal";
    case SchedulerKind::fixed_rate: return "fixed_rate";
    case SchedulerKind::synchronized: return "synchronized";
    }
    return "?";
}

/// Spec-file problems, all of them; parsing and validation never stop at the
/// first issue.
class SpecError : public std::runtime_error {
  public:
    explicit SpecError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

  private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string all = "invalid experiment spec:";
        for (const auto& i : issues) all += "\n  - " + i;
        return all;
    }
    std::vector<std::string> issues_;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::solve;
    int num_sources = 10;
    double epsilon = 0.008;        // t_s / E[T]; defaults mirror 40 us / 5 ms
    double mean_tx_time_s = 5e-3;
    TxKind tx_kind = TxKind::deterministic;
    double lognormal_sigma = 1.0;
    std::optional<std::vector<double>> weights;        // absent: uniform (0, 10] from seed
    std::optional<std::vector<double>> efficiencies;   // absent: uniform (0, 1] from seed
    std::vector<double> sweep_values;                  // absent: per-kind default grid
    std::vector<SchedulerKind> schedulers = {SchedulerKind::age_optimal,
                                             SchedulerKind::fixed_rate};
    int replications = 1;
    std::uint64_t seed = 0;
    std::uint64_t cycles = 1'000'000;
    bool simulate = false;
    SensingModel sensing_model = SensingModel::paper_faithful;
    std::string output_path;

    // Battery parameters for lifetime sweeps: 8 mAh at 5 V, no harvesting,
    // 24.75 mW transmission power.
    double battery_initial_j = 144.0;
    double battery_replenish_w = 0.0;
    double battery_tx_power_w = 0.02475;

    TxDistribution tx_distribution() const {
        switch (tx_kind) {
        case TxKind::deterministic: return TxDistribution::deterministic(mean_tx_time_s);
        case TxKind::exponential: return TxDistribution::exponential(mean_tx_time_s);
        case TxKind::lognormal: return TxDistribution::lognormal(mean_tx_time_s, lognormal_sigma);
        }
        return TxDistribution::deterministic(mean_tx_time_s);
    }
};

namespace detail {

using FieldValue = std::variant<std::string, double, bool, std::vector<double>,
                                std::vector<std::string>>;
using FieldMap = std::map<std::string, FieldValue>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

inline FieldValue classify_token_list(const std::string& value) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (true) {
        const auto comma = value.find(',', start);
        tokens.push_back(trim(value.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    std::vector<double> numbers;
    numbers.reserve(tokens.size());
    bool all_numeric = true;
    for (const auto& t : tokens) {
        double d;
        if (parse_double(t, d))
            numbers.push_back(d);
        else
            all_numeric = false;
    }
    if (all_numeric) return numbers;
    return tokens;
}

inline FieldValue classify_scalar(const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    double d;
    if (parse_double(value, d)) return d;
    return value;
}

inline FieldMap parse_key_value_text(std::istream& in, std::vector<std::string>& issues) {
    FieldMap fields;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back("line " + std::to_string(lineno) + ": unterminated section");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key =
            (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            issues.push_back("line " + std::to_string(lineno) + ": empty key or value");
            continue;
        }
        if (fields.count(key))
            issues.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        fields[key] = value.find(',') != std::string::npos ? classify_token_list(value)
                                                           : classify_scalar(value);
    }
    return fields;
}

inline FieldMap parse_json_text(const std::string& text, std::vector<std::string>& issues) {
    FieldMap fields;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        issues.push_back(std::string("json parse error: ") + e.what());
        return fields;
    }
    if (!doc.is_object()) {
        issues.push_back("json spec must be an object");
        return fields;
    }
    const auto flatten = [&](const std::string& prefix, const nlohmann::json& obj,
                             const auto& self) -> void {
        for (const auto& [key, value] : obj.items()) {
            const std::string name = prefix.empty() ? key : prefix + "." + key;
            if (value.is_object()) {
                self(name, value, self);
            } else if (value.is_string()) {
                fields[name] = value.template get<std::string>();
            } else if (value.is_boolean()) {
                fields[name] = value.template get<bool>();
            } else if (value.is_number()) {
                fields[name] = value.template get<double>();
            } else if (value.is_array()) {
                if (!value.empty() && value.front().is_string()) {
                    std::vector<std::string> items;
                    for (const auto& v : value) items.push_back(v.template get<std::string>());
                    fields[name] = items;
                } else {
                    std::vector<double> items;
                    for (const auto& v : value) {
                        if (!v.is_number()) {
                            issues.push_back("field '" + name + "': arrays must be numbers or strings");
                            return;
                        }
                        items.push_back(v.template get<double>());
                    }
                    fields[name] = items;
                }
            } else {
                issues.push_back("field '" + name + "': unsupported json type");
            }
        }
    };
    flatten("", doc, flatten);
    return fields;
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline constexpr std::array<const char*, 16> kCsvColumns = {
    "experiment_kind",   "sweep_param",
    "sweep_value",       "scheduler",
    "replication",       "objective_normalized",
    "objective_unnormalized_seconds", "empirical_peak_age_seconds",
    "ci_halfwidth",      "lower_bound",
    "upper_bound",       "gap",
    "feasible",          "collision_fraction",
    "seed",              "error"};

struct ExperimentTable {
    std::vector<std::array<std::string, kCsvColumns.size()>> rows;

    std::string csv() const {
        std::string out;
        for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
            out += kCsvColumns[c];
            out += c + 1 < kCsvColumns.size() ? ',' : '\n';
        }
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                out += row[c];
                out += c + 1 < row.size() ? ',' : '\n';
            }
        }
        return out;
    }
};

/// Default sweep grids per experiment kind. The efficiency grid starts at
/// 1/M (total efficiency one) and stays in the adequate regime, where the
/// closed-form scheduler has a real margin over the uniform-rate baseline.
inline std::vector<double> default_sweep_grid(ExperimentKind kind, int num_sources,
                                              double epsilon) {
    switch (kind) {
    case ExperimentKind::sweep_epsilon:
        return {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    case ExperimentKind::sweep_sources:
        return {1, 2, 5, 10, 20, 50, 100};
    case ExperimentKind::sweep_efficiency: {
        std::vector<double> grid{1.0 / num_sources};
        for (double v : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0})
            if (v > grid.front() + 1e-12) grid.push_back(v);
        return grid;
    }
    case ExperimentKind::sweep_lifetime: {
        std::vector<double> grid;
        for (double years : {5.0, 10.0, 15.0, 20.0, 25.0})
            grid.push_back(years * 365.0 * 24.0 * 3600.0);
        return grid;
    }
    default:
        return {epsilon};
    }
}

/// Parse and validate an experiment spec file, filling defaults. JSON is
/// detected by a leading '{' or a .json suffix.
inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::vector<std::string> issues;
    if (!in) throw SpecError({"cannot open spec file: " + path});
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();

    const bool json = (path.size() > 5 && path.substr(path.size() - 5) == ".json") ||
                      (!text.empty() && detail::trim(text).front() == '{');
    detail::FieldMap fields;
    if (json) {
        fields = detail::parse_json_text(text, issues);
    } else {
        std::istringstream stream(text);
        fields = detail::parse_key_value_text(stream, issues);
    }
    if (!issues.empty()) throw SpecError(issues);

    ExperimentSpec spec;
    auto take = [&](const char* key) -> const detail::FieldValue* {
        auto it = fields.find(key);
        if (it == fields.end()) return nullptr;
        return &it->second;
    };
    auto bad = [&](const char* key, const char* expect) {
        issues.push_back(std::string("field '") + key + "': expected " + expect);
    };
    auto get_double = [&](const char* key, double& out) {
        if (const auto* v = take(key)) {
            if (const double* d = std::get_if<double>(v))
                out = *d;
            else
                bad(key, "a number");
        }
    };
    auto get_u64 = [&](const char* key, std::uint64_t& out) {
        if (const auto* v = take(key)) {
            const double* d = std::get_if<double>(v);
            if (d && *d >= 0 && *d == std::floor(*d))
                out = static_cast<std::uint64_t>(*d);
            else
                bad(key, "a nonnegative integer");
        }
    };
    auto get_int = [&](const char* key, int& out) {
        if (const auto* v = take(key)) {
            const double* d = std::get_if<double>(v);
            if (d && *d == std::floor(*d))
                out = static_cast<int>(*d);
            else
                bad(key, "an integer");
        }
    };
    auto get_bool = [&](const char* key, bool& out) {
        if (const auto* v = take(key)) {
            if (const bool* b = std::get_if<bool>(v))
                out = *b;
            else
                bad(key, "true or false");
        }
    };
    auto get_string = [&](const char* key, std::string& out) {
        if (const auto* v = take(key)) {
            if (const std::string* s = std::get_if<std::string>(v))
                out = *s;
            else
                bad(key, "a string");
        }
    };
    // Accepts an explicit list, a single number, or the token "uniform".
    auto get_draw_or_list = [&](const char* key, std::optional<std::vector<double>>& out) {
        if (const auto* v = take(key)) {
            if (const auto* list = std::get_if<std::vector<double>>(v))
                out = *list;
            else if (const double* d = std::get_if<double>(v))
                out = std::vector<double>{*d};
            else if (const std::string* s = std::get_if<std::string>(v)) {
                if (*s == "uniform")
                    out = std::nullopt;
                else
                    bad(key, "a number list or 'uniform'");
            } else
                bad(key, "a number list or 'uniform'");
        }
    };

    std::string kind_name = "solve";
    get_string("kind", kind_name);
    if (kind_name == "solve") spec.kind = ExperimentKind::solve;
    else if (kind_name == "simulate") spec.kind = ExperimentKind::simulate;
    else if (kind_name == "sweep_epsilon") spec.kind = ExperimentKind::sweep_epsilon;
    else if (kind_name == "sweep_sources") spec.kind = ExperimentKind::sweep_sources;
    else if (kind_name == "sweep_efficiency") spec.kind = ExperimentKind::sweep_efficiency;
    else if (kind_name == "sweep_lifetime") spec.kind = ExperimentKind::sweep_lifetime;
    else if (kind_name == "validate") spec.kind = ExperimentKind::validate;
    else issues.push_back("unknown experiment kind '" + kind_name + "'");

    if (spec.kind == ExperimentKind::sweep_efficiency) spec.num_sources = 100;
    spec.simulate =
        spec.kind == ExperimentKind::simulate || spec.kind == ExperimentKind::sweep_lifetime;

    get_int("num_sources", spec.num_sources);
    get_double("epsilon", spec.epsilon);
    get_double("mean_tx_time", spec.mean_tx_time_s);
    get_double("lognormal_sigma", spec.lognormal_sigma);
    get_draw_or_list("weights", spec.weights);
    get_draw_or_list("efficiencies", spec.efficiencies);
    get_int("replications", spec.replications);
    get_u64("seed", spec.seed);
    get_u64("cycles", spec.cycles);
    get_bool("simulate", spec.simulate);
    get_string("out", spec.output_path);
    get_double("battery.initial_level", spec.battery_initial_j);
    get_double("battery.replenish_rate", spec.battery_replenish_w);
    get_double("battery.avg_tx_power", spec.battery_tx_power_w);

    std::string tx_name = "deterministic";
    get_string("tx_dist", tx_name);
    if (tx_name == "deterministic") spec.tx_kind = TxKind::deterministic;
    else if (tx_name == "exponential") spec.tx_kind = TxKind::exponential;
    else if (tx_name == "lognormal") spec.tx_kind = TxKind::lognormal;
    else issues.push_back("unknown transmission-time distribution '" + tx_name + "'");

    std::string sensing_name = "paper";
    get_string("sensing_model", sensing_name);
    if (sensing_name == "paper") spec.sensing_model = SensingModel::paper_faithful;
    else if (sensing_name == "physical") spec.sensing_model = SensingModel::physical;
    else issues.push_back("unknown sensing model '" + sensing_name + "' (use paper or physical)");

    if (const auto* v = take("sweep_values")) {
        if (const auto* list = std::get_if<std::vector<double>>(v))
            spec.sweep_values = *list;
        else if (const double* d = std::get_if<double>(v))
            spec.sweep_values = {*d};
        else
            bad("sweep_values", "a number list");
    }
    if (const auto* v = take("schedulers")) {
        std::vector<std::string> names;
        if (const auto* list = std::get_if<std::vector<std::string>>(v))
            names = *list;
        else if (const std::string* s = std::get_if<std::string>(v))
            names = {*s};
        else
            bad("schedulers", "a list of scheduler names");
        spec.schedulers.clear();
        for (const auto& nm : names) {
            if (nm == "age_optimal") spec.schedulers.push_back(SchedulerKind::age_optimal);
            else if (nm == "fixed_rate") spec.schedulers.push_back(SchedulerKind::fixed_rate);
            else if (nm == "synchronized") spec.schedulers.push_back(SchedulerKind::synchronized);
            else issues.push_back("unknown scheduler '" + nm + "'");
        }
    }

    static const char* kKnown[] = {
        "kind",          "num_sources",   "epsilon",         "mean_tx_time",
        "tx_dist",       "lognormal_sigma", "weights",       "efficiencies",
        "sweep_values",  "schedulers",    "replications",    "seed",
        "cycles",        "simulate",      "sensing_model",   "out",
        "battery.initial_level", "battery.replenish_rate", "battery.avg_tx_power"};
    for (const auto& [key, value] : fields) {
        bool known = false;
        for (const char* k : kKnown)
            if (key == k) known = true;
        if (!known) issues.push_back("unknown field '" + key + "'");
    }

    // Semantic checks, all collected.
    if (spec.num_sources < 1) issues.push_back("num_sources must be >= 1");
    if (!(spec.epsilon >= 0.0)) issues.push_back("epsilon must be >= 0");
    if (!(spec.mean_tx_time_s > 0.0)) issues.push_back("mean_tx_time must be > 0");
    if (spec.tx_kind == TxKind::lognormal && !(spec.lognormal_sigma > 0.0))
        issues.push_back("lognormal_sigma must be > 0");
    if (spec.replications < 1) issues.push_back("replications must be >= 1");
    if (spec.cycles < 1) issues.push_back("cycles must be >= 1");
    if (spec.schedulers.empty()) issues.push_back("need at least one scheduler");
    const auto check_list = [&](const char* key, const std::optional<std::vector<double>>& list,
                                bool match_sources) {
        if (!list) return;
        if (match_sources && spec.num_sources >= 1 &&
            static_cast<int>(list->size()) != spec.num_sources)
            issues.push_back(std::string(key) + ": expected " + std::to_string(spec.num_sources) +
                             " entries, got " + std::to_string(list->size()));
        for (double v : *list)
            if (!(v > 0.0)) {
                issues.push_back(std::string(key) + ": entries must be > 0");
                break;
            }
    };
    check_list("weights", spec.weights, spec.kind != ExperimentKind::sweep_sources);
    check_list("efficiencies", spec.efficiencies, spec.kind != ExperimentKind::sweep_sources);
    for (double v : spec.sweep_values)
        if (spec.kind == ExperimentKind::sweep_epsilon ? !(v >= 0.0) : !(v > 0.0)) {
            issues.push_back("sweep_values: entries out of range for this sweep");
            break;
        }
    if (spec.kind == ExperimentKind::sweep_sources)
        for (double v : spec.sweep_values)
            if (v != std::floor(v) || v < 1.0) {
                issues.push_back("sweep_values: source counts must be positive integers");
                break;
            }

    if (!issues.empty()) throw SpecError(issues);

    if (spec.sweep_values.empty())
        spec.sweep_values = default_sweep_grid(spec.kind, spec.num_sources, spec.epsilon);
    return spec;
}

namespace detail {

struct PointInstance {
    std::vector<SourceSpec> sources;
    NetworkSpec net;
    double sweep_value = 0.0;
};

inline std::vector<double> draw_pool(std::uint64_t seed, std::uint64_t tag, int count, double hi) {
    std::mt19937_64 gen = stream_rng(seed, tag);
    std::uniform_real_distribution<double> unif(0.0, hi);
    std::vector<double> out(count);
    for (double& v : out) v = hi - unif(gen);  // (0, hi]
    return out;
}

inline constexpr std::uint64_t kWeightsStream = 3;
inline constexpr std::uint64_t kEfficiencyStream = 4;

inline PointInstance instantiate_point(const ExperimentSpec& spec, double value) {
    PointInstance point;
    point.sweep_value = value;

    int m = spec.num_sources;
    double eps = spec.epsilon;
    if (spec.kind == ExperimentKind::sweep_epsilon) eps = value;
    if (spec.kind == ExperimentKind::sweep_sources) m = static_cast<int>(value);

    const int pool_size = spec.kind == ExperimentKind::sweep_sources
                              ? static_cast<int>(*std::max_element(spec.sweep_values.begin(),
                                                                   spec.sweep_values.end()))
                              : m;
    std::vector<double> weights =
        spec.weights ? *spec.weights : draw_pool(spec.seed, kWeightsStream, pool_size, 10.0);
    std::vector<double> effs = spec.efficiencies
                                   ? *spec.efficiencies
                                   : draw_pool(spec.seed, kEfficiencyStream, pool_size, 1.0);

    point.sources.resize(m);
    for (int l = 0; l < m; ++l) {
        point.sources[l].weight = weights[l % weights.size()];
        point.sources[l].target_efficiency = effs[l % effs.size()];
    }
    if (spec.kind == ExperimentKind::sweep_efficiency)
        for (auto& s : point.sources) s.target_efficiency = value;
    if (spec.kind == ExperimentKind::sweep_lifetime) {
        BatterySpec battery;
        battery.initial_level_j = spec.battery_initial_j;
        battery.target_lifetime_s = value;
        battery.replenish_rate_w = spec.battery_replenish_w;
        battery.avg_tx_power_w = spec.battery_tx_power_w;
        for (auto& s : point.sources) {
            s.battery = battery;
            s.target_efficiency = target_efficiency_from_battery(battery);
        }
    }

    point.net.num_sources = m;
    point.net.sensing_ratio = eps;
    point.net.mean_tx_time_s = spec.mean_tx_time_s;
    point.net.tx_time = spec.tx_distribution();
    return point;
}

inline const char* sweep_param_name(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::sweep_sources: return "num_sources";
    case ExperimentKind::sweep_efficiency: return "efficiency";
    case ExperimentKind::sweep_lifetime: return "target_lifetime_s";
    default: return "epsilon";
    }
}

}  // namespace detail

/// Run every sweep point x scheduler x replication, one CSV row each.
/// Per-point failures land in the error column and the run continues. Rows
/// come out in deterministic sweep order regardless of worker scheduling.
inline ExperimentTable run_experiment(ExperimentSpec spec) {
    if (spec.kind == ExperimentKind::validate)
        throw std::invalid_argument("validation runs through run_validation_battery");
    if (spec.sweep_values.empty())
        spec.sweep_values = default_sweep_grid(spec.kind, spec.num_sources, spec.epsilon);
    if (spec.kind == ExperimentKind::simulate || spec.kind == ExperimentKind::sweep_lifetime)
        spec.simulate = true;

    const std::size_t points = spec.sweep_values.size();
    const std::size_t schedulers = spec.schedulers.size();
    const std::size_t reps = static_cast<std::size_t>(spec.replications);

    std::vector<detail::PointInstance> instances;
    instances.reserve(points);
    for (double value : spec.sweep_values)
        instances.push_back(detail::instantiate_point(spec, value));

    ExperimentTable table;
    table.rows.resize(points * schedulers * reps);

    const auto compute_point = [&](std::size_t p) {
        const auto& inst = instances[p];

        // Bound certificate for the instance (scheduler-independent).
        std::string cert_error;
        BoundCertificate cert{};
        bool have_cert = false;
        Solution age_solution;
        bool have_solution = false;
        try {
            age_solution = solve_sleep_rates(inst.sources, inst.net);
            have_solution = true;
            cert = certify(inst.sources, inst.net, age_solution);
            have_cert = true;
        } catch (const std::exception& e) {
            cert_error = e.what();
        }

        for (std::size_t s = 0; s < schedulers; ++s) {
            const SchedulerKind scheduler = spec.schedulers[s];
            for (std::size_t rep = 0; rep < reps; ++rep) {
                auto& row = table.rows[(p * schedulers + s) * reps + rep];
                const std::uint64_t rep_seed = spec.seed + rep;
                row[0] = to_string(spec.kind);
                row[1] = detail::sweep_param_name(spec.kind);
                row[2] = detail::format_double(inst.sweep_value);
                row[3] = to_string(scheduler);
                row[4] = std::to_string(rep);
                row[14] = std::to_string(rep_seed);
                try {
                    double objective_norm;
                    bool feasible = true;
                    std::optional<SleepRates> rates;
                    std::optional<std::vector<double>> access_probs;
                    if (scheduler == SchedulerKind::synchronized) {
                        const SynchronizedOptimum sync = synchronized_optimum(inst.sources);
                        objective_norm = sync.value;
                        access_probs = sync.access_probs;
                    } else {
                        if (scheduler == SchedulerKind::age_optimal) {
                            if (!have_solution) throw std::runtime_error(cert_error);
                            rates = age_solution.rates;
                        } else {
                            rates = fixed_rate_baseline(inst.sources, inst.net);
                        }
                        const AnalyticReport report =
                            peak_age_objective(*rates, inst.sources, inst.net);
                        objective_norm = report.objective_normalized;
                        feasible = report.feasible;
                    }
                    row[5] = detail::format_double(objective_norm);
                    row[6] = detail::format_double(objective_norm * inst.net.mean_tx_time_s);
                    if (have_cert) {
                        row[9] = detail::format_double(cert.lower_bound);
                        row[10] = detail::format_double(cert.upper_bound);
                        row[11] = detail::format_double(cert.gap);
                    }
                    row[12] = feasible ? "1" : "0";

                    if (spec.simulate) {
                        SimConfig cfg;
                        cfg.sources = inst.sources;
                        cfg.net = inst.net;
                        cfg.horizon = Horizon::cycles(spec.cycles);
                        cfg.seed = rep_seed;
                        cfg.sensing_model = spec.sensing_model;
                        SimReport sim;
                        if (access_probs) {
                            sim = run_synchronized(cfg, *access_probs);
                        } else {
                            cfg.rates = *rates;
                            cfg.battery_tracking = spec.kind == ExperimentKind::sweep_lifetime;
                            sim = run_simulation(cfg);
                        }
                        row[7] = detail::format_double(sim.weighted_avg_peak_age_s.value);
                        row[8] = detail::format_double(sim.weighted_avg_peak_age_s.ci_halfwidth);
                        row[13] = detail::format_double(sim.collision_fraction);
                    }
                } catch (const std::exception& e) {
                    std::string reason = e.what();
                    for (char& c : reason)
                        if (c == ',' || c == '\n') c = ';';
                    row[15] = reason;
                }
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(hw, points);
    if (workers <= 1) {
        for (std::size_t p = 0; p < points; ++p) compute_point(p);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i)
            pool.emplace_back([&] {
                for (std::size_t p = next++; p < points; p = next++) compute_point(p);
            });
        for (auto& t : pool) t.join();
    }

    if (!spec.output_path.empty()) {
        std::ofstream out(spec.output_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write csv: " + spec.output_path);
        out << table.csv();

        nlohmann::json meta;
        meta["artifact"] = "agewake";
        meta["version"] = kArtifactVersion;
        meta["csv_schema_version"] = kCsvSchemaVersion;
        meta["notes"] = nlohmann::json::array(
            {"throughput-optimal baseline omitted: its rate formulas are not published",
             "sensing and sleep power are treated as zero in energy accounting"});
        nlohmann::json js;
        js["kind"] = to_string(spec.kind);
        js["num_sources"] = spec.num_sources;
        js["epsilon"] = spec.epsilon;
        js["mean_tx_time"] = spec.mean_tx_time_s;
        js["tx_dist"] = to_string(spec.tx_kind);
        if (spec.tx_kind == TxKind::lognormal) js["lognormal_sigma"] = spec.lognormal_sigma;
        js["sweep_param"] = detail::sweep_param_name(spec.kind);
        js["sweep_values"] = spec.sweep_values;
        {
            std::vector<std::string> names;
            for (auto s : spec.schedulers) names.emplace_back(to_string(s));
            js["schedulers"] = names;
        }
        js["replications"] = spec.replications;
        js["seed"] = spec.seed;
        js["cycles"] = spec.cycles;
        js["simulate"] = spec.simulate;
        js["sensing_model"] =
            spec.sensing_model == SensingModel::paper_faithful ? "paper" : "physical";
        if (!instances.empty()) {
            std::vector<double> w, b;
            for (const auto& src : instances.front().sources) {
                w.push_back(src.weight);
                b.push_back(src.target_efficiency);
            }
            js["resolved_weights"] = w;
            js["resolved_efficiencies"] = b;
        }
        if (spec.kind == ExperimentKind::sweep_lifetime) {
            js["battery.initial_level"] = spec.battery_initial_j;
            js["battery.replenish_rate"] = spec.battery_replenish_w;
            js["battery.avg_tx_power"] = spec.battery_tx_power_w;
        }
        meta["spec"] = js;
        std::ofstream meta_out(spec.output_path + ".meta.json", std::ios::binary);
        if (!meta_out) throw std::runtime_error("cannot write metadata sidecar");
        meta_out << meta.dump(2) << "\n";
    }
    return table;
}

}  // namespace agewake
