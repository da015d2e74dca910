#include "aoi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "aoi/errors.hpp"
#include "aoi/trace_checks.hpp"

namespace aoi {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
    throw ConfigError(fmt::format("{}: {}", where, what));
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) config_fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) config_fail(where, fmt::format("missing field '{}'", key));
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) config_fail(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) config_fail(where, "expected a finite number");
    return d;
}

std::int64_t integer(const json& v, const std::string& where) {
    const double d = number(v, where);
    if (d != std::floor(d)) config_fail(where, fmt::format("expected an integer, got {}", d));
    return static_cast<std::int64_t>(d);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) config_fail(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            config_fail(where, fmt::format("unknown field '{}'", key));
    }
}

DiscreteDist parse_dist(const json& j, const std::string& where) {
    const auto family = field(j, "family", where);
    if (!family.is_string()) config_fail(where + ".family", "expected a string");
    const auto name = family.get<std::string>();
    const bool by_mean = j.contains("mean");
    try {
        if (name == "geometric") {
            reject_unknown(j, {"family", "p", "mean"}, where);
            if (by_mean == j.contains("p")) config_fail(where, "geometric takes exactly one of 'p' or 'mean'");
            if (by_mean) {
                const double m = number(j["mean"], where + ".mean");
                if (!(m >= 1.0)) config_fail(where + ".mean", "geometric mean must be >= 1");
                return DiscreteDist::geometric(1.0 / m);
            }
            return DiscreteDist::geometric(number(j["p"], where + ".p"));
        }
        if (name == "deterministic") {
            reject_unknown(j, {"family", "value", "mean"}, where);
            if (by_mean == j.contains("value"))
                config_fail(where, "deterministic takes exactly one of 'value' or 'mean'");
            const auto key = by_mean ? "mean" : "value";
            return DiscreteDist::deterministic(integer(j[key], where + "." + key));
        }
        if (name == "uniform") {
            reject_unknown(j, {"family", "low", "high", "mean"}, where);
            if (by_mean) {
                if (j.contains("low") || j.contains("high"))
                    config_fail(where, "uniform takes either 'mean' or 'low'/'high'");
                // Mean v realized as uniform(1, 2v - 1).
                const double m = number(j["mean"], where + ".mean");
                const double high = 2.0 * m - 1.0;
                if (!(m >= 1.0) || high != std::floor(high))
                    config_fail(where + ".mean", "uniform mean must be >= 1 with 2*mean an integer");
                return DiscreteDist::uniform(1, static_cast<Slots>(high));
            }
            return DiscreteDist::uniform(integer(field(j, "low", where), where + ".low"),
                                         integer(field(j, "high", where), where + ".high"));
        }
        if (name == "explicit") {
            reject_unknown(j, {"family", "pmf"}, where);
            const auto& pmf = field(j, "pmf", where);
            if (!pmf.is_array() || pmf.empty()) config_fail(where + ".pmf", "expected a non-empty array");
            std::vector<std::pair<Slots, double>> entries;
            for (std::size_t i = 0; i < pmf.size(); ++i) {
                const auto w = fmt::format("{}.pmf[{}]", where, i);
                if (!pmf[i].is_array() || pmf[i].size() != 2) config_fail(w, "expected [value, probability]");
                entries.emplace_back(integer(pmf[i][0], w), number(pmf[i][1], w));
            }
            return DiscreteDist::from_pmf(std::move(entries));
        }
    } catch (const InvalidArgument& e) {
        config_fail(where, e.what());
    }
    config_fail(where + ".family", fmt::format("unknown family '{}'", name));
}

struct Defaults {
    Slots total_slots = 1'000'000;
    Slots warmup_slots = 10'000;
    std::uint64_t seed = 1;
    double tolerance = 0.01;
    int batches = 30;
    Slots fcfs_service_lag = 1;
};

void apply_sim_fields(const json& j, Defaults& d, const std::string& where) {
    reject_unknown(j, {"total_slots", "warmup_slots", "seed", "tolerance", "batches", "fcfs_service_lag"}, where);
    if (j.contains("total_slots")) d.total_slots = integer(j["total_slots"], where + ".total_slots");
    if (j.contains("warmup_slots")) d.warmup_slots = integer(j["warmup_slots"], where + ".warmup_slots");
    if (j.contains("seed")) {
        const auto s = integer(j["seed"], where + ".seed");
        if (s < 0) config_fail(where + ".seed", "seed must be non-negative");
        d.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("tolerance")) {
        d.tolerance = number(j["tolerance"], where + ".tolerance");
        if (!(d.tolerance > 0.0)) config_fail(where + ".tolerance", "tolerance must be positive");
    }
    if (j.contains("batches")) d.batches = static_cast<int>(integer(j["batches"], where + ".batches"));
    if (j.contains("fcfs_service_lag"))
        d.fcfs_service_lag = integer(j["fcfs_service_lag"], where + ".fcfs_service_lag");
}

ExperimentCase parse_case(const json& j, const std::string& name, const Defaults& defaults,
                          const std::string& where) {
    reject_unknown(j, {"name", "discipline", "arrival", "service", "vacation", "outputs", "sim", "trace_prefix"},
                   where);
    ExperimentCase c;
    c.name = name;
    QueueSpec& spec = c.sim.spec;

    const auto& disc = field(j, "discipline", where);
    if (!disc.is_string()) config_fail(where + ".discipline", "expected a string");
    try {
        spec.discipline = discipline_from_string(disc.get<std::string>());
    } catch (const InvalidArgument& e) {
        config_fail(where + ".discipline", e.what());
    }

    const auto& arrival = field(j, "arrival", where);
    reject_unknown(arrival, {"bernoulli", "interarrival"}, where + ".arrival");
    if (arrival.contains("bernoulli")) spec.bernoulli_rate = number(arrival["bernoulli"], where + ".arrival.bernoulli");
    if (arrival.contains("interarrival"))
        spec.interarrival = parse_dist(arrival["interarrival"], where + ".arrival.interarrival");
    spec.service = parse_dist(field(j, "service", where), where + ".service");
    if (j.contains("vacation")) spec.vacation = parse_dist(j["vacation"], where + ".vacation");
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        config_fail(where, e.what());
    }

    Defaults d = defaults;
    if (j.contains("sim")) apply_sim_fields(j["sim"], d, where + ".sim");
    c.sim.total_slots = d.total_slots;
    c.sim.warmup_slots = d.warmup_slots;
    c.sim.seed = d.seed;
    c.sim.batches = d.batches;
    c.sim.fcfs_service_lag = d.fcfs_service_lag;
    c.tolerance = d.tolerance;

    if (j.contains("outputs")) {
        const auto& outs = j["outputs"];
        if (!outs.is_array()) config_fail(where + ".outputs", "expected an array");
        c.outputs = {false, false, false};
        for (const auto& o : outs) {
            const auto s = o.is_string() ? o.get<std::string>() : std::string{};
            if (s == "analytic") c.outputs.analytic = true;
            else if (s == "simulated") c.outputs.simulated = true;
            else if (s == "bounds") c.outputs.bounds = true;
            else config_fail(where + ".outputs", fmt::format("unknown output '{}'", o.dump()));
        }
    }
    if (j.contains("trace_prefix")) {
        if (!j["trace_prefix"].is_string()) config_fail(where + ".trace_prefix", "expected a string");
        c.trace_prefix = j["trace_prefix"].get<std::string>();
    }
    if (c.outputs.simulated) {
        try {
            SimConfig probe = c.sim;
            probe.spec = spec;
            // Stability is reported per case, everything else is a config error.
            if (probe.spec.is_fcfs()) probe.spec.service = DiscreteDist::deterministic(1);
            probe.validate();
        } catch (const InvalidArgument& e) {
            config_fail(where + ".sim", e.what());
        }
    }
    return c;
}

void set_path(json& obj, const std::string& path, const json& value, const std::string& where) {
    json* cur = &obj;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const auto key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty()) config_fail(where, fmt::format("bad parameter path '{}'", path));
        if (!cur->is_object()) config_fail(where, fmt::format("parameter path '{}' crosses a non-object", path));
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(e.what());
    }
    if (!root.is_object()) config_fail("<root>", "expected an object");
    reject_unknown(root, {"output", "defaults", "cases", "sweeps"}, "<root>");

    ExperimentConfig cfg;
    if (root.contains("output")) {
        if (!root["output"].is_string()) config_fail("output", "expected a string");
        cfg.output_path = root["output"].get<std::string>();
    }
    Defaults defaults;
    if (root.contains("defaults")) apply_sim_fields(root["defaults"], defaults, "defaults");

    if (root.contains("cases")) {
        const auto& cases = root["cases"];
        if (!cases.is_array()) config_fail("cases", "expected an array");
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto where = fmt::format("cases[{}]", i);
            const auto& name = field(cases[i], "name", where);
            if (!name.is_string()) config_fail(where + ".name", "expected a string");
            cfg.cases.push_back(parse_case(cases[i], name.get<std::string>(), defaults, where));
        }
    }
    if (root.contains("sweeps")) {
        const auto& sweeps = root["sweeps"];
        if (!sweeps.is_array()) config_fail("sweeps", "expected an array");
        for (std::size_t i = 0; i < sweeps.size(); ++i) {
            const auto where = fmt::format("sweeps[{}]", i);
            const auto& s = sweeps[i];
            reject_unknown(s, {"name", "base", "parameter", "values"}, where);
            const auto& name = field(s, "name", where);
            const auto& param = field(s, "parameter", where);
            const auto& values = field(s, "values", where);
            if (!name.is_string()) config_fail(where + ".name", "expected a string");
            if (!param.is_string()) config_fail(where + ".parameter", "expected a string");
            if (!values.is_array() || values.empty()) config_fail(where + ".values", "expected a non-empty array");
            for (std::size_t k = 0; k < values.size(); ++k) {
                const auto vwhere = fmt::format("{}.values[{}]", where, k);
                number(values[k], vwhere);
                json c = field(s, "base", where);
                set_path(c, param.get<std::string>(), values[k], vwhere);
                const auto case_name = fmt::format("{}/{}={}", name.get<std::string>(), param.get<std::string>(),
                                                   values[k].dump());
                cfg.cases.push_back(parse_case(c, case_name, defaults, vwhere));
            }
        }
    }
    for (std::size_t i = 0; i < cfg.cases.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (cfg.cases[i].name == cfg.cases[k].name)
                config_fail(cfg.cases[i].name, "duplicate case name");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    for (auto& c : cfg.cases) c.sim.seed = seed;
}

// ---------------------------------------------------------------------------
// Running

bool within_tolerance(double analytic, double simulated, double stderr_, double tolerance) {
    return std::abs(simulated - analytic) <= std::max(tolerance * std::abs(analytic), 3.0 * stderr_);
}

namespace {

void write_trace(const ExperimentCase& c, const SimTrace& trace) {
    std::ofstream slots(*c.trace_prefix + "_slots.csv");
    std::ofstream packets(*c.trace_prefix + "_packets.csv");
    if (!slots || !packets) throw Error("io", fmt::format("cannot write trace files for prefix '{}'", *c.trace_prefix));
    write_slot_csv(trace, slots);
    write_packet_csv(trace, packets);
}

std::vector<InvariantReport> trace_reports(const SimTrace& trace) {
    std::vector<InvariantReport> out{check_age_recursion(trace)};
    switch (trace.discipline) {
        case Discipline::fcfs_ber_g_1:
        case Discipline::fcfs_ber_g_1_vacation:
            out.push_back(check_fcfs_freshness(trace));
            break;
        case Discipline::lcfs_gg1_preemptive:
            out.push_back(check_lcfs_generation_recursion(trace));
            out.push_back(check_lcfs_renewal_area(trace));
            break;
        case Discipline::gg_infinity:
            out.push_back(check_gginf_drop_identity(trace));
            break;
    }
    return out;
}

}  // namespace

ResultRow run_case(const ExperimentCase& c) {
    const QueueSpec& spec = c.sim.spec;
    ResultRow row;
    row.case_name = c.name;
    row.discipline = to_string(spec.discipline);
    row.lambda = spec.arrival_rate();
    row.service_family = spec.service.family_name();
    row.service_mean = spec.service.mean();
    if (spec.vacation) {
        row.vacation_family = spec.vacation->family_name();
        row.vacation_mean = spec.vacation->mean();
    }

    try {
        if (c.outputs.analytic || c.outputs.bounds) {
            const AnalyticResult a = evaluate(spec);
            if (c.outputs.analytic) {
                row.analytic_peak = a.peak_age;
                row.analytic_avg = a.avg_age;
            }
            if (c.outputs.bounds && a.avg_age_lower) {
                row.bound_lb = a.avg_age_lower;
                row.bound_ub = a.effective_upper();
            }
        }
        if (c.outputs.simulated) {
            SimConfig sc = c.sim;
            sc.trace_enabled = c.trace_prefix.has_value();
            const SimResult sim = run_simulation(sc);
            const AgeEstimate& e = *sim.estimate;
            row.sim_peak = e.peak_age;
            row.sim_peak_se = e.peak_stderr;
            row.sim_avg = e.avg_age;
            row.sim_avg_se = e.avg_stderr;
            if (sim.trace) {
                write_trace(c, *sim.trace);
                for (const auto& r : trace_reports(*sim.trace))
                    if (!r.ok())
                        row.warnings.push_back(fmt::format("trace invariant {} violated {} times ({})", r.name,
                                                           r.violations, r.first_violation));
            }
        }
    } catch (const Error& e) {
        ResultRow failed;
        failed.case_name = row.case_name;
        failed.discipline = row.discipline;
        failed.lambda = row.lambda;
        failed.service_family = row.service_family;
        failed.service_mean = row.service_mean;
        failed.vacation_family = row.vacation_family;
        failed.vacation_mean = row.vacation_mean;
        failed.status = e.token();
        failed.message = e.what();
        return failed;
    }

    bool pass = true;
    if (row.analytic_peak && row.sim_peak) {
        row.rel_err_peak = (*row.sim_peak - *row.analytic_peak) / *row.analytic_peak;
        pass &= within_tolerance(*row.analytic_peak, *row.sim_peak, *row.sim_peak_se, c.tolerance);
    }
    if (row.analytic_avg && row.sim_avg) {
        row.rel_err_avg = (*row.sim_avg - *row.analytic_avg) / *row.analytic_avg;
        pass &= within_tolerance(*row.analytic_avg, *row.sim_avg, *row.sim_avg_se, c.tolerance);
    }
    if (!pass) {
        row.status = "tolerance_exceeded";
        row.message = fmt::format("simulation differs from closed form beyond max({:g} relative, 3 stderr)",
                                  c.tolerance);
    }
    // The bounds are reported but not a pass criterion.
    if (row.bound_lb && row.sim_avg) {
        const double slack = 3.0 * *row.sim_avg_se;
        if (*row.sim_avg < *row.bound_lb - slack)
            row.warnings.push_back(
                fmt::format("simulated average {:.6g} below lower bound {:.6g}", *row.sim_avg, *row.bound_lb));
        if (*row.sim_avg > *row.bound_ub + slack)
            row.warnings.push_back(
                fmt::format("simulated average {:.6g} above upper bound {:.6g}", *row.sim_avg, *row.bound_ub));
    }
    return row;
}

ResultTable run_experiments(const ExperimentConfig& cfg, unsigned threads) {
    ResultTable table(cfg.cases.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(cfg.cases.size(), 1)));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.cases.size(); i = next++) table[i] = run_case(cfg.cases[i]);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return {};
    return fmt::format("{:.10g}", *v);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

void emit_csv(const ResultTable& table, std::ostream& out) {
    out << "case_name,discipline,lambda,service_family,service_mean,vacation_family,vacation_mean,"
           "analytic_peak,analytic_avg,bound_lb,bound_ub,sim_peak,sim_peak_se,sim_avg,sim_avg_se,"
           "rel_err_peak,rel_err_avg,status\n";
    for (const auto& r : table) {
        out << csv_field(r.case_name) << ',' << r.discipline << ',' << num(r.lambda) << ',' << r.service_family
            << ',' << num(r.service_mean) << ',' << r.vacation_family << ',' << num(r.vacation_mean) << ','
            << num(r.analytic_peak) << ',' << num(r.analytic_avg) << ',' << num(r.bound_lb) << ','
            << num(r.bound_ub) << ',' << num(r.sim_peak) << ',' << num(r.sim_peak_se) << ',' << num(r.sim_avg)
            << ',' << num(r.sim_avg_se) << ',' << num(r.rel_err_peak) << ',' << num(r.rel_err_avg) << ','
            << r.status << '\n';
    }
}

void emit_long_csv(const ResultTable& table, std::ostream& out) {
    out << "case_name,discipline,lambda,vacation_family,vacation_mean,metric,value,stderr\n";
    for (const auto& r : table) {
        auto emit = [&](const char* metric, const std::optional<double>& v, const std::optional<double>& se) {
            if (!v) return;
            out << csv_field(r.case_name) << ',' << r.discipline << ',' << num(r.lambda) << ','
                << r.vacation_family << ',' << num(r.vacation_mean) << ',' << metric << ',' << num(v) << ','
                << num(se) << '\n';
        };
        emit("analytic_peak", r.analytic_peak, std::nullopt);
        emit("analytic_avg", r.analytic_avg, std::nullopt);
        emit("bound_lb", r.bound_lb, std::nullopt);
        emit("bound_ub", r.bound_ub, std::nullopt);
        emit("sim_peak", r.sim_peak, r.sim_peak_se);
        emit("sim_avg", r.sim_avg, r.sim_avg_se);
    }
}

std::string emit_summary(const ResultTable& table) {
    std::string out;
    std::size_t failures = 0;
    for (const auto& r : table) {
        if (r.ok()) continue;
        ++failures;
        out += fmt::format("FAIL {} [{}] {}\n", r.case_name, r.status, r.message);
    }
    for (const auto& r : table) {
        if (!r.ok()) continue;
        std::string detail;
        if (r.rel_err_peak) detail += fmt::format(" peak rel err {:+.3f}%", 100.0 * *r.rel_err_peak);
        if (r.rel_err_avg) detail += fmt::format(" avg rel err {:+.3f}%", 100.0 * *r.rel_err_avg);
        out += fmt::format("ok   {}{}\n", r.case_name, detail);
    }
    for (const auto& r : table)
        for (const auto& w : r.warnings) out += fmt::format("warn {}: {}\n", r.case_name, w);
    out += fmt::format("{} cases, {} failed\n", table.size(), failures);
    return out;
}

std::string long_csv_path(const std::string& csv_path) {
    const std::string ext = ".csv";
    if (csv_path.size() >= ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0)
        return csv_path.substr(0, csv_path.size() - ext.size()) + "_long.csv";
    return csv_path + "_long.csv";
}

}  // namespace aoi
