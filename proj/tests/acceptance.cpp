// Acceptance run: one PASS/FAIL line per criterion, with per-case detail
// lines indented underneath. Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/errors.hpp"
#include "aoi/harness.hpp"
#include "aoi/sim.hpp"
#include "aoi/trace_checks.hpp"
#include "oracles.hpp"

using aoi::DiscreteDist;
using aoi::QueueSpec;

namespace {

// Tolerances.
constexpr double kRelTol = 0.01;
constexpr double kSigmas = 3.0;
constexpr double kExactTol = 1e-12;
constexpr aoi::Slots kSlots = 1'000'000;
constexpr aoi::Slots kWarmup = 10'000;
constexpr std::int64_t kMcReps = 1'000'000;
constexpr int kMcWindow = 50;
constexpr double kBerRuntimeLimit = 10.0;
constexpr double kSweepRuntimeLimit = 60.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool matches(double analytic, double sim, double se) {
    return std::abs(sim - analytic) <= std::max(kRelTol * std::abs(analytic), kSigmas * se);
}

const char* mark(bool ok) { return ok ? "ok  " : "MISS"; }

struct InvariantTally {
    std::map<std::string, std::int64_t> checked, violations;
    std::vector<std::string> first;
    int traces = 0;

    void add(const aoi::SimTrace& trace, const std::string& label) {
        ++traces;
        std::vector<aoi::InvariantReport> reps{aoi::check_age_recursion(trace)};
        switch (trace.discipline) {
            case aoi::Discipline::fcfs_ber_g_1:
            case aoi::Discipline::fcfs_ber_g_1_vacation:
                reps.push_back(aoi::check_fcfs_freshness(trace));
                break;
            case aoi::Discipline::lcfs_gg1_preemptive:
                reps.push_back(aoi::check_lcfs_generation_recursion(trace));
                reps.push_back(aoi::check_lcfs_renewal_area(trace));
                break;
            case aoi::Discipline::gg_infinity:
                reps.push_back(aoi::check_gginf_drop_identity(trace));
                break;
        }
        for (const auto& r : reps) {
            checked[r.name] += r.checked;
            violations[r.name] += r.violations;
            if (!r.ok()) first.push_back(fmt::format("{} [{}]: {}", label, r.name, r.first_violation));
        }
    }
};

InvariantTally g_invariants;

aoi::SimResult simulate(const QueueSpec& spec, std::uint64_t seed, const std::string& label) {
    aoi::SimConfig cfg;
    cfg.spec = spec;
    cfg.total_slots = kSlots;
    cfg.warmup_slots = kWarmup;
    cfg.seed = seed;
    cfg.trace_enabled = true;
    auto r = aoi::run_simulation(cfg);
    g_invariants.add(*r.trace, label);
    r.trace.reset();
    return r;
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;
    void note(bool ok, std::string line) {
        pass &= ok;
        details.push_back(fmt::format("{} {}", mark(ok), std::move(line)));
    }
    void info(std::string line) { details.push_back("     " + std::move(line)); }
};

Outcome criterion_ber_g1() {
    Outcome out;
    const std::vector<std::pair<double, DiscreteDist>> specs = {
        {0.1, DiscreteDist::geometric(0.75)},
        {0.3, DiscreteDist::geometric(0.75)},
        {0.6, DiscreteDist::geometric(0.75)},
        {0.1, DiscreteDist::deterministic(2)},
        {0.3, DiscreteDist::deterministic(2)},
        {0.4, DiscreteDist::deterministic(2)},
        {0.1, DiscreteDist::uniform(1, 3)},
        {0.3, DiscreteDist::uniform(1, 3)},
        {0.4, DiscreteDist::uniform(1, 3)},
        {0.1, DiscreteDist::from_pmf({{1, 0.7}, {2, 0.2}, {3, 0.1}})},
        {0.3, DiscreteDist::from_pmf({{1, 0.7}, {2, 0.2}, {3, 0.1}})},
        {0.6, DiscreteDist::from_pmf({{1, 0.7}, {2, 0.2}, {3, 0.1}})},
    };
    const auto t0 = Clock::now();
    std::uint64_t seed = 101;
    for (const auto& [lambda, s] : specs) {
        const auto spec = QueueSpec::ber_g1(lambda, s);
        const auto a = aoi::evaluate(spec);
        const auto label = fmt::format("lambda={} S={}", lambda, s.describe());
        const auto e = *simulate(spec, seed++, label).estimate;
        const bool ok = matches(*a.peak_age, e.peak_age, e.peak_stderr) && matches(*a.avg_age, e.avg_age, e.avg_stderr);
        out.note(ok, fmt::format("{:<40} peak {:.4f} vs {:.4f} (se {:.4f})  avg {:.4f} vs {:.4f} (se {:.4f})", label,
                                 e.peak_age, *a.peak_age, e.peak_stderr, e.avg_age, *a.avg_age, e.avg_stderr));
    }
    const double elapsed = seconds_since(t0);
    out.note(elapsed < kBerRuntimeLimit,
             fmt::format("runtime {:.2f} s for 12 traced runs (limit {:.0f} s)", elapsed, kBerRuntimeLimit));
    return out;
}

Outcome criterion_vacation() {
    Outcome out;
    const auto service = DiscreteDist::geometric(0.75);
    std::vector<DiscreteDist> vacations;
    for (int m : {2, 4}) {
        vacations.push_back(DiscreteDist::geometric(1.0 / m));
        vacations.push_back(DiscreteDist::uniform(1, 2 * m - 1));
        vacations.push_back(DiscreteDist::deterministic(m));
    }
    vacations.push_back(DiscreteDist::deterministic(1));

    int peak_ok = 0, upper_ok = 0, lower_ok = 0, order_ok = 0, total = 0;
    std::uint64_t seed = 201;
    for (double lambda : {0.3, 0.6}) {
        for (const auto& v : vacations) {
            ++total;
            const auto spec = QueueSpec::ber_g1_vacation(lambda, service, v);
            const auto a = aoi::evaluate(spec);
            const auto label = fmt::format("lambda={} V={}", lambda, v.describe());
            const auto e = *simulate(spec, seed++, label).estimate;
            const double slack = kSigmas * e.avg_stderr;
            const bool peak = matches(*a.peak_age, e.peak_age, e.peak_stderr);
            const bool above_lb = e.avg_age >= *a.avg_age_lower - slack;
            const bool below_ub = e.avg_age <= *a.effective_upper() + slack;
            const bool avg_below_peak = e.avg_age <= e.peak_age + slack;
            peak_ok += peak;
            lower_ok += above_lb;
            upper_ok += below_ub;
            order_ok += avg_below_peak;
            out.note(peak && above_lb && below_ub && avg_below_peak,
                     fmt::format("{:<36} peak {:.4f} vs {:.4f} | avg {:.4f} (se {:.4f}) in [{:.4f}, {:.4f}]{}{}", label,
                                 e.peak_age, *a.peak_age, e.avg_age, e.avg_stderr, *a.avg_age_lower,
                                 *a.effective_upper(), above_lb ? "" : " below LB", below_ub ? "" : " above UB"));
        }
        const double base = *aoi::evaluate(QueueSpec::ber_g1(lambda, service)).peak_age;
        const double unit = *aoi::evaluate(QueueSpec::ber_g1_vacation(lambda, service, DiscreteDist::deterministic(1)))
                                 .peak_age;
        out.note(std::abs(unit - base) <= kExactTol,
                 fmt::format("lambda={} unit vacations: peak {:.15g} equals no-vacation peak {:.15g}", lambda, unit, base));
    }
    out.info(fmt::format("peak matches {}/{}, avg >= LB {}/{}, avg <= min(UB, peak) {}/{}, avg <= peak {}/{}", peak_ok,
                         total, lower_ok, total, upper_ok, total, order_ok, total));
    return out;
}

std::string sweep_config_path() { return std::string(AOI_CONFIG_DIR) + "/vacation_sweep.json"; }

std::string table_csv(const aoi::ResultTable& t) {
    std::ostringstream s;
    aoi::emit_csv(t, s);
    return s.str();
}

std::string g_sweep_csv;

Outcome criterion_vacation_sweep() {
    Outcome out;
    const auto cfg = aoi::load_experiment_config(sweep_config_path());
    const auto t0 = Clock::now();
    const auto table = aoi::run_experiments(cfg);
    const double elapsed = seconds_since(t0);
    g_sweep_csv = table_csv(table);

    out.note(table.size() == 42, fmt::format("{} cases in the sweep", table.size()));
    bool all_ok = true;
    for (const auto& r : table) all_ok &= r.ok();
    out.note(all_ok, "every sweep row has status ok");

    // rows are ordered lambda -> family (deterministic, uniform, geometric) -> mean 1..7
    auto row = [&](int li, int fi, int m) -> const aoi::ResultRow& {
        return table[static_cast<std::size_t>(li * 21 + fi * 7 + (m - 1))];
    };
    const char* families[] = {"deterministic", "uniform", "geometric"};
    for (int li = 0; li < 2; ++li) {
        for (int m = 1; m <= 7; ++m) {
            const auto& d = row(li, 0, m);
            const auto& u = row(li, 1, m);
            const auto& g = row(li, 2, m);
            bool ok = d.sim_avg && u.sim_avg && g.sim_avg && *d.sim_avg <= *u.sim_avg && *u.sim_avg <= *g.sim_avg;
            std::string sep;
            if (ok && m >= 3) {
                const double du = (*u.sim_avg - *d.sim_avg) / std::hypot(*u.sim_avg_se, *d.sim_avg_se);
                const double ug = (*g.sim_avg - *u.sim_avg) / std::hypot(*g.sim_avg_se, *u.sim_avg_se);
                ok = du > kSigmas && ug > kSigmas;
                sep = fmt::format("  separations {:.1f} / {:.1f} combined se", du, ug);
            }
            out.note(ok, fmt::format("lambda={} mean={}  det {:.4f} <= uni {:.4f} <= geo {:.4f}{}", d.lambda.value_or(0), m,
                                     d.sim_avg.value_or(NAN), u.sim_avg.value_or(NAN), g.sim_avg.value_or(NAN), sep));
        }
        for (int fi = 0; fi < 3; ++fi) {
            bool mono = true;
            for (int m = 2; m <= 7; ++m) {
                const auto& prev = row(li, fi, m - 1);
                const auto& cur = row(li, fi, m);
                mono &= prev.sim_avg && cur.sim_avg && *cur.sim_avg >= *prev.sim_avg;
            }
            out.note(mono, fmt::format("lambda={} {} average nondecreasing in vacation mean", row(li, 0, 1).lambda.value_or(0),
                                       families[fi]));
        }
    }
    out.note(elapsed < kSweepRuntimeLimit,
             fmt::format("sweep runtime {:.2f} s (limit {:.0f} s)", elapsed, kSweepRuntimeLimit));

    // Replay the same configurations with tracing for the invariant suite.
    for (const auto& c : cfg.cases) {
        aoi::SimConfig sc = c.sim;
        sc.trace_enabled = true;
        auto r = aoi::run_simulation(sc);
        g_invariants.add(*r.trace, c.name);
    }
    return out;
}

Outcome criterion_lcfs() {
    Outcome out;
    const std::vector<std::pair<DiscreteDist, DiscreteDist>> pairs = {
        {DiscreteDist::geometric(0.5), DiscreteDist::geometric(0.5)},
        {DiscreteDist::geometric(0.3), DiscreteDist::deterministic(2)},
        {DiscreteDist::geometric(0.4), DiscreteDist::uniform(1, 3)},
        {DiscreteDist::deterministic(3), DiscreteDist::geometric(0.5)},
        {DiscreteDist::deterministic(4), DiscreteDist::uniform(1, 5)},
        {DiscreteDist::uniform(1, 5), DiscreteDist::geometric(0.6)},
        {DiscreteDist::uniform(2, 6), DiscreteDist::deterministic(2)},
        {DiscreteDist::deterministic(2), DiscreteDist::deterministic(1)},
    };
    std::uint64_t seed = 401;
    for (const auto& [x, s] : pairs) {
        const auto spec = QueueSpec::lcfs(x, s);
        const auto a = aoi::evaluate(spec);
        const auto label = fmt::format("X={} S={}", x.describe(), s.describe());
        const auto e = *simulate(spec, seed++, label).estimate;
        const bool ok = matches(*a.peak_age, e.peak_age, e.peak_stderr) && matches(*a.avg_age, e.avg_age, e.avg_stderr);
        out.note(ok, fmt::format("{:<42} peak {:.4f} vs {:.4f} (se {:.4f})  avg {:.4f} vs {:.4f} (se {:.4f})", label,
                                 e.peak_age, *a.peak_age, e.peak_stderr, e.avg_age, *a.avg_age, e.avg_stderr));
    }
    for (double lambda : {0.2, 0.5, 0.9}) {
        const auto a = aoi::evaluate(QueueSpec::lcfs(DiscreteDist::geometric(lambda), DiscreteDist::deterministic(1)));
        const double err = std::max(std::abs(*a.peak_age - 1.0 / lambda), std::abs(*a.avg_age - 1.0 / lambda));
        out.note(err <= kExactTol, fmt::format("unit service lambda={}: peak = avg = 1/lambda, max error {:.2e}", lambda, err));
    }
    return out;
}

Outcome criterion_gginf() {
    Outcome out;
    const std::vector<std::pair<DiscreteDist, DiscreteDist>> pairs = {
        {DiscreteDist::geometric(0.5), DiscreteDist::geometric(0.5)},
        {DiscreteDist::geometric(0.3), DiscreteDist::uniform(1, 5)},
        {DiscreteDist::deterministic(2), DiscreteDist::geometric(0.25)},
        {DiscreteDist::uniform(1, 3), DiscreteDist::from_pmf({{1, 0.2}, {4, 0.5}, {8, 0.3}})},
    };
    std::uint64_t seed = 501;
    for (const auto& [x, s] : pairs) {
        const auto label = fmt::format("X={} S={}", x.describe(), s.describe());
        const auto drop = aoi::gginf_drop_time_distribution(x, s);
        const auto mc = oracle::drop_time_mc(x, s, kMcReps, kMcWindow, seed);
        out.note(std::abs(drop.mean - mc.mean) <= kSigmas * mc.stderr_,
                 fmt::format("{:<48} E[D] {:.5f} vs Monte Carlo {:.5f} (se {:.5f})", label, drop.mean, mc.mean, mc.stderr_));
        const auto spec = QueueSpec::gg_inf(x, s);
        const auto a = aoi::evaluate(spec);
        const auto e = *simulate(spec, seed++, label).estimate;
        out.note(matches(*a.avg_age, e.avg_age, e.avg_stderr),
                 fmt::format("{:<48} avg {:.4f} vs {:.4f} (se {:.4f})", label, e.avg_age, *a.avg_age, e.avg_stderr));
    }
    const auto closed =
        aoi::evaluate(QueueSpec::gg_inf(DiscreteDist::geometric(0.5), DiscreteDist::deterministic(2)));
    const double err = std::abs(*closed.avg_age - 3.0);
    out.note(err <= kExactTol, fmt::format("X=geometric(0.5) S=deterministic(2): avg {:.15g}, error {:.2e}", *closed.avg_age, err));
    return out;
}

Outcome criterion_invariants() {
    Outcome out;
    out.info(fmt::format("{} traces checked", g_invariants.traces));
    for (const auto& [name, n] : g_invariants.checked) {
        const auto v = g_invariants.violations[name];
        out.note(v == 0 && n > 0, fmt::format("{:<28} {} checks, {} violations", name, n, v));
    }
    out.note(g_invariants.checked.size() == 5, fmt::format("{} of 5 invariant families exercised", g_invariants.checked.size()));
    for (std::size_t i = 0; i < std::min<std::size_t>(g_invariants.first.size(), 10); ++i) out.info(g_invariants.first[i]);
    return out;
}

Outcome criterion_determinism() {
    Outcome out;
    const auto again = table_csv(aoi::run_experiments(aoi::load_experiment_config(sweep_config_path())));
    out.note(!g_sweep_csv.empty() && again == g_sweep_csv,
             fmt::format("sweep CSV rerun: {} bytes, identical = {}", again.size(), again == g_sweep_csv));
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "Ber/G/1 peak and average vs closed forms", criterion_ber_g1},
        {2, "Ber/G/1 with vacations: peak formula, bounds, avg <= peak", criterion_vacation},
        {3, "vacation-family sweep ordering and monotonicity", criterion_vacation_sweep},
        {4, "LCFS preemptive vs closed forms", criterion_lcfs},
        {5, "G/G/inf drop time and average age", criterion_gginf},
        {6, "trace invariants on every simulated trace", criterion_invariants},
        {7, "sweep CSV is reproducible byte-for-byte", criterion_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.note(false, fmt::format("threw: {}", e.what()));
        }
        for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
        std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, seconds_since(t0));
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
