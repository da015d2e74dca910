#pragma once

#include <optional>
#include <string>

#include "aoi/dist.hpp"

namespace aoi {

enum class Discipline {
    fcfs_ber_g_1,
    fcfs_ber_g_1_vacation,
    lcfs_gg1_preemptive,
    gg_infinity,
};

std::string to_string(Discipline d);
Discipline discipline_from_string(const std::string& name);

// Queue under study. The Bernoulli arrival probability is written lambda
// here; the same quantity appears as gamma in the generating-function
// derivations. Inter-generation times of a Bernoulli source are
// geometric(lambda).
struct QueueSpec {
    Discipline discipline = Discipline::fcfs_ber_g_1;
    std::optional<double> bernoulli_rate;
    std::optional<DiscreteDist> interarrival;
    DiscreteDist service = DiscreteDist::deterministic(1);
    std::optional<DiscreteDist> vacation;

    static QueueSpec ber_g1(double lambda, DiscreteDist service);
    static QueueSpec ber_g1_vacation(double lambda, DiscreteDist service, DiscreteDist vacation);
    static QueueSpec lcfs(DiscreteDist interarrival, DiscreteDist service);
    static QueueSpec gg_inf(DiscreteDist interarrival, DiscreteDist service);

    // Structural checks (arrival kind, vacation presence). Stability is
    // checked separately since the simulator and the closed forms differ on
    // what they accept.
    void validate() const;

    // lambda: Bernoulli rate, or 1/E[X] for a renewal source.
    double arrival_rate() const;
    double utilization() const { return arrival_rate() * service.mean(); }
    // X as a distribution (geometric(lambda) for Bernoulli sources).
    DiscreteDist interarrival_dist() const;
    bool is_fcfs() const {
        return discipline == Discipline::fcfs_ber_g_1 || discipline == Discipline::fcfs_ber_g_1_vacation;
    }
};

struct AnalyticDiagnostics {
    double truncation_error = 0.0;
    long iterations = 0;
    double residual = 0.0;
};

struct AnalyticResult {
    std::optional<double> peak_age;
    std::optional<double> avg_age;
    std::optional<double> avg_age_lower;
    std::optional<double> avg_age_upper;
    AnalyticDiagnostics diagnostics;

    // min(avg_age_upper, peak_age): the tighter of the printed upper bound and
    // A^ave <= A^p.
    std::optional<double> effective_upper() const;
};

// Peak age, Ber/G/1 FCFS.
AnalyticResult peak_age_ber_g1(const QueueSpec& spec);
// Average age, Ber/G/1 FCFS. Uses L_S(1 - lambda).
AnalyticResult avg_age_ber_g1(const QueueSpec& spec);
// Peak age with multiple vacations: the Ber/G/1 value plus
// E[V^2]/(2E[V]) - 1/2.
AnalyticResult peak_age_ber_g1_vacation(const QueueSpec& spec);
// Lower/upper average-age bounds for the vacation queue, evaluated
// from L_S, L_V and L'_V at 1 - lambda. peak_age carries the
// A^ave <= A^p bound.
AnalyticResult avg_age_bounds_vacation(const QueueSpec& spec);

struct CrossExpectations {
    double p_serve = 0.0;          // P(S <= X)
    double e_s_given_serve = 0.0;  // E[S 1{S <= X}]
    double e_min = 0.0;            // E[min(X, S)]
    double truncation_error = 0.0;
};

// Joint moments of independent X and S used by the preemptive LCFS queue.
CrossExpectations cross_expectations(const DiscreteDist& x, const DiscreteDist& s);

AnalyticResult lcfs_peak_age(const QueueSpec& spec);
AnalyticResult lcfs_avg_age(const QueueSpec& spec);

struct DropTimeOptions {
    // 0 selects the smallest H with P(S > H) + P(X > H) < 1e-10, capped.
    Slots horizon = 0;
    double tol = 1e-12;
    long max_iterations = 10000;
};

struct DropTime {
    DiscreteDist distribution;
    AnalyticDiagnostics diagnostics;
    double mean = 0.0;
};

// Default horizon for the drop-time iteration.
Slots default_drop_horizon(const DiscreteDist& x, const DiscreteDist& s);

// Distribution of D = min_{l>=0} (X_1 + ... + X_l + S_{l+1}), the time from a
// generation until the first delivery of that packet or any later one in the
// infinite-server queue. Solved from D = min(S, X + D') on the survival
// function, starting from D = S.
DropTime gginf_drop_time_distribution(const DiscreteDist& x, const DiscreteDist& s,
                                      const DropTimeOptions& opts = {});

AnalyticResult gginf_avg_age(const QueueSpec& spec, const DropTimeOptions& opts = {});

// Dispatches on the discipline and fills every value defined for it.
AnalyticResult evaluate(const QueueSpec& spec);

}  // namespace aoi
