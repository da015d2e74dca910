#include "aoi/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/format.h>

#include "aoi/errors.hpp"

namespace aoi {

std::string to_string(Discipline d) {
    switch (d) {
        case Discipline::fcfs_ber_g_1: return "fcfs_ber_g_1";
        case Discipline::fcfs_ber_g_1_vacation: return "fcfs_ber_g_1_vacation";
        case Discipline::lcfs_gg1_preemptive: return "lcfs_gg1_preemptive";
        case Discipline::gg_infinity: return "gg_infinity";
    }
    return "unknown";
}

Discipline discipline_from_string(const std::string& name) {
    for (auto d : {Discipline::fcfs_ber_g_1, Discipline::fcfs_ber_g_1_vacation,
                   Discipline::lcfs_gg1_preemptive, Discipline::gg_infinity})
        if (to_string(d) == name) return d;
    throw InvalidArgument(fmt::format("unknown discipline '{}'", name));
}

QueueSpec QueueSpec::ber_g1(double lambda, DiscreteDist service) {
    QueueSpec q;
    q.discipline = Discipline::fcfs_ber_g_1;
    q.bernoulli_rate = lambda;
    q.service = std::move(service);
    return q;
}

QueueSpec QueueSpec::ber_g1_vacation(double lambda, DiscreteDist service, DiscreteDist vacation) {
    QueueSpec q = ber_g1(lambda, std::move(service));
    q.discipline = Discipline::fcfs_ber_g_1_vacation;
    q.vacation = std::move(vacation);
    return q;
}

QueueSpec QueueSpec::lcfs(DiscreteDist interarrival, DiscreteDist service) {
    QueueSpec q;
    q.discipline = Discipline::lcfs_gg1_preemptive;
    q.interarrival = std::move(interarrival);
    q.service = std::move(service);
    return q;
}

QueueSpec QueueSpec::gg_inf(DiscreteDist interarrival, DiscreteDist service) {
    QueueSpec q = lcfs(std::move(interarrival), std::move(service));
    q.discipline = Discipline::gg_infinity;
    return q;
}

void QueueSpec::validate() const {
    if (bernoulli_rate.has_value() == interarrival.has_value())
        throw InvalidArgument("queue spec needs exactly one of a Bernoulli rate or an inter-generation distribution");
    if (bernoulli_rate && !(*bernoulli_rate > 0.0 && *bernoulli_rate <= 1.0))
        throw InvalidArgument(fmt::format("Bernoulli rate must be in (0,1], got {}", *bernoulli_rate));
    if (is_fcfs() && !bernoulli_rate)
        throw InvalidArgument(fmt::format("{} requires Bernoulli arrivals", to_string(discipline)));
    const bool needs_vacation = discipline == Discipline::fcfs_ber_g_1_vacation;
    if (needs_vacation && !vacation)
        throw InvalidArgument("vacation discipline requires a vacation distribution");
    if (!needs_vacation && vacation)
        throw InvalidArgument(fmt::format("{} does not take a vacation distribution", to_string(discipline)));
}

double QueueSpec::arrival_rate() const {
    if (bernoulli_rate) return *bernoulli_rate;
    if (interarrival) return 1.0 / interarrival->mean();
    throw InvalidArgument("queue spec has no arrival process");
}

DiscreteDist QueueSpec::interarrival_dist() const {
    if (interarrival) return *interarrival;
    return DiscreteDist::geometric(arrival_rate());
}

std::optional<double> AnalyticResult::effective_upper() const {
    if (avg_age_upper && peak_age) return std::min(*avg_age_upper, *peak_age);
    if (avg_age_upper) return avg_age_upper;
    return peak_age;
}

namespace {

void require(const QueueSpec& spec, Discipline d) {
    spec.validate();
    if (spec.discipline != d)
        throw InvalidArgument(fmt::format("expected discipline {}, got {}", to_string(d), to_string(spec.discipline)));
}

void require_stable(const QueueSpec& spec) {
    const double rho = spec.utilization();
    if (!(rho < 1.0))
        throw StabilityError(fmt::format("utilization rho = {:.6g} >= 1; FCFS queue is unstable", rho));
}

// Mean waiting time (lambda E[S^2] - rho) / (2 (1 - rho)).
double mean_wait(const QueueSpec& spec) {
    const double lambda = spec.arrival_rate();
    const double rho = spec.utilization();
    return (lambda * spec.service.second_moment() - rho) / (2.0 * (1.0 - rho));
}

double ber_g1_peak(const QueueSpec& spec) {
    const double lambda = spec.arrival_rate();
    return 1.0 / lambda + spec.service.mean() + mean_wait(spec);
}

double vacation_residual(const DiscreteDist& v) {
    return v.second_moment() / (2.0 * v.mean()) - 0.5;
}

}  // namespace

AnalyticResult peak_age_ber_g1(const QueueSpec& spec) {
    require(spec, Discipline::fcfs_ber_g_1);
    require_stable(spec);
    AnalyticResult r;
    r.peak_age = ber_g1_peak(spec);
    return r;
}

AnalyticResult avg_age_ber_g1(const QueueSpec& spec) {
    require(spec, Discipline::fcfs_ber_g_1);
    require_stable(spec);
    const double lambda = spec.arrival_rate();
    const double rho = spec.utilization();
    const double ls = spec.service.pgf(1.0 - lambda);
    AnalyticResult r;
    r.avg_age = 1.0 + spec.service.mean() + (1.0 - lambda) * (1.0 - rho) / (lambda * ls) + mean_wait(spec);
    return r;
}

AnalyticResult peak_age_ber_g1_vacation(const QueueSpec& spec) {
    require(spec, Discipline::fcfs_ber_g_1_vacation);
    require_stable(spec);
    AnalyticResult r;
    r.peak_age = ber_g1_peak(spec) + vacation_residual(*spec.vacation);
    return r;
}

AnalyticResult avg_age_bounds_vacation(const QueueSpec& spec) {
    require(spec, Discipline::fcfs_ber_g_1_vacation);
    require_stable(spec);
    const double g = spec.arrival_rate();
    const double rho = spec.utilization();
    const double z = 1.0 - g;
    const DiscreteDist& v = *spec.vacation;
    const double ls = spec.service.pgf(z);
    const double lv = v.pgf(z);
    const double dlv = v.pgf_derivative(z);
    const double ev = v.mean();

    const double lower = 2.0 * (1.0 - rho) / (g * g * ev) * ((2.0 - g + 1.0 / ls) * (1.0 - lv) - g * dlv)
                         + 0.5 - 1.0 / g + 2.0 * spec.service.mean() + mean_wait(spec)
                         + v.second_moment() / (2.0 * ev);
    const double upper = lower + (1.0 - rho) * (1.0 - lv) / g
                         + (1.0 - g) * (1.0 - rho) * ((1.0 - lv) / (g * ls) - dlv);

    AnalyticResult r;
    r.avg_age_lower = lower;
    r.avg_age_upper = upper;
    r.peak_age = ber_g1_peak(spec) + vacation_residual(v);
    return r;
}

CrossExpectations cross_expectations(const DiscreteDist& x, const DiscreteDist& s) {
    using F = DiscreteDist::Family;
    CrossExpectations c;
    if (x.family() == F::geometric && s.family() == F::geometric) {
        // S <= X and min(X,S) >= k both reduce to products of geometric tails.
        const double q = (1.0 - x.geometric_p()) * (1.0 - s.geometric_p());
        const double b = s.geometric_p();
        c.p_serve = b / (1.0 - q);
        c.e_s_given_serve = b / ((1.0 - q) * (1.0 - q));
        c.e_min = 1.0 / (1.0 - q);
        return c;
    }

    // At least one side has bounded stored support; nothing beyond it
    // contributes except the declared tail mass of a truncated pmf.
    Slots k_max = std::numeric_limits<Slots>::max();
    if (x.family() != F::geometric) k_max = std::min(k_max, x.max_support());
    if (s.family() != F::geometric) k_max = std::min(k_max, s.max_support());

    for (Slots k = 1; k <= k_max; ++k) {
        const double x_ge = x.survival(k - 1);  // P(X >= k)
        const double ps = s.pmf(k);
        c.p_serve += ps * x_ge;
        c.e_s_given_serve += static_cast<double>(k) * ps * x_ge;
        c.e_min += x_ge * s.survival(k - 1);
    }
    c.truncation_error = x.survival(k_max) * s.survival(k_max) + x.truncation_bound() + s.truncation_bound();
    return c;
}

namespace {

CrossExpectations lcfs_terms(const QueueSpec& spec) {
    require(spec, Discipline::lcfs_gg1_preemptive);
    const auto c = cross_expectations(spec.interarrival_dist(), spec.service);
    if (!(c.p_serve > 0.0))
        throw AllPreemptedError("P(S <= X) = 0: every packet is preempted before completing service");
    return c;
}

}  // namespace

AnalyticResult lcfs_peak_age(const QueueSpec& spec) {
    const auto c = lcfs_terms(spec);
    const DiscreteDist x = spec.interarrival_dist();
    AnalyticResult r;
    r.peak_age = x.mean() / c.p_serve + c.e_s_given_serve / c.p_serve - 1.0;
    r.diagnostics.truncation_error = c.truncation_error;
    return r;
}

AnalyticResult lcfs_avg_age(const QueueSpec& spec) {
    const auto c = lcfs_terms(spec);
    const DiscreteDist x = spec.interarrival_dist();
    AnalyticResult r;
    r.avg_age = 0.5 * x.second_moment() / x.mean() + c.e_min / c.p_serve - 0.5;
    r.diagnostics.truncation_error = c.truncation_error;
    return r;
}

Slots default_drop_horizon(const DiscreteDist& x, const DiscreteDist& s) {
    constexpr Slots kCap = 100000;
    constexpr double kTail = 1e-10;
    Slots h = 1;
    while (h < kCap && s.survival(h) + x.survival(h) >= kTail) ++h;
    if (s.finite_support()) h = std::max(h, s.max_support());
    return std::min(h, kCap);
}

DropTime gginf_drop_time_distribution(const DiscreteDist& x, const DiscreteDist& s,
                                      const DropTimeOptions& opts) {
    if (!(opts.tol > 0.0)) throw InvalidArgument("drop time: tol must be positive");
    const Slots h = opts.horizon > 0 ? opts.horizon : default_drop_horizon(x, s);
    if (s.finite_support() && h < s.max_support())
        throw InvalidArgument(fmt::format("drop time: horizon {} below service support max {}", h, s.max_support()));

    const auto n = static_cast<std::size_t>(h) + 1;
    std::vector<double> s_surv(n), px(n, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        s_surv[d] = s.survival(static_cast<Slots>(d));
        px[d] = d == 0 ? 0.0 : x.pmf(static_cast<Slots>(d));
    }

    // surv[d] = P(D > d), d = 0..h
    std::vector<double> surv = s_surv, next(n);
    AnalyticDiagnostics diag;
    double residual = 1.0;
    while (true) {
        residual = 0.0;
        next[0] = 1.0;
        for (std::size_t d = 1; d < n; ++d) {
            // P(X + D' <= d) with X >= 1 and D' >= 1
            double done = 0.0;
            for (std::size_t xv = 1; xv < d; ++xv) done += px[xv] * (1.0 - surv[d - xv]);
            next[d] = s_surv[d] * (1.0 - done);
            residual = std::max(residual, std::abs(next[d] - surv[d]));
        }
        surv.swap(next);
        ++diag.iterations;
        if (residual < opts.tol) break;
        if (diag.iterations >= opts.max_iterations)
            throw ConvergenceError(fmt::format("drop time iteration did not converge in {} steps (residual {:.3g})",
                                               diag.iterations, residual),
                                   residual);
    }
    diag.residual = residual;

    std::vector<double> probs(n - 1);
    double mean = 0.0;
    for (std::size_t d = 1; d < n; ++d) {
        probs[d - 1] = std::max(0.0, surv[d - 1] - surv[d]);
        mean += surv[d - 1];
    }
    const double tail = surv[n - 1];
    // Neglected part of E[D] = sum_{d >= h} P(D > d) <= sum_{d >= h} P(S > d).
    if (s.family() == DiscreteDist::Family::geometric)
        diag.truncation_error = s.survival(h) / s.geometric_p();
    else if (!s.finite_support())
        diag.truncation_error = s.tail_mass() * static_cast<double>(h);

    return DropTime{DiscreteDist::truncated(std::move(probs), tail), diag, mean};
}

AnalyticResult gginf_avg_age(const QueueSpec& spec, const DropTimeOptions& opts) {
    require(spec, Discipline::gg_infinity);
    const DiscreteDist x = spec.interarrival_dist();
    const auto drop = gginf_drop_time_distribution(x, spec.service, opts);
    AnalyticResult r;
    r.avg_age = 0.5 * x.second_moment() / x.mean() + drop.mean - 0.5;
    r.diagnostics = drop.diagnostics;
    return r;
}

AnalyticResult evaluate(const QueueSpec& spec) {
    spec.validate();
    AnalyticResult r;
    switch (spec.discipline) {
        case Discipline::fcfs_ber_g_1:
            r = peak_age_ber_g1(spec);
            r.avg_age = avg_age_ber_g1(spec).avg_age;
            break;
        case Discipline::fcfs_ber_g_1_vacation:
            r = avg_age_bounds_vacation(spec);
            break;
        case Discipline::lcfs_gg1_preemptive:
            r = lcfs_peak_age(spec);
            r.avg_age = lcfs_avg_age(spec).avg_age;
            break;
        case Discipline::gg_infinity:
            r = gginf_avg_age(spec);
            break;
    }
    return r;
}

}  // namespace aoi
