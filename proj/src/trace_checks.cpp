#include "aoi/trace_checks.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <limits>
#include <vector>

namespace aoi {

namespace {

Slots age_at(const SimTrace& trace, Slots t) { return trace.ages[static_cast<std::size_t>(t)]; }

}  // namespace

InvariantReport check_age_recursion(const SimTrace& trace) {
    InvariantReport r{"age_recursion", 0, 0, {}};
    const auto n = static_cast<std::size_t>(trace.total_slots);
    if (trace.ages.size() != n + 1) {
        r.fail(fmt::format("trace has {} ages for {} slots", trace.ages.size(), n));
        return r;
    }
    constexpr Slots kNone = std::numeric_limits<Slots>::max();
    std::vector<Slots> served_min(n, kNone);
    for (const auto& p : trace.packets) {
        if (!p.delivered()) continue;
        auto& m = served_min[static_cast<std::size_t>(p.end)];
        m = std::min(m, p.end - p.generated);
    }
    for (std::size_t t = 0; t < n; ++t) {
        ++r.checked;
        const Slots expected = std::min(trace.ages[t], served_min[t]) + 1;
        if (trace.ages[t + 1] != expected)
            r.fail(fmt::format("slot {}: A(t)={} A(t+1)={} expected {}", t, trace.ages[t], trace.ages[t + 1],
                               expected));
    }
    return r;
}

InvariantReport check_fcfs_freshness(const SimTrace& trace) {
    InvariantReport r{"fcfs_freshness", 0, 0, {}};
    std::vector<const PacketRecord*> delivered;
    for (const auto& p : trace.packets)
        if (p.delivered()) delivered.push_back(&p);
    std::stable_sort(delivered.begin(), delivered.end(),
                     [](const auto* a, const auto* b) { return a->end < b->end; });
    Slots last_gen = -1, last_end = -1;
    for (const auto* p : delivered) {
        ++r.checked;
        if (p->generated < last_gen || p->end == last_end)
            r.fail(fmt::format("packet {} delivered out of order at slot {}", p->id, p->end));
        if (!(p->end >= p->start && p->start >= p->generated))
            r.fail(fmt::format("packet {}: need end >= start >= generated", p->id));
        if (p->end - p->generated > age_at(trace, p->end))
            r.fail(fmt::format("packet {} delivered stale at slot {}", p->id, p->end));
        last_gen = p->generated;
        last_end = p->end;
    }
    return r;
}

InvariantReport check_lcfs_generation_recursion(const SimTrace& trace) {
    InvariantReport r{"lcfs_generation_recursion", 0, 0, {}};
    const auto& ps = trace.packets;
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        ++r.checked;
        const Slots x = ps[i + 1].generated - ps[i].generated;
        const Slots b = age_at(trace, ps[i].generated);
        const Slots expected = x + (ps[i].service <= x ? 0 : b);
        const Slots actual = age_at(trace, ps[i + 1].generated);
        if (actual != expected)
            r.fail(fmt::format("packet {}: B_(i+1)={} expected {}", ps[i + 1].id, actual, expected));
    }
    return r;
}

InvariantReport check_lcfs_renewal_area(const SimTrace& trace) {
    InvariantReport r{"lcfs_renewal_area", 0, 0, {}};
    std::vector<Slots> prefix(trace.ages.size() + 1, 0);
    for (std::size_t t = 0; t < trace.ages.size(); ++t) prefix[t + 1] = prefix[t] + trace.ages[t];
    const auto& ps = trace.packets;
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        ++r.checked;
        const Slots z = ps[i].generated;
        const Slots x = ps[i + 1].generated - z;
        const Slots b = age_at(trace, z);
        const Slots area = prefix[static_cast<std::size_t>(z + x)] - prefix[static_cast<std::size_t>(z)];
        // (X^2 - X)/2 + B min(X, S), kept in integers
        const Slots expected = (x * x - x) / 2 + b * std::min(x, ps[i].service);
        if (area != expected)
            r.fail(fmt::format("packet {}: renewal area {} expected {}", ps[i].id, area, expected));
    }
    return r;
}

InvariantReport check_gginf_drop_identity(const SimTrace& trace, std::int64_t window) {
    InvariantReport r{"gginf_drop_identity", 0, 0, {}};
    const auto& ps = trace.packets;
    const auto n = static_cast<std::int64_t>(ps.size());
    // Packet 0 competes with the A(0) = 0 initial condition; start at 1.
    for (std::int64_t i = 1; i < n; ++i) {
        const Slots z = ps[static_cast<std::size_t>(i)].generated;
        Slots d = std::numeric_limits<Slots>::max();
        Slots offset_at_d = 0;
        const std::int64_t last = std::min(n - 1, i + window);
        for (std::int64_t j = i; j <= last; ++j) {
            const auto& pj = ps[static_cast<std::size_t>(j)];
            const Slots offset = pj.generated - z;
            if (offset + 1 > d) break;
            const Slots cand = offset + pj.service;
            if (cand < d || (cand == d && offset > offset_at_d)) {
                d = cand;
                offset_at_d = offset;
            }
        }
        // a packet beyond the window might still undercut d
        if (last < n - 1 && ps[static_cast<std::size_t>(last + 1)].generated - z + 1 <= d) continue;
        if (z + d > trace.total_slots) continue;
        ++r.checked;
        const Slots before = age_at(trace, z + d - 1);
        const Slots after = age_at(trace, z + d);
        const Slots expected = d - offset_at_d;
        if (after != expected || after > before)
            r.fail(fmt::format("packet {}: D={} A(Z+D-1)={} A(Z+D)={} expected {}", i, d, before, after, expected));
    }
    return r;
}

}  // namespace aoi
