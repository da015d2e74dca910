#pragma once

#include <cstdint>
#include <string>

#include "aoi/sim.hpp"

namespace aoi {

// Outcome of replaying one structural identity against a trace.
struct InvariantReport {
    std::string name;
    std::int64_t checked = 0;
    std::int64_t violations = 0;
    std::string first_violation;

    bool ok() const { return violations == 0; }
    void fail(std::string msg) {
        if (violations++ == 0) first_violation = std::move(msg);
    }
};

// A(t+1) = min{t - Y_i : i served in t} u {A(t)} + 1, recomputed from the
// packet table for every slot.
InvariantReport check_age_recursion(const SimTrace& trace);

// FCFS: deliveries leave in generation order and the min in the recursion
// always selects the delivered packet (t - Y_i <= A(t)).
InvariantReport check_fcfs_freshness(const SimTrace& trace);

// Preemptive LCFS: B_{i+1} = X_i + B_i (1 - 1{S_i <= X_i}) with B_i = A(Z_i).
InvariantReport check_lcfs_generation_recursion(const SimTrace& trace);

// Preemptive LCFS: sum of A(t) over [Z_i, Z_i + X_i) equals
// (X_i^2 - X_i)/2 + B_i min(X_i, S_i).
InvariantReport check_lcfs_renewal_area(const SimTrace& trace);

// Infinite servers: with D_i = min over l <= window of
// (Z_{i+l} - Z_i + S_{i+l}), the slot Z_i + D_i - 1 carries a useful delivery
// and A(Z_i + D_i) is set by the freshest packet attaining D_i. Packets whose
// window could hide a smaller value, or whose drop falls past the horizon,
// are skipped.
InvariantReport check_gginf_drop_identity(const SimTrace& trace, std::int64_t window = 50);

}  // namespace aoi
