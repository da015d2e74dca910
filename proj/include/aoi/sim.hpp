#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"

namespace aoi {

// Fixed draw sequences that replace the random streams, for replaying
// hand-built scenarios. The first packet is always generated at slot 0; each
// interarrival entry schedules the next one, and generation stops once the
// list is exhausted. Running out of service or vacation entries is an error.
struct ScriptedDraws {
    std::vector<Slots> interarrival;
    std::vector<Slots> service;
    std::vector<Slots> vacation;
};

struct SimConfig {
    QueueSpec spec;
    Slots total_slots = 1'000'000;
    Slots warmup_slots = 10'000;
    std::uint64_t seed = 1;
    bool trace_enabled = false;
    bool estimate_enabled = true;
    // FCFS packets join the queue this many slots after generation. With 1
    // the simulated ages follow the Ber/G/1 closed forms; with 0 a packet may
    // be served in its generation slot and every FCFS age is one lower.
    Slots fcfs_service_lag = 1;
    int batches = 30;
    std::optional<ScriptedDraws> script;

    void validate() const;
};

struct AgeEstimate {
    double avg_age = 0.0;
    double peak_age = 0.0;
    std::int64_t delivery_count = 0;  // slots with A(t+1) <= A(t)
    std::int64_t slots_measured = 0;
    double avg_stderr = 0.0;
    double peak_stderr = 0.0;
};

enum class PacketOutcome { delivered_fresh, delivered_stale, preempted, in_flight_at_end };
std::string to_string(PacketOutcome o);

struct PacketRecord {
    std::int64_t id = 0;
    Slots generated = 0;
    Slots start = -1;         // first slot of service
    Slots end = -1;           // completion slot (delivery at its end)
    Slots service = 0;        // drawn service time
    Slots preempted_at = -1;  // slot of the preempting generation
    PacketOutcome outcome = PacketOutcome::in_flight_at_end;

    // T = end - Y + 1 for delivered packets.
    Slots system_time() const { return end - generated + 1; }
    bool delivered() const {
        return outcome == PacketOutcome::delivered_fresh || outcome == PacketOutcome::delivered_stale;
    }
};

struct SimTrace {
    Discipline discipline = Discipline::fcfs_ber_g_1;
    Slots total_slots = 0;
    // ages[t] = A(t) for t = 0..total_slots.
    std::vector<Slots> ages;
    // Indexed by packet id, in generation order.
    std::vector<PacketRecord> packets;
};

struct SimResult {
    std::optional<AgeEstimate> estimate;
    std::optional<SimTrace> trace;
};

// Streaming estimator for definitions of peak and average age: the average of
// A(t), and the average of A(t) over slots with A(t+1) <= A(t). Measured slots
// are split into `batches` consecutive batches of equal length (the last one
// absorbs the remainder) for batch-means standard errors.
class AgeAccumulator {
public:
    AgeAccumulator(std::int64_t slots, int batches);

    void add(Slots age, bool peak);
    // Throws NoDeliveriesError when no slot qualified as a peak.
    AgeEstimate finish() const;

private:
    struct Batch {
        double age_sum = 0.0;
        double peak_sum = 0.0;
        std::int64_t peaks = 0;
        std::int64_t slots = 0;
    };
    std::int64_t slots_;
    std::int64_t batch_len_;
    std::int64_t seen_ = 0;
    std::vector<Batch> batches_;
};

// Slotted simulation of spec.discipline. Deterministic in cfg.
SimResult run_simulation(const SimConfig& cfg);

// Estimates from per-slot ages (ages[t] = A(t)); slots t in [warmup, n-2]
// are measured since a peak test at t needs A(t+1).
AgeEstimate estimate_from_trace(std::span<const Slots> ages, Slots warmup, int batches = 30);

// Per-slot CSV: slot, age, delivery_flag, packet_id, event.
void write_slot_csv(const SimTrace& trace, std::ostream& out);
// Packet CSV: packet_id, generated_slot, start_slot, end_slot, outcome.
void write_packet_csv(const SimTrace& trace, std::ostream& out);

}  // namespace aoi
