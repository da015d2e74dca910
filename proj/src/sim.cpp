#include "aoi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fmt/format.h>
#include <memory>
#include <ostream>
#include <random>

#include "aoi/errors.hpp"

namespace aoi {

std::string to_string(PacketOutcome o) {
    switch (o) {
        case PacketOutcome::delivered_fresh: return "delivered_fresh";
        case PacketOutcome::delivered_stale: return "delivered_stale";
        case PacketOutcome::preempted: return "preempted";
        case PacketOutcome::in_flight_at_end: return "in_flight_at_end";
    }
    return "unknown";
}

void SimConfig::validate() const {
    spec.validate();
    if (!(total_slots > warmup_slots && warmup_slots >= 0))
        throw InvalidArgument(fmt::format("need total_slots > warmup_slots >= 0, got {} and {}", total_slots,
                                          warmup_slots));
    if (estimate_enabled && total_slots < 1000)
        throw InvalidArgument(fmt::format("estimates need at least 1000 slots, got {}", total_slots));
    if (batches < 2) throw InvalidArgument("need at least two batches");
    if (fcfs_service_lag < 0) throw InvalidArgument("fcfs_service_lag must be >= 0");
    if (spec.is_fcfs()) {
        // The unit-service queue at lambda = 1 is critically loaded but its
        // backlog never grows, so it is the one rho = 1 case accepted.
        const bool unit_service = spec.service.max_support() == 1;
        const double rho = spec.utilization();
        if (!(rho < 1.0) && !(unit_service && rho <= 1.0))
            throw StabilityError(fmt::format("utilization rho = {:.6g} >= 1; FCFS simulation would not converge", rho));
    }
}

// ---------------------------------------------------------------------------
// AgeAccumulator

AgeAccumulator::AgeAccumulator(std::int64_t slots, int batches)
    : slots_(slots), batch_len_(slots / batches), batches_(static_cast<std::size_t>(batches)) {
    if (batches < 2 || slots < batches)
        throw InvalidArgument(fmt::format("cannot split {} slots into {} batches", slots, batches));
}

void AgeAccumulator::add(Slots age, bool peak) {
    const auto idx = std::min<std::int64_t>(seen_ / batch_len_, static_cast<std::int64_t>(batches_.size()) - 1);
    Batch& b = batches_[static_cast<std::size_t>(idx)];
    b.age_sum += static_cast<double>(age);
    ++b.slots;
    if (peak) {
        b.peak_sum += static_cast<double>(age);
        ++b.peaks;
    }
    ++seen_;
}

namespace {

double batch_stderr(const std::vector<double>& means) {
    const auto n = static_cast<double>(means.size());
    if (means.size() < 2) return std::numeric_limits<double>::infinity();
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= n;
    double ss = 0.0;
    for (double m : means) ss += (m - mu) * (m - mu);
    return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

AgeEstimate AgeAccumulator::finish() const {
    AgeEstimate e;
    double age_sum = 0.0, peak_sum = 0.0;
    std::vector<double> avg_means, peak_means;
    for (const Batch& b : batches_) {
        age_sum += b.age_sum;
        peak_sum += b.peak_sum;
        e.delivery_count += b.peaks;
        e.slots_measured += b.slots;
        if (b.slots > 0) avg_means.push_back(b.age_sum / static_cast<double>(b.slots));
        if (b.peaks > 0) peak_means.push_back(b.peak_sum / static_cast<double>(b.peaks));
    }
    if (e.slots_measured != slots_)
        throw InvalidArgument(fmt::format("accumulator expected {} slots, saw {}", slots_, e.slots_measured));
    if (e.delivery_count == 0)
        throw NoDeliveriesError("no useful deliveries in the measured window");
    e.avg_age = age_sum / static_cast<double>(e.slots_measured);
    e.peak_age = peak_sum / static_cast<double>(e.delivery_count);
    e.avg_stderr = batch_stderr(avg_means);
    e.peak_stderr = batch_stderr(peak_means);
    return e;
}

AgeEstimate estimate_from_trace(std::span<const Slots> ages, Slots warmup, int batches) {
    if (warmup < 0 || static_cast<std::int64_t>(ages.size()) < warmup + 2)
        throw InvalidArgument(fmt::format("trace of {} slots too short for warmup {}", ages.size(), warmup));
    const auto last = static_cast<Slots>(ages.size()) - 2;
    AgeAccumulator acc(last - warmup + 1, batches);
    for (Slots t = warmup; t <= last; ++t) {
        const auto i = static_cast<std::size_t>(t);
        acc.add(ages[i], ages[i + 1] <= ages[i]);
    }
    return acc.finish();
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

// Independent engines per purpose so that changing one distribution leaves
// the other draw sequences untouched.
class Draws {
public:
    explicit Draws(const SimConfig& cfg) : script_(cfg.script ? &*cfg.script : nullptr) {
        const auto lo = static_cast<std::uint32_t>(cfg.seed);
        const auto hi = static_cast<std::uint32_t>(cfg.seed >> 32);
        std::seed_seq a{lo, hi, 1u}, s{lo, hi, 2u}, v{lo, hi, 3u};
        arrival_.seed(a);
        service_.seed(s);
        vacation_.seed(v);
    }

    bool scripted() const { return script_ != nullptr; }

    bool coin(double p) { return uniform01(arrival_) < p; }

    // Scripted gaps run out; random ones never do.
    std::optional<Slots> interarrival(const DiscreteDist& x) {
        if (!script_) return x.sample(arrival_);
        if (next_gap_ >= script_->interarrival.size()) return std::nullopt;
        return checked(script_->interarrival[next_gap_++], "interarrival");
    }

    Slots service(const DiscreteDist& s) {
        if (!script_) return s.sample(service_);
        if (next_service_ >= script_->service.size()) throw InvalidArgument("script ran out of service times");
        return checked(script_->service[next_service_++], "service");
    }

    Slots vacation(const DiscreteDist& v) {
        if (!script_) return v.sample(vacation_);
        if (next_vacation_ >= script_->vacation.size()) throw InvalidArgument("script ran out of vacation times");
        return checked(script_->vacation[next_vacation_++], "vacation");
    }

private:
    static Slots checked(Slots v, const char* what) {
        if (v < 1) throw InvalidArgument(fmt::format("scripted {} value {} is below 1", what, v));
        return v;
    }

    const ScriptedDraws* script_;
    std::mt19937_64 arrival_, service_, vacation_;
    std::size_t next_gap_ = 0, next_service_ = 0, next_vacation_ = 0;
};

class ArrivalProcess {
public:
    ArrivalProcess(const QueueSpec& spec, Draws& draws) : spec_(spec), draws_(draws) {
        if (spec.interarrival) x_ = *spec.interarrival;
    }

    bool fires(Slots t) {
        if (t == 0) {
            schedule_after(0);
            return true;
        }
        if (spec_.bernoulli_rate && !draws_.scripted()) return draws_.coin(*spec_.bernoulli_rate);
        if (next_ && *next_ == t) {
            schedule_after(t);
            return true;
        }
        return false;
    }

private:
    void schedule_after(Slots t) {
        if (spec_.bernoulli_rate && !draws_.scripted()) return;
        const auto gap = draws_.interarrival(x_ ? *x_ : DiscreteDist::deterministic(1));
        next_ = gap ? std::optional<Slots>(t + *gap) : std::nullopt;
    }

    const QueueSpec& spec_;
    Draws& draws_;
    std::optional<DiscreteDist> x_;
    std::optional<Slots> next_;
};

struct Completion {
    std::int64_t id;
    Slots generated;
};

// Receives packet events; a no-op when tracing is off.
class Recorder {
public:
    explicit Recorder(SimTrace* trace) : trace_(trace) {}

    void generated(std::int64_t id, Slots t) {
        if (!trace_) return;
        PacketRecord p;
        p.id = id;
        p.generated = t;
        trace_->packets.push_back(p);
    }
    void started(std::int64_t id, Slots t, Slots service) {
        if (!trace_) return;
        auto& p = at(id);
        p.start = t;
        p.service = service;
    }
    void completed(std::int64_t id, Slots t, bool fresh) {
        if (!trace_) return;
        auto& p = at(id);
        p.end = t;
        p.outcome = fresh ? PacketOutcome::delivered_fresh : PacketOutcome::delivered_stale;
    }
    // Out-run by a later packet in the infinite-server queue; still completes
    // at `end`, which may lie past the horizon.
    void dominated(std::int64_t id, Slots end, Slots horizon) {
        if (!trace_) return;
        auto& p = at(id);
        if (end < horizon) {
            p.end = end;
            p.outcome = PacketOutcome::delivered_stale;
        }
    }
    void preempted(std::int64_t id, Slots t) {
        if (!trace_) return;
        auto& p = at(id);
        p.preempted_at = t;
        p.outcome = PacketOutcome::preempted;
    }

private:
    PacketRecord& at(std::int64_t id) { return trace_->packets[static_cast<std::size_t>(id)]; }
    SimTrace* trace_;
};

class DisciplineState {
public:
    virtual ~DisciplineState() = default;
    virtual void admit(std::int64_t id, Slots t) = 0;
    // Appends packets completing at the end of slot t.
    virtual void serve(Slots t, std::vector<Completion>& done) = 0;
};

struct InService {
    std::int64_t id;
    Slots generated;
    Slots remaining;
};

// Single server, head-of-line service, unbounded buffer. With a vacation
// distribution the server takes back-to-back vacations whenever it finds the
// queue empty at a slot start; a packet arriving mid-vacation waits for that
// vacation to end.
class FcfsState final : public DisciplineState {
public:
    FcfsState(const QueueSpec& spec, Slots lag, Draws& draws, Recorder& rec)
        : service_(spec.service), vacation_(spec.vacation), lag_(lag), draws_(draws), rec_(rec) {}

    void admit(std::int64_t id, Slots t) override { queue_.push_back({id, t}); }

    void serve(Slots t, std::vector<Completion>& done) override {
        if (!busy_ && vacation_left_ == 0) {
            if (!queue_.empty() && queue_.front().generated + lag_ <= t) {
                const auto head = queue_.front();
                queue_.pop_front();
                const Slots s = draws_.service(service_);
                busy_ = InService{head.id, head.generated, s};
                rec_.started(head.id, t, s);
            } else if (vacation_) {
                vacation_left_ = draws_.vacation(*vacation_);
            }
        }
        if (busy_) {
            if (--busy_->remaining == 0) {
                done.push_back({busy_->id, busy_->generated});
                busy_.reset();
            }
        } else if (vacation_left_ > 0) {
            --vacation_left_;
        }
    }

private:
    const DiscreteDist& service_;
    const std::optional<DiscreteDist>& vacation_;
    Slots lag_;
    Draws& draws_;
    Recorder& rec_;
    std::deque<Completion> queue_;
    std::optional<InService> busy_;
    Slots vacation_left_ = 0;
};

// A new packet displaces the one in service, which is discarded.
class LcfsState final : public DisciplineState {
public:
    LcfsState(const QueueSpec& spec, Draws& draws, Recorder& rec)
        : service_(spec.service), draws_(draws), rec_(rec) {}

    void admit(std::int64_t id, Slots t) override {
        if (busy_) rec_.preempted(busy_->id, t);
        const Slots s = draws_.service(service_);
        busy_ = InService{id, t, s};
        rec_.started(id, t, s);
    }

    void serve(Slots, std::vector<Completion>& done) override {
        if (busy_ && --busy_->remaining == 0) {
            done.push_back({busy_->id, busy_->generated});
            busy_.reset();
        }
    }

private:
    const DiscreteDist& service_;
    Draws& draws_;
    Recorder& rec_;
    std::optional<InService> busy_;
};

// Every packet gets its own server. Only packets that can still lower the
// age are kept: in generation order their completion slots are strictly
// increasing, so a new packet evicts every older one finishing no earlier.
class InfiniteServerState final : public DisciplineState {
public:
    InfiniteServerState(const QueueSpec& spec, Slots horizon, Draws& draws, Recorder& rec)
        : service_(spec.service), horizon_(horizon), draws_(draws), rec_(rec) {}

    void admit(std::int64_t id, Slots t) override {
        const Slots s = draws_.service(service_);
        const Slots end = t + s - 1;
        rec_.started(id, t, s);
        while (!live_.empty() && live_.back().end >= end) {
            rec_.dominated(live_.back().id, live_.back().end, horizon_);
            live_.pop_back();
        }
        live_.push_back({id, t, end});
    }

    void serve(Slots t, std::vector<Completion>& done) override {
        while (!live_.empty() && live_.front().end == t) {
            done.push_back({live_.front().id, live_.front().generated});
            live_.pop_front();
        }
    }

private:
    struct Live {
        std::int64_t id;
        Slots generated;
        Slots end;
    };
    const DiscreteDist& service_;
    Slots horizon_;
    Draws& draws_;
    Recorder& rec_;
    std::deque<Live> live_;
};

std::unique_ptr<DisciplineState> make_state(const SimConfig& cfg, Draws& draws, Recorder& rec) {
    switch (cfg.spec.discipline) {
        case Discipline::fcfs_ber_g_1:
        case Discipline::fcfs_ber_g_1_vacation:
            return std::make_unique<FcfsState>(cfg.spec, cfg.fcfs_service_lag, draws, rec);
        case Discipline::lcfs_gg1_preemptive:
            return std::make_unique<LcfsState>(cfg.spec, draws, rec);
        case Discipline::gg_infinity:
            return std::make_unique<InfiniteServerState>(cfg.spec, cfg.total_slots, draws, rec);
    }
    throw InvalidArgument("unknown discipline");
}

}  // namespace

SimResult run_simulation(const SimConfig& cfg) {
    cfg.validate();

    SimResult result;
    if (cfg.trace_enabled) {
        result.trace.emplace();
        result.trace->discipline = cfg.spec.discipline;
        result.trace->total_slots = cfg.total_slots;
        result.trace->ages.reserve(static_cast<std::size_t>(cfg.total_slots) + 1);
    }
    SimTrace* trace = result.trace ? &*result.trace : nullptr;

    Draws draws(cfg);
    Recorder rec(trace);
    ArrivalProcess arrivals(cfg.spec, draws);
    auto state = make_state(cfg, draws, rec);

    std::optional<AgeAccumulator> acc;
    if (cfg.estimate_enabled) acc.emplace(cfg.total_slots - cfg.warmup_slots, cfg.batches);

    Slots age = 0;
    if (trace) trace->ages.push_back(age);
    std::int64_t next_id = 0;
    std::vector<Completion> done;

    for (Slots t = 0; t < cfg.total_slots; ++t) {
        if (arrivals.fires(t)) {
            const std::int64_t id = next_id++;
            rec.generated(id, t);
            state->admit(id, t);
        }

        done.clear();
        state->serve(t, done);

        // A(t+1) = min{t - Y_i, A(t)} + 1 over packets served in slot t.
        Slots reduced = age;
        const Completion* freshest = nullptr;
        for (const auto& c : done) {
            if (t - c.generated < reduced) {
                reduced = t - c.generated;
                freshest = &c;
            }
        }
        for (const auto& c : done) rec.completed(c.id, t, &c == freshest);

        const Slots next_age = reduced + 1;
        if (acc && t >= cfg.warmup_slots) acc->add(age, next_age <= age);
        age = next_age;
        if (trace) trace->ages.push_back(age);
    }

    if (acc) result.estimate = acc->finish();
    return result;
}

// ---------------------------------------------------------------------------
// CSV export

void write_slot_csv(const SimTrace& trace, std::ostream& out) {
    const auto n = static_cast<std::size_t>(trace.total_slots);
    std::vector<std::int64_t> fresh_id(n, -1);
    std::vector<std::uint8_t> flags(n, 0);
    enum : std::uint8_t { kGen = 1, kFresh = 2, kStale = 4, kPreempt = 8 };
    for (const auto& p : trace.packets) {
        flags[static_cast<std::size_t>(p.generated)] |= kGen;
        if (p.preempted_at >= 0) flags[static_cast<std::size_t>(p.preempted_at)] |= kPreempt;
        if (p.outcome == PacketOutcome::delivered_fresh) {
            flags[static_cast<std::size_t>(p.end)] |= kFresh;
            fresh_id[static_cast<std::size_t>(p.end)] = p.id;
        } else if (p.outcome == PacketOutcome::delivered_stale) {
            flags[static_cast<std::size_t>(p.end)] |= kStale;
        }
    }

    out << "slot,age,delivery_flag,packet_id,event\n";
    for (std::size_t t = 0; t < n; ++t) {
        std::string event;
        auto add = [&](const char* e) {
            if (!event.empty()) event += '+';
            event += e;
        };
        if (flags[t] & kGen) add("generate");
        if (flags[t] & kPreempt) add("preempt");
        if (flags[t] & kFresh) add("deliver");
        if (flags[t] & kStale) add("deliver_stale");
        if (event.empty()) event = "none";
        const bool useful = trace.ages[t + 1] <= trace.ages[t];
        out << t << ',' << trace.ages[t] << ',' << (useful ? 1 : 0) << ',';
        if (fresh_id[t] >= 0) out << fresh_id[t];
        out << ',' << event << '\n';
    }
}

void write_packet_csv(const SimTrace& trace, std::ostream& out) {
    out << "packet_id,generated_slot,start_slot,end_slot,outcome\n";
    for (const auto& p : trace.packets) {
        out << p.id << ',' << p.generated << ',';
        if (p.start >= 0) out << p.start;
        out << ',';
        if (p.end >= 0) out << p.end;
        out << ',' << to_string(p.outcome) << '\n';
    }
}

}  // namespace aoi
