#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace aoi {

// Durations and slot indices in the slotted model.
using Slots = std::int64_t;

// Uniform [0,1) from a 64-bit engine using the top 53 bits, so draws are
// identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Probability mass function on {1, 2, 3, ...}. Every service, vacation and
// inter-generation period consumes at least one slot, so zero is never in the
// support. Values are immutable after construction.
class DiscreteDist {
public:
    enum class Family { deterministic, geometric, uniform, explicit_pmf };

    // Infinite-support families are materialized up to this tail mass.
    static constexpr double kTailTolerance = 1e-12;
    // Explicit pmfs whose mass is within this of 1 are renormalized.
    static constexpr double kRenormalizeTolerance = 1e-9;

    static DiscreteDist geometric(double p);
    static DiscreteDist deterministic(Slots d);
    static DiscreteDist uniform(Slots a, Slots b);
    // (value, probability) pairs; zero-probability entries are dropped.
    static DiscreteDist from_pmf(std::vector<std::pair<Slots, double>> pmf);
    // pmf over 1..probs.size() plus mass lying beyond the stored support.
    static DiscreteDist truncated(std::vector<double> probs, double tail_mass);

    Family family() const { return family_; }
    std::string family_name() const;
    // Short human-readable form, e.g. "geometric(0.75)".
    std::string describe() const;

    double geometric_p() const { return p_; }

    double pmf(Slots k) const;
    // P(D > k).
    double survival(Slots k) const;
    double cdf(Slots k) const { return 1.0 - survival(k); }

    Slots min_support() const { return min_; }
    // Largest stored support point. For geometric this is the smallest K with
    // P(D > K) < kTailTolerance.
    Slots max_support() const { return max_; }
    bool finite_support() const { return family_ != Family::geometric && tail_mass_ == 0.0; }
    double tail_mass() const { return tail_mass_; }
    // Upper bound on the error of sums over the stored support (zero for the
    // closed-form families).
    double truncation_bound() const { return family_ == Family::geometric ? 0.0 : tail_mass_; }

    double mean() const { return mean_; }
    double second_moment() const { return second_moment_; }
    double variance() const { return second_moment_ - mean_ * mean_; }

    // E[x^D] and E[D x^(D-1)] for x in [0,1].
    double pgf(double x) const;
    double pgf_derivative(double x) const;

    Slots sample(std::mt19937_64& rng) const;

    // (value, probability) pairs of the stored support in increasing order.
    std::vector<std::pair<Slots, double>> support() const;

private:
    DiscreteDist() = default;
    void finalize_explicit();

    Family family_ = Family::deterministic;
    double p_ = 1.0;            // geometric success probability
    Slots min_ = 1;
    Slots max_ = 1;
    std::vector<double> probs_; // probs_[k - min_] for finite families
    std::vector<double> cdf_;
    double tail_mass_ = 0.0;
    double mean_ = 1.0;
    double second_moment_ = 1.0;
};

}  // namespace aoi
