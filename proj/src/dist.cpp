#include "aoi/dist.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "aoi/errors.hpp"

namespace aoi {

DiscreteDist DiscreteDist::geometric(double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw InvalidArgument(fmt::format("geometric: p must be in (0,1], got {}", p));
    DiscreteDist d;
    d.family_ = Family::geometric;
    d.p_ = p;
    d.min_ = 1;
    if (p == 1.0) {
        d.max_ = 1;
    } else {
        // smallest K with (1-p)^K < tolerance
        const double q = 1.0 - p;
        Slots k = static_cast<Slots>(std::ceil(std::log(kTailTolerance) / std::log(q)));
        k = std::max<Slots>(k, 1);
        while (std::pow(q, static_cast<double>(k)) >= kTailTolerance) ++k;
        while (k > 1 && std::pow(q, static_cast<double>(k - 1)) < kTailTolerance) --k;
        d.max_ = k;
    }
    d.tail_mass_ = std::pow(1.0 - p, static_cast<double>(d.max_));
    d.mean_ = 1.0 / p;
    d.second_moment_ = (2.0 - p) / (p * p);
    return d;
}

DiscreteDist DiscreteDist::deterministic(Slots v) {
    if (v < 1)
        throw InvalidArgument(fmt::format("deterministic: value must be >= 1, got {}", v));
    DiscreteDist d;
    d.family_ = Family::deterministic;
    d.min_ = d.max_ = v;
    d.probs_ = {1.0};
    d.finalize_explicit();
    return d;
}

DiscreteDist DiscreteDist::uniform(Slots a, Slots b) {
    if (a < 1 || a > b)
        throw InvalidArgument(fmt::format("uniform: need 1 <= a <= b, got a={} b={}", a, b));
    DiscreteDist d;
    d.family_ = Family::uniform;
    d.min_ = a;
    d.max_ = b;
    d.probs_.assign(static_cast<std::size_t>(b - a + 1), 1.0 / static_cast<double>(b - a + 1));
    d.finalize_explicit();
    return d;
}

DiscreteDist DiscreteDist::from_pmf(std::vector<std::pair<Slots, double>> pmf) {
    std::sort(pmf.begin(), pmf.end());
    double total = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        const auto [v, prob] = pmf[i];
        if (v < 1)
            throw InvalidArgument(fmt::format("pmf: support value {} is below 1", v));
        if (!(prob >= 0.0 && prob <= 1.0))
            throw InvalidArgument(fmt::format("pmf: probability {} at {} is outside [0,1]", prob, v));
        if (i > 0 && pmf[i - 1].first == v)
            throw InvalidArgument(fmt::format("pmf: duplicate support value {}", v));
        total += prob;
    }
    if (std::abs(total - 1.0) > kRenormalizeTolerance)
        throw InvalidArgument(fmt::format("pmf: probabilities sum to {}, not 1", total));
    std::erase_if(pmf, [](const auto& e) { return e.second == 0.0; });

    DiscreteDist d;
    d.family_ = Family::explicit_pmf;
    d.min_ = pmf.front().first;
    d.max_ = pmf.back().first;
    d.probs_.assign(static_cast<std::size_t>(d.max_ - d.min_ + 1), 0.0);
    for (const auto& [v, prob] : pmf) d.probs_[static_cast<std::size_t>(v - d.min_)] = prob / total;
    d.finalize_explicit();
    return d;
}

DiscreteDist DiscreteDist::truncated(std::vector<double> probs, double tail_mass) {
    if (probs.empty()) throw InvalidArgument("truncated pmf: empty support");
    if (!(tail_mass >= 0.0 && tail_mass <= 1.0))
        throw InvalidArgument(fmt::format("truncated pmf: tail mass {} outside [0,1]", tail_mass));
    double total = tail_mass;
    for (double prob : probs) {
        if (!(prob >= -kTailTolerance && prob <= 1.0))
            throw InvalidArgument(fmt::format("truncated pmf: probability {} outside [0,1]", prob));
        total += std::max(prob, 0.0);
    }
    if (std::abs(total - 1.0) > kRenormalizeTolerance)
        throw InvalidArgument(fmt::format("truncated pmf: mass sums to {}, not 1", total));

    DiscreteDist d;
    d.family_ = Family::explicit_pmf;
    d.min_ = 1;
    d.max_ = static_cast<Slots>(probs.size());
    d.probs_ = std::move(probs);
    for (double& prob : d.probs_) prob = std::max(prob, 0.0);
    d.tail_mass_ = tail_mass;
    d.finalize_explicit();
    return d;
}

void DiscreteDist::finalize_explicit() {
    cdf_.resize(probs_.size());
    double acc = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        const double k = static_cast<double>(min_) + static_cast<double>(i);
        acc += probs_[i];
        cdf_[i] = acc;
        m1 += k * probs_[i];
        m2 += k * k * probs_[i];
    }
    mean_ = m1;
    second_moment_ = m2;
}

std::string DiscreteDist::family_name() const {
    switch (family_) {
        case Family::deterministic: return "deterministic";
        case Family::geometric: return "geometric";
        case Family::uniform: return "uniform";
        case Family::explicit_pmf: return "explicit";
    }
    return "unknown";
}

std::string DiscreteDist::describe() const {
    switch (family_) {
        case Family::deterministic: return fmt::format("deterministic({})", min_);
        case Family::geometric: return fmt::format("geometric({:g})", p_);
        case Family::uniform: return fmt::format("uniform({},{})", min_, max_);
        case Family::explicit_pmf: {
            std::string s = "explicit(";
            bool first = true;
            for (const auto& [v, prob] : support()) {
                s += fmt::format("{}{}:{:g}", first ? "" : ",", v, prob);
                first = false;
            }
            return s + ")";
        }
    }
    return "unknown";
}

double DiscreteDist::pmf(Slots k) const {
    if (k < min_) return 0.0;
    if (family_ == Family::geometric)
        return p_ * std::pow(1.0 - p_, static_cast<double>(k - 1));
    if (k > max_) return 0.0;
    return probs_[static_cast<std::size_t>(k - min_)];
}

double DiscreteDist::survival(Slots k) const {
    if (k < min_) return 1.0;
    if (family_ == Family::geometric) return std::pow(1.0 - p_, static_cast<double>(k));
    if (k >= max_) return tail_mass_;
    return std::max(0.0, 1.0 - cdf_[static_cast<std::size_t>(k - min_)]);
}

double DiscreteDist::pgf(double x) const {
    if (!(x >= 0.0 && x <= 1.0))
        throw InvalidArgument(fmt::format("pgf: argument {} outside [0,1]", x));
    if (family_ == Family::geometric) return p_ * x / (1.0 - (1.0 - p_) * x);
    double acc = 0.0;
    double power = std::pow(x, static_cast<double>(min_));
    for (double prob : probs_) {
        acc += prob * power;
        power *= x;
    }
    return acc;
}

double DiscreteDist::pgf_derivative(double x) const {
    if (!(x >= 0.0 && x <= 1.0))
        throw InvalidArgument(fmt::format("pgf_derivative: argument {} outside [0,1]", x));
    if (family_ == Family::geometric) {
        const double denom = 1.0 - (1.0 - p_) * x;
        return p_ / (denom * denom);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        const Slots k = min_ + static_cast<Slots>(i);
        acc += static_cast<double>(k) * probs_[i] * std::pow(x, static_cast<double>(k - 1));
    }
    return acc;
}

Slots DiscreteDist::sample(std::mt19937_64& rng) const {
    switch (family_) {
        case Family::deterministic:
            return min_;
        case Family::geometric: {
            const double u = uniform01(rng);
            if (p_ == 1.0) return 1;
            // P(K > k) = (1-p)^k; invert with 1-u in (0,1].
            return static_cast<Slots>(std::floor(std::log1p(-u) / std::log1p(-p_))) + 1;
        }
        case Family::uniform: {
            const double u = uniform01(rng);
            return min_ + static_cast<Slots>(u * static_cast<double>(max_ - min_ + 1));
        }
        case Family::explicit_pmf: {
            // Mass beyond the stored support maps to the last stored point.
            const double u = uniform01(rng) * (1.0 - tail_mass_);
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            if (it == cdf_.end()) --it;
            while (it != cdf_.begin() && probs_[static_cast<std::size_t>(it - cdf_.begin())] == 0.0) --it;
            return min_ + static_cast<Slots>(it - cdf_.begin());
        }
    }
    return min_;
}

std::vector<std::pair<Slots, double>> DiscreteDist::support() const {
    std::vector<std::pair<Slots, double>> out;
    if (family_ == Family::geometric) {
        for (Slots k = 1; k <= max_; ++k) out.emplace_back(k, pmf(k));
        return out;
    }
    for (std::size_t i = 0; i < probs_.size(); ++i)
        if (probs_[i] > 0.0) out.emplace_back(min_ + static_cast<Slots>(i), probs_[i]);
    return out;
}

}  // namespace aoi
