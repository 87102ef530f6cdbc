#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dde {

// splitmix64, used to derive stream seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic PRNG wrapper. std::mt19937_64 output is fully specified by
// the standard; the distributions below are hand-rolled so that identical
// seeds give identical streams on every platform. Independent streams are
// derived from a root seed by splitmix64 hashing of (seed, stream_id), so a
// fixed work partition (by batch index, not by thread) is reproducible
// regardless of thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Child stream for parallel work unit `stream_id`.
    Rng child(std::uint64_t stream_id) const {
        std::uint64_t s = seed_ ^ (0x5851f42d4c957f2dULL * (stream_id + 1));
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer uniform on [0, n) by rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller (cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Sampler for a fixed discrete distribution via CDF inversion.
class DiscreteSampler {
public:
    explicit DiscreteSampler(const std::vector<double>& weights) : cdf_(weights.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            cdf_[i] = acc;
        }
        // Guard against round-off at the top end.
        if (!cdf_.empty()) cdf_.back() = 1.0;
    }

    int operator()(Rng& rng) const {
        const double u = rng.uniform();
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<int>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

}  // namespace dde
