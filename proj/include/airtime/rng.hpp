#ifndef AIRTIME_RNG_HPP
#define AIRTIME_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace airtime {

/// Deterministic counter-based generator (SplitMix64).
///
/// The i-th raw output is mix64(state0 + (i+1) * 0x9E3779B97F4A7C15) where
/// state0 is derived from the seed (and an optional stream id), so every
/// consumer that documents its stream id draws an independent, reproducible
/// sequence. No global state, no platform-dependent distributions.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : state_(mix64(seed ^ 0xA0761D6478BD642FULL)) {}

    /// Independent substream: same seed + same stream id => same sequence.
    static CounterRng stream(std::uint64_t seed, std::uint64_t stream_id) {
        CounterRng rng(seed);
        rng.state_ = mix64(rng.state_ ^ mix64(stream_id ^ 0xE7037ED1A0B428DBULL));
        return rng;
    }

    /// Substream named by a string (hashed with FNV-1a 64).
    static CounterRng stream(std::uint64_t seed, std::string_view name) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return stream(seed, h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace airtime

#endif
