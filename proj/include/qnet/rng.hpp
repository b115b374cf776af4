#pragma once

#include <cmath>
#include <cstdint>

namespace qnet {

/// SplitMix64 (Steele, Lea & Flood 2014). Fully specified 64-bit generator:
/// a fixed seed reproduces the same stream on every platform, which is what
/// the simulation oracle needs. The seed is the initial state.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Exponential variate by inverse transform; 1-u keeps the log argument
    /// in (0, 1].
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
};

}  // namespace qnet
