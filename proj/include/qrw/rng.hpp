#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace qrw {

/// Deterministic splittable PRNG. Every random decision in the project
/// draws from a stream derived from (seed, stream name), so pipelines are
/// reproducible regardless of evaluation order or thread scheduling.
/// Core generator is splitmix64; stream names are hashed with FNV-1a.
class Rng {
  public:
    Rng(uint64_t seed, uint64_t stream) : state_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

    Rng(uint64_t seed, std::string_view stream_name) : Rng(seed, fnv1a(stream_name)) {}

    /// Derive an independent child stream; the parent state is unaffected.
    Rng split(std::string_view child_name) const {
        return Rng(state_, fnv1a(child_name));
    }

    Rng split(uint64_t child_id) const { return Rng(state_, child_id); }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    uint64_t below(uint64_t bound) {
        // Lemire's multiply-shift with rejection for unbiased draws.
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto lo = static_cast<uint64_t>(m);
        if (lo < bound) {
            uint64_t threshold = (0ULL - bound) % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Standard normal via Box-Muller (no cached spare; keeps state replayable).
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

  private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t state_;
};

}  // namespace qrw
