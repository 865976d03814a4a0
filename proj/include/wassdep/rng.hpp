#pragma once

#include <cstdint>

#include "wassdep/normal.hpp"

namespace wassdep {

/// Counter-based pseudo-random generator (SplitMix64 core). Each stream is a
/// pure function of (seed, counter), so substreams keyed by replication index
/// are independent of thread scheduling and re-runs are bit-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9E3779B97F4A7C15ull)) {}

    /// Substream for replication `index` under master seed `seed`.
    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        Rng r(0);
        r.state_ = mix(mix(seed) ^ mix(0xD1B54A32D192ED03ull * (index + 1)));
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform on the open interval (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    /// Standard normal deviate by inversion.
    double next_normal() { return qnorm(next_uniform()); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace wassdep
