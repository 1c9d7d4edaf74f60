#pragma once

#include <cstdint>

namespace retseg {

// Deterministic splitmix64 generator. Identical sequences on every platform,
// unlike the distributions in <random>.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 significant bits.
    double next_double();

    // Uniform integer in [lo, hi] inclusive.
    long next_int(long lo, long hi);

    // Standard normal via Box-Muller.
    double next_normal();

    // Independent child stream; deterministic in (state, stream).
    Rng fork(std::uint64_t stream) const;

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace retseg
