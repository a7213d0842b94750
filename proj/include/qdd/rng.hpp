#pragma once

// Deterministic sampling helpers. All randomness flows through mt19937_64,
// whose output sequence is fixed by the standard; the std::* distributions
// are implementation-defined, so we provide our own. This keeps replayed
// runs bit-identical and lets checkpoints carry the engine state verbatim.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace qdd {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 bits of entropy.
inline double uniform_real(Rng& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_real(rng);
}

/// Uniform integer in [lo, hi], inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
    return lo + int(rng() % std::uint64_t(hi - lo + 1));
}

/// Standard normal via Box-Muller, no cached second value.
inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
    double u1;
    do {
        u1 = uniform_real(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform_real(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::string rng_state_string(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline Rng rng_from_state(const std::string& state) {
    Rng rng;
    std::istringstream is(state);
    is >> rng;
    return rng;
}

}  // namespace qdd
