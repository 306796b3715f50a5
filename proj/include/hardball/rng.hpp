#pragma once

// Counter-based random number primitives. Every draw is a pure function of a
// small integer key, so streams can be evaluated out of order, in parallel,
// or replayed after a partial re-simulation without any generator state.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace hardball::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Hash an ordered key tuple into one 64-bit word.
inline std::uint64_t key_hash(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x853c49e6748fea9bULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ p);
    return h;
}

/// Map a 64-bit word to (0,1); never returns 0 or 1 exactly.
inline double to_unit_interval(std::uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// Standard normal draw keyed by (seed, a, b, c, d). Box-Muller on two
/// hashed uniforms; deterministic for a fixed key.
inline double standard_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c, std::uint64_t d) {
    const double u1 = to_unit_interval(key_hash({seed, a, b, c, d, 0}));
    const double u2 = to_unit_interval(key_hash({seed, a, b, c, d, 1}));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential engine for Monte-Carlo chains (Metropolis sweeps and the like).
class Sequence {
public:
    explicit Sequence(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double uniform() { return to_unit_interval(engine_()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        std::normal_distribution<double> n(0.0, 1.0);
        return n(engine_);
    }

    std::uint64_t integer() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace hardball::rng
