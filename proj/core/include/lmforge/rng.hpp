#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace lmforge {

/// Deterministic 64-bit PRNG (splitmix64 core). Used everywhere instead of
/// <random> engines so that streams are reproducible across standard
/// libraries and so that per-record substreams can be derived cheaply.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    uint64_t uniform_u64(uint64_t bound) {
        // Rejection-free modulo is biased for huge bounds; bounds here are
        // tiny (vocab sizes, list lengths), so 128-bit scaling is exact enough.
        return static_cast<uint64_t>(uniform() * static_cast<double>(bound)) % bound;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Avoid log(0).
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Derived independent stream; same (seed, tag) always yields the same
    /// stream regardless of how much the parent has been consumed.
    Rng derive(uint64_t tag) const {
        uint64_t mixed = state_ ^ (0x9e3779b97f4a7c15ULL * (tag + 0x632be59bd9b4e019ULL));
        Rng child(mixed);
        child.next_u64();
        return child;
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// FNV-1a; stable across platforms. Combines a global seed with a record
/// identifier to derive order-independent per-record streams.
inline uint64_t hash_seed(uint64_t seed, std::string_view id) {
    uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h ^= seed * 0x9e3779b97f4a7c15ULL;
    return h;
}

inline Rng record_rng(uint64_t seed, std::string_view id) {
    return Rng(hash_seed(seed, id));
}

inline Rng record_rng(uint64_t seed, uint64_t index) {
    return Rng(hash_seed(seed, std::to_string(index)));
}

} // namespace lmforge
