#pragma once

#include <cstdint>
#include <random>

#include "uep/errors.hpp"

namespace uep {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// mt19937_64 with helpers that avoid the implementation-defined std
// distributions, so identical seeds give identical draws on every platform.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // Counter-based split: child streams are decorrelated from the master and
    // from each other, and depend only on (master, stream) values.
    static Rng child(uint64_t master, uint64_t stream) {
        return Rng(splitmix64(splitmix64(master) + stream));
    }

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound), bound >= 1; rejection sampling keeps the draw
    // unbiased.
    uint32_t next_below(uint32_t bound) {
        if (bound == 0) throw ParameterError("Rng::next_below: bound must be positive");
        const uint64_t span = static_cast<uint64_t>(bound);
        const uint64_t residue = (UINT64_MAX % span + 1) % span;
        const uint64_t limit = UINT64_MAX - residue;
        uint64_t r = engine_();
        while (r > limit) r = engine_();
        return static_cast<uint32_t>(r % span);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace uep
