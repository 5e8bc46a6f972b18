#pragma once

#include <cstdint>

namespace spineforge {

// Splittable deterministic generator (splitmix64 core). One 64-bit seed
// streams all randomness in a build; child streams are derived by `split`
// so independent phases draw from disjoint, platform-stable sequences.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Unbiased value in [0, bound).
    uint64_t below(uint64_t bound) {
        if (bound <= 1) return 0;
        uint64_t threshold = (0ull - bound) % bound;
        for (;;) {
            uint64_t v = next();
            if (v >= threshold) return v % bound;
        }
    }

    // Child stream keyed by `tag`; independent of subsequent next() calls.
    Rng split(uint64_t tag) const {
        Rng probe(state_ ^ (0xD1B54A32D192ED03ull * (tag + 1)));
        uint64_t s = probe.next();
        return Rng(s ^ 0x9E3779B97F4A7C15ull);
    }

private:
    uint64_t state_;
};

}  // namespace spineforge
