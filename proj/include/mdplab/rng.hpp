#pragma once

#include <cstdint>

namespace mdplab {

/* Addressing for reproducible random streams.  Every (master_seed,
 * replicate, episode) triple owns an independent stream, so episode k+1
 * never depends on how many draws episode k consumed. */
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::uint64_t episode = 0;
};

/* Counter-based generator in the SplittableRandom family: the state walks
 * a Weyl sequence and each output is a finalizer of the state.  The stream
 * key is derived by hashing the seed triple. */
class StreamRng {
public:
    explicit StreamRng(const SeedSpec& s) {
        std::uint64_t h = mix(s.master_seed + 0x9E3779B97F4A7C15ull);
        h = mix(h ^ (s.replicate + 0xBF58476D1CE4E5B9ull));
        h = mix(h ^ (s.episode + 0x94D049BB133111EBull));
        state_ = h;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /* Uniform double in [0, 1) with 53 random bits. */
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace mdplab
