#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace etdgrid {

// Finalizer from splitmix64. Full-avalanche mix of a 64-bit value.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and up to three tags.
// Pure function of its arguments, so derived streams do not depend on the
// order in which they are created.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag0,
                                 std::uint64_t tag1 = 0, std::uint64_t tag2 = 0) {
    std::uint64_t h = seed + 0x9e3779b97f4a7c15ULL;
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (tag0 + 1));
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (tag1 + 1));
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (tag2 + 1));
    return h;
}

// xoshiro256** with an explicit, serializable state. All randomness in the
// project flows through this generator so that runs are reproducible from a
// seed alone, independent of the standard library implementation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            word = mix64(x);
        }
        state_[0] |= 1; // the all-zero state is invalid for xoshiro
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint32_t next_below(std::uint32_t n) {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 64);
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached
    // second value, so the stream position is a pure function of draw count.
    double normal() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::array<std::uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

// One standard-normal draw from a counter-derived stream. Used where noise
// must be addressable per index (series hour, forecast origin/horizon), so
// generation order and parallel evaluation cannot change the result.
inline double seeded_normal(std::uint64_t seed, std::uint64_t tag0, std::uint64_t tag1 = 0,
                            std::uint64_t tag2 = 0) {
    Rng rng(derive_seed(seed, tag0, tag1, tag2));
    return rng.normal();
}

} // namespace etdgrid
