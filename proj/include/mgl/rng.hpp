#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace mgl {

// Substream tags, so different purposes sharing a base seed never replay
// each other's draws. Small offsets (layer or view indices) are added on top.
namespace stream {
inline constexpr std::uint64_t noise = 1;            // + layer index
inline constexpr std::uint64_t encoder_init = 1u << 20;  // + view index
inline constexpr std::uint64_t kmeans = 2u << 20;
inline constexpr std::uint64_t oos = 3u << 20;
inline constexpr std::uint64_t eval_split = 4u << 20;
}  // namespace stream

// Deterministic pseudorandom generator: xoshiro256++ (Blackman & Vigna),
// state seeded through splitmix64. All draws are derived from raw 64-bit
// outputs, never from <random> distributions (whose results are
// implementation-defined), so a given seed produces the same sequence on
// every platform and in every run.
class Rng {
public:
    // `stream` selects an independent substream of the same base seed,
    // used for per-layer / per-restart reproducibility.
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t x = seed;
        (void)splitmix64(x);
        x ^= stream * 0xd1b54a32d192ed03ULL;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform draw in [0, 1), 53 mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Unbiased integer in [0, n), n >= 1.
    int uniform_int(int n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return static_cast<int>(x % bound);
        }
    }

    // Standard normal via Box-Muller (two uniforms per pair, cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]; keeps log() finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::vector<double> uniform_vec(int n) {
        std::vector<double> out(static_cast<std::size_t>(n));
        for (auto& v : out) v = uniform();
        return out;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mgl
