#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace jumpdiff {

// splitmix64 finalizer, used to expand user seeds into Philox keys.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

struct PhiloxState {
    std::array<std::uint32_t, 4> counter;
    std::array<std::uint32_t, 2> key;
};

// One block of Philox4x32-10 (Salmon et al. constants).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

} // namespace detail

// Substream ids for the per-path noise decomposition. Keeping Brownian and
// jump draws on distinct substreams makes W and Z independent by construction
// and lets either be regenerated without the other.
enum class Substream : std::uint64_t {
    brownian = 0,
    jumps = 1,
    generic = 2,
};

/**
 * Counter-based random stream.
 *
 * The stream is a pure function of (master_seed, substream, path_index), so any
 * Monte Carlo path can be regenerated in isolation and results do not depend on
 * scheduling order or on the total number of paths requested. Core generator is
 * Philox4x32-10; the 64-bit block counter lives in counter words 0..1 and the
 * path index in words 2..3.
 */
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, Substream substream, std::uint64_t path_index)
        : block_pos_(4) {
        std::uint64_t k = mix64(master_seed);
        k = mix64(k ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(substream) + 1)));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        counter_ = {0u, 0u,
                    static_cast<std::uint32_t>(path_index),
                    static_cast<std::uint32_t>(path_index >> 32)};
    }

    std::uint32_t next_u32() {
        if (block_pos_ == 4) refill();
        return block_[block_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Uniform on (0, 1]: 53-bit mantissa, never exactly 0 so log() is safe.
    double uniform01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller. The spare value is cached, so draws per
    // call alternate between 2 uniforms and 0; consumption is still a pure
    // function of the call sequence on this stream.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Exact Poisson sampling by inversion (Knuth product form). Large means
    // are split into chunks so exp(-mean) never underflows; the sum of the
    // chunk counts is Poisson(mean) by additivity.
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean))
            throw std::invalid_argument("poisson: mean must be finite and >= 0");
        std::uint64_t total = 0;
        while (mean > 0.0) {
            const double chunk = mean > 500.0 ? 500.0 : mean;
            const double limit = std::exp(-chunk);
            double prod = uniform01();
            std::uint64_t k = 0;
            while (prod > limit) {
                prod *= uniform01();
                ++k;
            }
            total += k;
            mean -= chunk;
        }
        return total;
    }

    double exponential(double rate) {
        if (!(rate > 0.0))
            throw std::invalid_argument("exponential: rate must be > 0");
        return -std::log(uniform01()) / rate;
    }

private:
    void refill() {
        block_ = detail::philox4x32(counter_, key_);
        block_pos_ = 0;
        if (++counter_[0] == 0) ++counter_[1];  // 64-bit block counter
    }

    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> block_{};
    int block_pos_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace jumpdiff
