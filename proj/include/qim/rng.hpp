#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace qim {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// Independent stream domains; a stream is addressed by (seed, domain, index).
enum class StreamDomain : std::uint32_t {
    frame = 0,
    presence_trial = 1,
    test = 0xffff,
};

/// Deterministic random stream keyed by a 64-bit seed and addressed by a
/// 64-bit index within a domain. Two streams with the same address produce
/// identical sequences, so per-frame streams make frame generation
/// independent of how frames are scheduled.
class Rng {
public:
    using result_type = std::uint32_t;

    Rng(std::uint64_t seed, StreamDomain domain, std::uint64_t index) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 4) refill();
        return block_[pos_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1); safe for logarithms.
    double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept;

    double exponential() noexcept { return -std::log(uniform_open()); }

    std::uint64_t poisson(double mean) noexcept;

    /// Number of failures before the first success with success probability
    /// p in (0, 1]; used to skip directly between sparse events.
    std::uint64_t geometric_skip(double p) noexcept;

private:
    void refill() noexcept;

    PhiloxKey key_;
    PhiloxCounter ctr_;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

/// Round half away from zero.
inline long long round_half_away(double v) noexcept { return std::llround(v); }

} // namespace qim
