#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ldp {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Hash an ordered tuple of words into one key.
constexpr std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0x6A09E667F3BCC909ULL;
    for (auto w : words) h = mix64(h ^ mix64(w));
    return h;
}

/// Per-replica (or per-stream) seed derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0xD1B54A32D192ED03ULL));
}

/// Uniform double in [0,1) from the top 53 bits of a word.
constexpr double to_unit(std::uint64_t w) noexcept {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
}

/// Uniform double in (0,1], safe as the argument of log().
constexpr double to_open_unit(std::uint64_t w) noexcept {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

/// Counter-based generator: the n-th output is a pure function of (key, n),
/// so streams can be split and replayed without carrying state around.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0) noexcept
        : key_(mix64(key)), counter_(counter) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

    double uniform() noexcept { return to_unit((*this)()); }
    double open_uniform() noexcept { return to_open_unit((*this)()); }

    /// Standard normal variate (Box-Muller, one output per call pair).
    double normal() noexcept;

    /// Exponential variate with the given rate (> 0).
    double exponential(double rate) noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace ldp
