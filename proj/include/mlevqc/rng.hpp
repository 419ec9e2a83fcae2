#pragma once

#include <cstdint>
#include <limits>

namespace mlevqc {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for the `index`-th sub-stream of `parent`.
///
/// This is the only seed-splitting rule in the project: tasks, restarts and
/// samples all derive their seeds through it, so any recorded seed can be
/// reproduced from the master seed and the index path.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(parent) ^ splitmix64(~index));
}

/**
 * @brief Counter-based random bit generator.
 *
 * Output i is a keyed hash of the counter i, so the stream is a pure
 * function of (seed, position). Satisfies UniformRandomBitGenerator and can
 * be handed to the <random> distributions.
 */
class CounterRng {
  public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t seed) noexcept
        : seed_{seed}, key_{splitmix64(seed ^ 0x6A09E667F3BCC909ULL)} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        return splitmix64(key_ + 0xD1B54A32D192ED03ULL * ++counter_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] constexpr std::uint64_t position() const noexcept { return counter_; }

    [[nodiscard]] constexpr CounterRng split(std::uint64_t index) const noexcept {
        return CounterRng{derive_seed(seed_, index)};
    }

  private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace mlevqc
