#pragma once

#include <cmath>
#include <cstdint>

namespace cograte::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based stream: every (slot, draw) pair maps to one fixed 64-bit
/// value, so any slot can be regenerated without replaying the ones before it.
class CounterRng {
public:
    static constexpr std::uint64_t kDrawsPerSlot = 16;

    explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t slot, std::uint64_t draw) const {
        return mix(seed_ + (slot * kDrawsPerSlot + draw + 1) * kGolden);
    }

    /// Uniform on [0, 1) with 53 random bits.
    [[nodiscard]] double uniform(std::uint64_t slot, std::uint64_t draw) const {
        return static_cast<double>(bits(slot, draw) >> 11) * 0x1.0p-53;
    }

    /// Exponential with the given mean.
    [[nodiscard]] double exponential(std::uint64_t slot, std::uint64_t draw, double mean) const {
        return -mean * std::log1p(-uniform(slot, draw));
    }

    [[nodiscard]] constexpr std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// Seed of replication k; replication 0 keeps the base seed.
constexpr std::uint64_t replication_seed(std::uint64_t base, std::uint64_t k) {
    return k == 0 ? base : mix(base + k * kGolden);
}

}  // namespace cograte::rng
