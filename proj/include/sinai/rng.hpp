#pragma once

#include <cstdint>
#include <limits>

namespace sinai {

// Stateless 64-bit mixing (the SplitMix64 finaliser). Every random quantity
// in the library is a pure function of a key and a counter built on this.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// Value number `counter` of the stream identified by `key`.
constexpr std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(mix64(key ^ 0xD1B54A32D192ED03ULL) + (counter + 1) * kGolden);
}

/// Domain tags keep streams for different purposes independent.
enum class Stream : std::uint64_t {
    Environment = 0x656E76ULL,
    Replica = 0x72706CULL,
    EnvDraw = 0x647277ULL,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept {
    return counter_hash(master ^ mix64(static_cast<std::uint64_t>(stream)), index);
}

/// Uniform double in the open interval (0, 1) from 64 random bits.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Sequential SplitMix64 engine; satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

}  // namespace sinai
