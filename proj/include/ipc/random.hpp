#pragma once

#include <cstdint>
#include <random>

namespace ipc {

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream purposes. Each trial draws from independent substreams so that
/// input data and reservoir weights never share random numbers.
enum class StreamPurpose : std::uint32_t {
    input = 1,
    reservoir = 2,
    initial_state = 3,
};

/// Derives the seed of substream (length, index) under a base seed.
///
/// The pair is packed into one 64-bit word before the final mix, so for a
/// fixed base seed distinct (length, index) pairs below 2^32 map to distinct
/// seeds (mix64 is invertible).
constexpr std::uint64_t substream_seed(std::uint64_t base_seed, StreamPurpose purpose,
                                       std::uint32_t length, std::uint32_t index) noexcept
{
    const std::uint64_t key = mix64(base_seed ^ mix64(static_cast<std::uint64_t>(purpose)));
    const std::uint64_t packed = (static_cast<std::uint64_t>(length) << 32) | index;
    return mix64(key ^ packed);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

} // namespace ipc
