#pragma once

#include <cstdint>
#include <random>

namespace lrc {

// Independent, reproducible random streams derived from one user seed.
enum class Stream : std::uint64_t {
    Bits = 1,
    Rin = 2,
    Detector = 3,
    Ase = 4,
    ReservoirInit = 5,
    ReservoirNoise = 6,
    Mask = 7,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t sub = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(sub),
                      static_cast<std::uint32_t>(sub >> 32)};
    return std::mt19937_64(seq);
}

} // namespace lrc
