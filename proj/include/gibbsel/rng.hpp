#pragma once

#include <cstdint>
#include <random>

namespace gibbsel {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Stream tags separate generators that share (seed, index).
enum class StreamTag : std::uint64_t {
    record = 0,
    ancillary = 1,
    experiment = 2,
};

/// Independent generator for record `index` of a run seeded by `master_seed`.
/// The result depends only on its arguments, so records can be produced in
/// any order or concurrently.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t index,
                       StreamTag tag = StreamTag::record)
{
    const std::uint64_t a = detail::splitmix64(master_seed);
    const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(index + 1));
    const std::uint64_t c = detail::splitmix64(b ^ static_cast<std::uint64_t>(tag));
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace gibbsel
