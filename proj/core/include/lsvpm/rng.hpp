#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace lsvpm::rng {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream ids. Every random number in the library is a pure function of
/// (seed, stream, particle, counter), so draws do not depend on scheduling.
enum class Stream : std::uint64_t {
    Brownian = 1,
    InitialState = 2,
    Bootstrap = 3,
};

/// Counter-based standard normal source for one (seed, stream, particle) triple.
class NormalStream {
public:
    constexpr NormalStream(std::uint64_t seed, Stream stream, std::uint64_t particle)
        : key_(mix64(mix64(mix64(seed) ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL)) ^
                     (particle + 0x8cb92ba72f3d8dd7ULL))) {}

    /// Two independent N(0,1) draws for counter c (Box-Muller on two hashed uniforms).
    [[nodiscard]] std::pair<double, double> normal_pair(std::uint64_t c) const {
        const std::uint64_t b1 = mix64(key_ ^ mix64(2 * c));
        const std::uint64_t b2 = mix64(key_ ^ mix64(2 * c + 1));
        const double u1 = static_cast<double>((b1 >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;        // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    [[nodiscard]] double uniform(std::uint64_t c) const {
        return static_cast<double>(mix64(key_ ^ mix64(c)) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
};

}  // namespace lsvpm::rng
