#pragma once

#include <cstdint>

namespace keplerdm {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream: draw i of stream s under seed g is a pure function of
// (g, s, i), so results do not depend on how trajectories are scheduled.
class CounterStream {
public:
    constexpr CounterStream(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(mix64(seed) ^ (stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const {
        return mix64(key_ ^ mix64(counter));
    }

    // Uniform in [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t counter) const {
        return double(bits(counter) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
};

}  // namespace keplerdm
