#pragma once

#include <cstdint>
#include <random>

// All randomness in a run flows from one 64-bit seed.  Sub-streams are
// derived by hashing (seed, stream id, counter) with splitmix64, so a job
// split across workers draws the same numbers as a serial run.

namespace dimer {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic child seed for a named sub-stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    h = splitmix64(h ^ stream);
    h = splitmix64(h ^ counter);
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t counter = 0) {
    return std::mt19937_64(derive_seed(seed, stream, counter));
}

} // namespace dimer
