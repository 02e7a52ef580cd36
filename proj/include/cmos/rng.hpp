#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cmos {

// Seeded randomness for the whole toolkit. mt19937_64 has a fully specified
// output sequence, and all value mappings below are hand-rolled, so results
// are bit-identical across platforms and standard library versions.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a run seed and a purpose tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t extra = 0) {
    return splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ extra);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t extra = 0) {
    return Rng(derive_seed(seed, tag, extra));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Unbiased integer in [0, n) via rejection sampling.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Standard normal draw (Box-Muller, no cached spare so the stream layout
/// stays independent of call history).
inline double gaussian(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// In-place Fisher-Yates shuffle with the portable index sampler.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace cmos
