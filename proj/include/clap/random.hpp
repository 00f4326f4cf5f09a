#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace clap {

// Unbiased draw in [0, n). std::uniform_int_distribution is implementation
// defined, which would make seeded subsets differ across standard libraries.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % n);
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = bounded_draw(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

// 53-bit uniform double in [0, 1).
inline double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace clap
