#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace roadsound::rng {

// 53-bit mantissa draw in [0,1); avoids distribution implementation differences.
inline double uniform_unit(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(g);
}

// Fisher-Yates with explicit index draws; std::shuffle leaves the draw order
// up to the implementation, which would break cross-platform reproducibility.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(g() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace roadsound::rng
