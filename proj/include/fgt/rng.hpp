#pragma once

#include <cstdint>
#include <random>

#include "fgt/matrix.hpp"

namespace fgt {

/// Maps one 64-bit draw to [0, 1) with 53 bits of mantissa. Avoids
/// std::uniform_real_distribution so the value sequence is the same on every
/// standard library (mt19937_64 output itself is specified by the standard).
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

/// Row-major fill; the draw order is part of the format for seeded weights.
inline Mat random_matrix(std::size_t rows, std::size_t cols, double lo, double hi,
                         std::mt19937_64& gen) {
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = uniform(gen, lo, hi);
    return m;
}

}  // namespace fgt
