#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "gqmp/hermitian.hpp"

namespace gqmp {

// Deterministic, counter-based random numbers. Every draw is a pure function
// of (seed, stream, index), so Monte Carlo loops can run in any order — or in
// parallel — and still reproduce byte-identical results.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

// Uniform double in (0, 1]; never returns 0 so it is safe under log().
inline double uniform_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t x = splitmix64(derive_seed({seed, stream, index}));
  return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

// Standard complex Gaussian CN(0, 1) by Box-Muller: unit variance split
// evenly between real and imaginary parts.
inline Complex complex_gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = uniform_unit(seed, stream, 2 * index);
  const double u2 = uniform_unit(seed, stream, 2 * index + 1);
  const double r = std::sqrt(-std::log(u1));  // radius for variance 1/2 per part
  const double phi = 2.0 * M_PI * u2;
  return Complex(r * std::cos(phi), r * std::sin(phi));
}

inline Mat gaussian_matrix(int rows, int cols, std::uint64_t seed, std::uint64_t stream = 0) {
  Mat m(rows, cols);
  std::uint64_t k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = complex_gaussian(seed, stream, k++);
  return m;
}

}  // namespace gqmp
