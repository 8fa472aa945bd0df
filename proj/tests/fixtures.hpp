// Shared test builders.
#pragma once

#include <cmath>
#include <cstddef>

#include "rnngen/linalg.hpp"

namespace fixtures {

// Sylvester Hadamard matrix of order n (power of two), scaled to be orthogonal.
inline rnngen::Matrix hadamard_orthogonal(std::size_t n) {
  rnngen::Matrix h(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = (__builtin_popcountll(i & j) % 2 ? -s : s);
  return h;
}

// A 128×128 matrix with spectral norm 2.6801, Frobenius norm 13.6823 and
// (2,1) norm 154.5439.
//
// M = diag(σ)·H·R(τ): σ has 26 entries 2.6801 and one filler on even rows,
// H is Hadamard, R rotates column pairs (2k, 2k+1) by τ. On even rows the
// paired Hadamard columns agree, so the column norms come out as
// F/√128·(cos τ ± sin τ) and the (2,1) norm is √128·F·cos τ.
inline rnngen::Matrix reference_operating_point() {
  constexpr std::size_t n = 128;
  constexpr double top = 2.6801, frob = 13.6823, two_one = 154.5439;
  const double filler = std::sqrt(frob * frob - 26 * top * top);
  rnngen::Matrix S(n, n);
  for (std::size_t i = 0; i < 26; ++i) S(2 * i, 2 * i) = top;
  S(52, 52) = filler;
  const double tau = std::acos(two_one / (std::sqrt(static_cast<double>(n)) * frob));
  rnngen::Matrix R(n, n);
  for (std::size_t k = 0; k < n; k += 2) {
    R(k, k) = std::cos(tau);
    R(k + 1, k) = std::sin(tau);
    R(k, k + 1) = -std::sin(tau);
    R(k + 1, k + 1) = std::cos(tau);
  }
  return S * hadamard_orthogonal(n) * R;
}

}  // namespace fixtures
