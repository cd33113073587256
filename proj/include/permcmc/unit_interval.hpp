#pragma once

#include <cmath>
#include <limits>

namespace permcmc {

/// Largest representable value strictly below one.
template <typename Scalar = double>
inline Scalar below_one() {
  return std::nextafter(Scalar(1), Scalar(0));
}

/// Fractional part v - floor(v), forced into [0, 1).
///
/// Rounding can make the fractional part of a value just below an integer
/// come out as exactly 1; those results are pulled down to below_one().
template <typename Scalar>
inline Scalar wrap_unit(Scalar v) {
  const Scalar w = v - std::floor(v);
  return w < Scalar(1) ? w : below_one<Scalar>();
}

/// Clamp a quantity that is mathematically in [0, 1) back into range.
template <typename Scalar>
inline Scalar clamp_unit(Scalar v) {
  if (v < Scalar(0)) return Scalar(0);
  return v < Scalar(1) ? v : below_one<Scalar>();
}

/// Signed distance between two points of the circle [0, 1), in [-1/2, 1/2).
template <typename Scalar>
inline Scalar circular_difference(Scalar a, Scalar b) {
  const Scalar d = a - b;
  return d - std::floor(d + Scalar(0.5));
}

}  // namespace permcmc
