#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <Eigen/Core>
#include <Eigen/LU>

#include "permcmc/importance.hpp"
#include "permcmc/unit_interval.hpp"

namespace permcmc::testing {

/// Pearson chi-square goodness-of-fit p-value.
inline double chi_square_p(const Eigen::VectorXd& counts, const Eigen::VectorXd& probabilities) {
  const double n = counts.sum();
  const double stat = ((counts - n * probabilities).array().square() / (n * probabilities.array())).sum();
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Kolmogorov-Smirnov statistic of a sample against Uniform(0, 1).
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1) / n - xs[i], xs[i] - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic 0.001 critical value of the KS statistic.
inline double ks_critical_001(std::size_t n) { return 1.94947 / std::sqrt(static_cast<double>(n)); }

// Mixture density of the improved importance sampler, computed without the
// inverse map. For each start index k the composition of steps k..M-1 is
// inverted by searching the whole extended space (a grid in (r, u) for every
// x, then Newton steps), and the base mass is divided by the Jacobian of the
// composition at the preimage. The result is expressed relative to the
// target, so it is directly comparable with rho_ddot.

namespace detail {

inline GeneralExtState<double> compose(const DiscreteKernelMap& map, GeneralExtState<double> z, Index from) {
  for (Index j = from; j < map.steps(); ++j) z = map.forward(z, j);
  return z;
}

inline Eigen::Vector2d residual(const GeneralExtState<double>& got, const GeneralExtState<double>& want) {
  return {got.r - want.r, circular_difference(got.u, want.u)};
}

// Jacobian of (r, u) -> (r', u') by central differences; empty if the
// stencil leaves the branch.
inline std::optional<Eigen::Matrix2d> jacobian(const DiscreteKernelMap& map, const GeneralExtState<double>& z0,
                                               Index from, double h) {
  const auto base = compose(map, z0, from);
  Eigen::Matrix2d J;
  for (int c = 0; c < 2; ++c) {
    auto lo = z0, hi = z0;
    (c == 0 ? lo.r : lo.u) -= h;
    (c == 0 ? hi.r : hi.u) += h;
    if (lo.r < 0 || hi.r >= 1 || lo.u < 0 || hi.u >= 1) return std::nullopt;
    const auto a = compose(map, lo, from), b = compose(map, hi, from);
    if (a.x != base.x || b.x != base.x) return std::nullopt;
    const Eigen::Vector2d left = residual(base, a), right = residual(b, base);
    if ((left - right).norm() > 1e-6 * (left.norm() + right.norm()) + 1e-13) return std::nullopt;
    J.col(c) = (left + right) / (2 * h);
  }
  return J;
}

// Density, relative to (counting x dr x du), of the base pushed through
// steps from..M-1, at z.
inline double pushed_density(const DiscreteKernelMap& map, const DiscreteBase& base,
                             const GeneralExtState<double>& z, Index from) {
  if (from == map.steps()) return base.probabilities()(z.x);
  constexpr int grid = 200;
  constexpr double h = 1e-6;
  std::vector<std::pair<double, GeneralExtState<double>>> candidates;
  for (Index x = 0; x < map.kernel().size(); ++x) {
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        const GeneralExtState<double> z0{x, (i + 0.5) / grid, (j + 0.5) / grid};
        const auto out = compose(map, z0, from);
        if (out.x == z.x) candidates.emplace_back(residual(out, z).norm(), z0);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t tries = std::min<std::size_t>(candidates.size(), 200);
  for (std::size_t c = 0; c < tries; ++c) {
    GeneralExtState<double> z0 = candidates[c].second;
    for (int it = 0; it < 8; ++it) {
      const auto J = jacobian(map, z0, from, h);
      if (!J) break;
      const Eigen::Vector2d step = J->inverse() * residual(compose(map, z0, from), z);
      z0.r -= step(0);
      z0.u = wrap_unit(z0.u - step(1));
      if (z0.r < 0 || z0.r >= 1) break;
      const auto out = compose(map, z0, from);
      if (out.x == z.x && residual(out, z).norm() < 1e-13) {
        const auto Jz = jacobian(map, z0, from, h);
        if (!Jz) break;
        return base.probabilities()(z0.x) / std::abs(Jz->determinant());
      }
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

inline double brute_force_rho_ddot(const DiscreteKernelMap& map, const DiscreteBase& base,
                                   const GeneralExtState<double>& z) {
  const Index m = map.steps();
  double total = 0;
  for (Index k = 0; k <= m; ++k) total += detail::pushed_density(map, base, z, k);
  const Eigen::VectorXd pi = map.kernel().target().normalized();
  return total / static_cast<double>(m + 1) / pi(z.x);
}

}  // namespace permcmc::testing
