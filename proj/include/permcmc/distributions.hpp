#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "permcmc/error.hpp"

namespace permcmc {

template <typename Scalar>
inline Scalar normal_pdf(Scalar z) {
  return std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
inline Scalar normal_cdf(Scalar z) {
  return std::erfc(-z / std::numbers::sqrt2_v<Scalar>) / 2;
}

/// Upper tail 1 - Phi(z), accurate far into the right tail.
template <typename Scalar>
inline Scalar normal_sf(Scalar z) {
  return std::erfc(z / std::numbers::sqrt2_v<Scalar>) / 2;
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation followed by one Halley step, which brings
/// the relative error down to a few ulps over (0, 1).
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
  if (p <= 0) return -std::numeric_limits<Scalar>::infinity();
  if (p >= 1) return std::numeric_limits<Scalar>::infinity();

  constexpr Scalar a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                          1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr Scalar b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                          6.680131188771972e+01,  -1.328068155288572e+01};
  constexpr Scalar c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                          -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr Scalar d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                          3.754408661907416e+00};
  constexpr Scalar p_low = 0.02425;

  Scalar z;
  if (p < p_low) {
    const Scalar q = std::sqrt(-2 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - p_low) {
    const Scalar q = std::sqrt(-2 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const Scalar q = p - Scalar(0.5);
    const Scalar r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }

  // Halley refinement; the residual is taken on the smaller tail.
  const Scalar e = z <= 0 ? normal_cdf(z) - p : (1 - p) - normal_sf(z);
  const Scalar step = e * std::sqrt(2 * std::numbers::pi_v<Scalar>) * std::exp(z * z / 2);
  return z - step / (1 + z * step / 2);
}

/// Rightmost x in [lo, hi] with cdf(x) <= u, found by bisection.
///
/// On flat stretches of the CDF this returns the largest preimage, which is
/// the convention the inverse continuous maps rely on.
template <typename Scalar, typename Cdf>
Scalar invert_cdf_bisect(const Cdf& cdf, Scalar u, Scalar lo, Scalar hi) {
  if (!(lo < hi)) throw InversionFailure("CDF inversion needs a non-empty bracket");
  for (int iter = 0; iter < 200; ++iter) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) <= u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

/// Normal(mean, sd) restricted to the open interval (lower, upper).
///
/// density() is unnormalized (exp(-z^2/2) inside the support, 0 outside).
/// The CDF is evaluated on whichever tail keeps the subtraction well
/// conditioned, and the inverse starts from the closed form and is then
/// polished with safeguarded Newton steps to 1e-12 in u.
template <typename Scalar = double>
class TruncatedNormalLaw {
 public:
  TruncatedNormalLaw(Scalar mean, Scalar sd, Scalar lower, Scalar upper)
      : mean_(mean), sd_(sd), lower_(lower), upper_(upper) {
    if (!(sd > 0) || !(lower < upper)) {
      throw InvalidKernel("truncated normal needs sd > 0 and lower < upper");
    }
    alpha_ = (lower - mean) / sd;
    beta_ = (upper - mean) / sd;
    upper_tail_ = alpha_ > 0;
    mass_ = upper_tail_ ? normal_sf(alpha_) - normal_sf(beta_) : normal_cdf(beta_) - normal_cdf(alpha_);
    if (!(mass_ > 0)) throw InvalidKernel("truncation interval carries no probability");
  }

  Scalar mean() const { return mean_; }
  Scalar sd() const { return sd_; }
  Scalar lower() const { return lower_; }
  Scalar upper() const { return upper_; }

  Scalar density(Scalar x) const {
    if (!(x > lower_ && x < upper_)) return 0;
    const Scalar z = (x - mean_) / sd_;
    return std::exp(-z * z / 2);
  }

  Scalar cdf(Scalar x) const {
    if (x <= lower_) return 0;
    if (x >= upper_) return 1;
    const Scalar z = (x - mean_) / sd_;
    const Scalar v = upper_tail_ ? (normal_sf(alpha_) - normal_sf(z)) / mass_
                                 : (normal_cdf(z) - normal_cdf(alpha_)) / mass_;
    return std::clamp(v, Scalar(0), Scalar(1));
  }

  Scalar inv_cdf(Scalar u) const {
    Scalar z = upper_tail_ ? -normal_quantile(normal_sf(alpha_) - u * mass_)
                           : normal_quantile(normal_cdf(alpha_) + u * mass_);
    Scalar x = std::clamp(mean_ + sd_ * z, lower_, upper_);

    Scalar lo = lower_;
    Scalar hi = upper_;
    for (int iter = 0; iter < 60; ++iter) {
      const Scalar g = cdf(x) - u;
      if (g <= 0) {
        lo = std::max(lo, x);
      } else {
        hi = std::min(hi, x);
      }
      if (g == 0) break;
      const Scalar slope = density(x) / (sd_ * mass_ * std::sqrt(2 * std::numbers::pi_v<Scalar>));
      Scalar next = slope > 0 ? x - g / slope : lo + (hi - lo) / 2;
      if (!(next > lo && next < hi)) next = lo + (hi - lo) / 2;
      const bool converged =
          std::abs(next - x) <= 4 * std::numeric_limits<Scalar>::epsilon() * (1 + std::abs(x));
      x = next;
      if (converged) break;
    }
    return open_support(x);
  }

 private:
  Scalar open_support(Scalar x) const {
    if (x <= lower_) return std::nextafter(lower_, upper_);
    if (x >= upper_) return std::nextafter(upper_, lower_);
    return x;
  }

  Scalar mean_, sd_, lower_, upper_;
  Scalar alpha_ = 0, beta_ = 0, mass_ = 1;
  bool upper_tail_ = false;
};

/// Untruncated normal law on the whole line.
template <typename Scalar = double>
class NormalLaw {
 public:
  NormalLaw(Scalar mean, Scalar sd) : mean_(mean), sd_(sd) {
    if (!(sd > 0)) throw InvalidKernel("normal law needs sd > 0");
  }
  Scalar lower() const { return -std::numeric_limits<Scalar>::infinity(); }
  Scalar upper() const { return std::numeric_limits<Scalar>::infinity(); }
  Scalar density(Scalar x) const {
    const Scalar z = (x - mean_) / sd_;
    return std::exp(-z * z / 2);
  }
  Scalar cdf(Scalar x) const { return normal_cdf((x - mean_) / sd_); }
  Scalar inv_cdf(Scalar u) const { return mean_ + sd_ * normal_quantile(u); }

 private:
  Scalar mean_, sd_;
};

/// Exponential(rate) on (0, inf).
template <typename Scalar = double>
class ExponentialLaw {
 public:
  explicit ExponentialLaw(Scalar rate = 1) : rate_(rate) {
    if (!(rate > 0)) throw InvalidKernel("exponential law needs rate > 0");
  }
  Scalar lower() const { return 0; }
  Scalar upper() const { return std::numeric_limits<Scalar>::infinity(); }
  Scalar density(Scalar x) const { return x > 0 ? std::exp(-rate_ * x) : Scalar(0); }
  Scalar cdf(Scalar x) const { return x > 0 ? -std::expm1(-rate_ * x) : Scalar(0); }
  Scalar inv_cdf(Scalar u) const { return -std::log1p(-u) / rate_; }

 private:
  Scalar rate_;
};

}  // namespace permcmc
