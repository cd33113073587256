#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "permcmc/discrete_general.hpp"
#include "permcmc/error.hpp"
#include "permcmc/unit_interval.hpp"

namespace permcmc {

/// Type-erased one-dimensional law on an open interval (lower, upper).
///
/// Any type with lower(), upper(), density(x), cdf(x) and inv_cdf(u) can be
/// used directly by the maps below; this wrapper exists for callers that
/// need to choose a law at run time.
template <typename Scalar = double>
class ConditionalLaw {
 public:
  template <typename Law>
  ConditionalLaw(Law law)  // NOLINT(google-explicit-constructor)
      : lower_(law.lower()),
        upper_(law.upper()),
        density_([law](Scalar x) { return law.density(x); }),
        cdf_([law](Scalar x) { return law.cdf(x); }),
        inv_cdf_([law](Scalar u) { return law.inv_cdf(u); }) {}

  Scalar lower() const { return lower_; }
  Scalar upper() const { return upper_; }
  Scalar density(Scalar x) const { return density_(x); }
  Scalar cdf(Scalar x) const { return cdf_(x); }
  Scalar inv_cdf(Scalar u) const { return inv_cdf_(u); }

 private:
  Scalar lower_;
  Scalar upper_;
  std::function<Scalar(Scalar)> density_;
  std::function<Scalar(Scalar)> cdf_;
  std::function<Scalar(Scalar)> inv_cdf_;
};

/// Extended state (x*, u*, y*, v*) for a one-dimensional continuous update,
/// with y* stored as r = y* / pi*(x*).
template <typename Scalar = double>
struct ContExtState {
  Scalar x = 0;
  Scalar u = 0;
  Scalar r = 0;
  Scalar v = 0;
};

/// The (x*, u*) part only, for runs that never look at y* or v*.
template <typename Scalar = double>
struct ContPoint {
  Scalar x = 0;
  Scalar u = 0;
};

/// Volume-preserving map for a kernel with forward CDFs F(x, .) and reverse
/// CDFs Ftilde(x', .):
///   x' = F^{-1}(x, u),  u' = s + Ftilde(x', x),  r' = v,  v' = t + r  (mod 1).
/// `forward_law(x)` and `reverse_law(x')` return the laws.
template <typename Scalar, typename ForwardFamily, typename ReverseFamily>
ContExtState<Scalar> general_forward(const ForwardFamily& forward_law, const ReverseFamily& reverse_law,
                                     const ContExtState<Scalar>& st, Scalar s, Scalar t) {
  ContExtState<Scalar> out;
  out.x = forward_law(st.x).inv_cdf(st.u);
  out.u = wrap_unit(s + reverse_law(out.x).cdf(st.x));
  out.r = st.v;
  out.v = wrap_unit(t + st.r);
  return out;
}

template <typename Scalar, typename ForwardFamily, typename ReverseFamily>
ContExtState<Scalar> general_inverse(const ForwardFamily& forward_law, const ReverseFamily& reverse_law,
                                     const ContExtState<Scalar>& st, Scalar s, Scalar t) {
  ContExtState<Scalar> out;
  out.x = reverse_law(st.x).inv_cdf(wrap_unit(st.u - s));
  out.u = clamp_unit(forward_law(out.x).cdf(st.x));
  out.r = wrap_unit(st.v - t);
  out.v = st.r;
  return out;
}

namespace detail {

template <typename Law, typename Scalar>
void require_support(const Law& law, Scalar x) {
  if (!(law.density(x) > 0)) {
    throw DegenerateLaw("point " + std::to_string(x) + " is outside the support of the conditional law");
  }
}

}  // namespace detail

/// Gibbs update: the independence special case, where the new value ignores
/// the old one and the reverse law equals the forward law.
template <typename Scalar, typename Law>
ContExtState<Scalar> gibbs_forward(const Law& law, const ContExtState<Scalar>& st, Scalar s, Scalar t) {
  detail::require_support(law, st.x);
  const auto same = [&law](Scalar) -> const Law& { return law; };
  return general_forward(same, same, st, s, t);
}

template <typename Scalar, typename Law>
ContExtState<Scalar> gibbs_inverse(const Law& law, const ContExtState<Scalar>& st, Scalar s, Scalar t) {
  detail::require_support(law, st.x);
  const auto same = [&law](Scalar) -> const Law& { return law; };
  return general_inverse(same, same, st, s, t);
}

template <typename Scalar, typename Law>
ContPoint<Scalar> gibbs_forward(const Law& law, const ContPoint<Scalar>& st, Scalar s) {
  detail::require_support(law, st.x);
  return {law.inv_cdf(st.u), wrap_unit(s + law.cdf(st.x))};
}

template <typename Scalar, typename Law>
ContPoint<Scalar> gibbs_inverse(const Law& law, const ContPoint<Scalar>& st, Scalar s) {
  detail::require_support(law, st.x);
  const Scalar prev = law.inv_cdf(wrap_unit(st.u - s));
  return {prev, clamp_unit(law.cdf(st.x))};
}

/// Random-walk Metropolis update of one coordinate with proposals x -/+ delta.
/// (x, y*, u*) are updated by the discrete Metropolis-Hastings map; v* is
/// left alone. `log_target` returns -inf outside the support.
template <typename Scalar, typename LogTarget>
ContExtState<Scalar> metropolis_component_forward(const LogTarget& log_target, Scalar delta,
                                                  const ContExtState<Scalar>& st, Scalar s) {
  const ExtState<Scalar, Scalar> inner{st.x, st.r, st.u};
  const auto next = mh_forward(RandomWalkProposal<Scalar, Scalar>(delta), log_target, inner, s);
  return {next.x, next.u, next.r, st.v};
}

template <typename Scalar, typename LogTarget>
ContExtState<Scalar> metropolis_component_inverse(const LogTarget& log_target, Scalar delta,
                                                  const ContExtState<Scalar>& st, Scalar s) {
  const ExtState<Scalar, Scalar> inner{st.x, st.r, st.u};
  const auto prev = mh_inverse(RandomWalkProposal<Scalar, Scalar>(delta), log_target, inner, s);
  return {prev.x, prev.u, prev.r, st.v};
}

}  // namespace permcmc
