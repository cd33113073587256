#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "permcmc/continuous.hpp"
#include "permcmc/discrete_general.hpp"
#include "permcmc/discrete_uniform.hpp"
#include "permcmc/distributions.hpp"
#include "permcmc/stream.hpp"

namespace permcmc {

struct CheckResult {
  std::string name;
  bool passed = true;
  /// Worst error seen, where meaningful (0 for exact checks).
  double worst = 0;
  std::string detail;
};

struct VerifyReport {
  std::string subject;
  std::vector<CheckResult> checks;

  bool passed() const;
};

void print_report(std::ostream& out, const VerifyReport& report);

struct VerifyOptions {
  Index round_trips = 100000;
  Index involution_states = 10000;
  Index jacobian_points = 1000;
  double round_trip_tolerance = 1e-9;
  double jacobian_tolerance = 1e-5;
  std::uint64_t seed = 12345;
};

/// Bijection for every s and exact inverse round-trips over the whole space.
VerifyReport verify_uniform(const uniform::UniformKernel& kernel, const std::string& subject);

/// Bijection check only, for a map that is expected to fail it.
VerifyReport verify_uniform_map(const uniform::UniformKernel& kernel, const std::string& subject,
                                const uniform::UniformMap& map);

VerifyReport verify_general(const GeneralKernel<double>& kernel, const std::string& subject,
                            const VerifyOptions& options = {});

VerifyReport verify_mh(const DiscreteTarget<double>& target, const Eigen::MatrixXd& proposal,
                       const std::string& subject, const VerifyOptions& options = {});

/// Truncated-normal Gibbs, a reversible Gaussian autoregressive kernel, and
/// random-walk Metropolis on a truncated normal target.
VerifyReport verify_continuous(const VerifyOptions& options = {});

/// Built-in subjects: reversible4, nonreversible4, broken-u-update,
/// general3, mh4, continuous.
std::vector<std::string> builtin_subjects();
bool is_builtin(const std::string& name);
VerifyReport verify_builtin(const std::string& name, const VerifyOptions& options = {});

/// Verify a kernel file (see uniform::read_kernel): a uniform kernel when no
/// target row is present, otherwise the general kernel T = counts / Q.
VerifyReport verify_kernel_file(std::istream& in, const std::string& subject, const VerifyOptions& options = {});

// Reference objects used by the checks.

/// Example target pi = (3/10, 1/10, 6/10) with its kernel.
GeneralKernel<double> example_general3();
/// Example target (1/3, 1/3, 2/9, 1/9) and its proposal matrix.
DiscreteTarget<double> example_mh4_target();
Eigen::MatrixXd example_mh4_proposal();

/// Gaussian autoregressive kernel x' ~ N(a x, 1 - a^2), reversible with
/// respect to N(0, 1).
class GaussianAr1Family {
 public:
  explicit GaussianAr1Family(double a) : a_(a), sd_(std::sqrt(1 - a * a)) {}
  NormalLaw<double> operator()(double x) const { return NormalLaw<double>(a_ * x, sd_); }

 private:
  double a_;
  double sd_;
};

// Finite-difference Jacobians, in coordinates where the slice variable is y*
// rather than y*/pi. A point whose stencil crosses a branch of the
// piecewise map is reported as not usable (the optional is empty).

/// (y*, u*) -> (y*', u*') for the general discrete map.
std::optional<double> jacobian_det_general(const GeneralKernel<double>& kernel, const GeneralExtState<double>& st,
                                           double s, double h = 1e-7);

/// (y*, u*) -> (y*', u*') for the Metropolis-Hastings map.
std::optional<double> jacobian_det_mh(const DiscreteTarget<double>& target, const MatrixProposal<double>& proposal,
                                      const GeneralExtState<double>& st, double s, double h = 1e-7);

/// (x*, u*, y*, v*) -> (x*', u*', y*', v*') for a continuous map; `pi` is
/// the density that y* is uniform under and `step` maps ContExtState.
std::optional<double> jacobian_det_continuous(const std::function<double(double)>& pi,
                                              const std::function<ContExtState<double>(const ContExtState<double>&)>& step,
                                              const ContExtState<double>& st, double h = 1e-6);

}  // namespace permcmc
