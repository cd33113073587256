#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "permcmc/discrete_general.hpp"
#include "permcmc/stream.hpp"

namespace permcmc {

// Improved importance sampling: draw from a base distribution rho, apply a
// random number k..M of steps of a fixed volume-preserving map, and weight
// the result by 1 / rho_ddot, where rho_ddot averages rho(x_j) / pi(x_j) over
// the whole trajectory j = 0..M (found by running the map backwards).
//
// A map type provides
//   Index steps() const;                         // M
//   State forward(const State&, Index j) const;  // step j -> j+1
//   State inverse(const State&, Index j) const;  // step j+1 -> j
//   double log_target(const Point&) const;       // log pi, unnormalized
// and a base type provides
//   Point sample(UniformStream&) const;
//   double log_density(const Point&) const;      // log rho, unnormalized

enum class KAllocation { uniform_random, stratified };

std::string to_string(KAllocation allocation);
KAllocation parse_k_allocation(const std::string& name);

template <typename Point>
struct WeightedSample {
  /// Extended state indexed by M: the point drawn.
  ExtState<Point> state;
  /// Extended state indexed by 0, the start of the trajectory.
  ExtState<Point> origin;
  Index k = 0;
  double log_rho_ddot = 0;
  /// log rho(x_j) and log pi(x_j) for j = 0..M.
  Eigen::VectorXd log_rho;
  Eigen::VectorXd log_pi;

  double rho_ddot() const { return std::exp(log_rho_ddot); }
  double log_weight() const { return -log_rho_ddot; }
  double weight() const { return std::exp(-log_rho_ddot); }
};

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

/// Steps 2-7 of the procedure for a given start index k.
template <typename Map, typename Base>
auto draw_sample(const Map& map, const Base& base, Index k, UniformStream& stream) {
  using Point = decltype(base.sample(stream));
  const Index m = map.steps();
  if (k < 0 || k > m) throw std::out_of_range("start index must be in [0, M]");

  WeightedSample<Point> out;
  out.k = k;
  out.log_rho.resize(m + 1);
  out.log_pi.resize(m + 1);

  ExtState<Point> start;
  start.x = base.sample(stream);
  start.r = stream.next_uniform();
  start.u = stream.next_uniform();

  const auto note = [&](Index j, const Point& x) {
    out.log_rho(j) = base.log_density(x);
    out.log_pi(j) = map.log_target(x);
    if (!std::isfinite(out.log_pi(j))) {
      throw std::domain_error("target density is zero along the trajectory at index " + std::to_string(j));
    }
  };

  note(k, start.x);
  ExtState<Point> cur = start;
  for (Index j = k; j < m; ++j) {
    cur = map.forward(cur, j);
    note(j + 1, cur.x);
  }
  out.state = cur;

  cur = start;
  for (Index j = k - 1; j >= 0; --j) {
    cur = map.inverse(cur, j);
    note(j, cur.x);
  }
  out.origin = cur;

  out.log_rho_ddot = log_sum_exp(out.log_rho - out.log_pi) - std::log(static_cast<double>(m + 1));
  return out;
}

/// Start indices for N draws. Stratified allocation gives every k the same
/// share floor(N / (M + 1)) and assigns the remainder uniformly at random.
std::vector<Index> allocate_starts(Index n, Index m, KAllocation allocation, UniformStream& stream);

template <typename Map, typename Base>
auto draw_samples(const Map& map, const Base& base, Index n, KAllocation allocation, UniformStream& stream) {
  using Sample = decltype(draw_sample(map, base, Index(0), stream));
  const std::vector<Index> starts = allocate_starts(n, map.steps(), allocation, stream);
  std::vector<Sample> samples;
  samples.reserve(starts.size());
  for (Index k : starts) samples.push_back(draw_sample(map, base, k, stream));
  return samples;
}

struct ImportanceEstimate {
  double value = 0;
  double se = 0;
};

/// Self-normalized estimate with weights 1 / rho_ddot, and the delta-method
/// standard error se^2 = sum w_i^2 (f_i - value)^2 for normalized weights w.
ImportanceEstimate weighted_estimate(const Eigen::VectorXd& log_weights, const Eigen::VectorXd& values);

/// (sum w)^2 / sum w^2.
double effective_sample_size(const Eigen::VectorXd& log_weights);

template <typename Sample>
Eigen::VectorXd log_weights(const std::vector<Sample>& samples) {
  Eigen::VectorXd lw(static_cast<Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) lw(static_cast<Index>(i)) = samples[i].log_weight();
  return lw;
}

template <typename Sample, typename F>
ImportanceEstimate estimate(const std::vector<Sample>& samples, const F& f) {
  if (samples.size() < 2) throw std::invalid_argument("need at least two samples");
  Eigen::VectorXd values(static_cast<Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) values(static_cast<Index>(i)) = f(samples[i].state.x);
  return weighted_estimate(log_weights(samples), values);
}

template <typename Sample>
double effective_sample_size(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("need at least one sample");
  return effective_sample_size(log_weights(samples));
}

// Maps

/// Random-walk Metropolis on R^d with offsets +/- delta_j and shifts s_j
/// taken from a fixed driving sequence.
class RandomWalkMetropolisMap {
 public:
  using Point = Eigen::VectorXd;
  using State = ExtState<Point>;
  using LogTarget = std::function<double(const Point&)>;

  RandomWalkMetropolisMap(DrivingSequence driving, LogTarget log_target)
      : driving_(std::move(driving)), log_target_(std::move(log_target)) {
    if (driving_.size() > 0 && driving_.delta.rows() != driving_.size()) {
      throw std::invalid_argument("random-walk map needs one offset per step");
    }
  }

  Index steps() const { return driving_.size(); }
  const DrivingSequence& driving() const { return driving_; }
  double log_target(const Point& x) const { return log_target_(x); }

  State forward(const State& st, Index j) const {
    return mh_forward(proposal(j), log_target_, st, driving_.s(j));
  }
  State inverse(const State& st, Index j) const {
    return mh_inverse(proposal(j), log_target_, st, driving_.s(j));
  }

 private:
  RandomWalkProposal<Point> proposal(Index j) const { return RandomWalkProposal<Point>(driving_.delta.row(j).transpose()); }

  DrivingSequence driving_;
  LogTarget log_target_;
};

/// The limiting map of a general discrete kernel with shifts s_j.
class DiscreteKernelMap {
 public:
  using Point = Index;
  using State = GeneralExtState<double>;

  DiscreteKernelMap(GeneralKernel<double> kernel, Eigen::VectorXd shifts)
      : kernel_(std::move(kernel)), s_(std::move(shifts)) {}

  Index steps() const { return s_.size(); }
  double log_target(Index x) const { return kernel_.target().log_density(x); }
  State forward(const State& st, Index j) const { return kernel_.forward(st, s_(j)); }
  State inverse(const State& st, Index j) const { return kernel_.inverse(st, s_(j)); }
  const GeneralKernel<double>& kernel() const { return kernel_; }

 private:
  GeneralKernel<double> kernel_;
  Eigen::VectorXd s_;
};

// Base distributions

class IsotropicNormalBase {
 public:
  IsotropicNormalBase(Eigen::VectorXd mean, double sd) : mean_(std::move(mean)), sd_(sd) {
    if (!(sd > 0)) throw std::invalid_argument("base sd must be positive");
  }
  Eigen::VectorXd sample(UniformStream& stream) const {
    Eigen::VectorXd x(mean_.size());
    for (Index i = 0; i < x.size(); ++i) x(i) = mean_(i) + sd_ * stream.next_normal();
    return x;
  }
  double log_density(const Eigen::VectorXd& x) const {
    return -(x - mean_).squaredNorm() / (2 * sd_ * sd_) - static_cast<double>(x.size()) * std::log(sd_);
  }

 private:
  Eigen::VectorXd mean_;
  double sd_;
};

class DiscreteBase {
 public:
  explicit DiscreteBase(Eigen::VectorXd probabilities) : p_(std::move(probabilities)) {
    if ((p_.array() <= 0).any()) throw std::invalid_argument("base probabilities must be positive");
    p_ /= p_.sum();
  }
  Index sample(UniformStream& stream) const {
    const double u = stream.next_uniform();
    double acc = 0;
    for (Index i = 0; i < p_.size(); ++i) {
      acc += p_(i);
      if (u < acc) return i;
    }
    return p_.size() - 1;
  }
  double log_density(Index x) const { return std::log(p_(x)); }
  const Eigen::VectorXd& probabilities() const { return p_; }

 private:
  Eigen::VectorXd p_;
};

// Banana experiment: estimate E[x2^2] (exactly 3) under the banana target.

struct BananaExperimentConfig {
  Index M = 0;
  Index N = 2000;
  Eigen::Vector2d base_mean = Eigen::Vector2d::Zero();
  double base_sd = 3.0;
  double proposal_sd = 4.0;
  KAllocation allocation = KAllocation::stratified;
  std::uint64_t seed = 1;
};

struct BananaExperimentResult {
  std::vector<WeightedSample<Eigen::VectorXd>> samples;
  ImportanceEstimate estimate;
  double ess = 0;
};

/// Offsets and shifts are drawn from derive_seed(seed, 0); samples from
/// derive_seed(seed, 1).
BananaExperimentResult run_banana_experiment(const BananaExperimentConfig& config);

/// CSV `k,rho_ddot,f_value`, one row per sample.
template <typename Sample, typename F>
void write_samples(std::ostream& out, const std::vector<Sample>& samples, const F& f);
/// CSV `estimate,se,ess` with one data row.
void write_summary(std::ostream& out, const ImportanceEstimate& est, double ess);

std::string format_sample_row(Index k, double rho_ddot, double f_value);

template <typename Sample, typename F>
void write_samples(std::ostream& out, const std::vector<Sample>& samples, const F& f) {
  out << "k,rho_ddot,f_value\n";
  for (const auto& s : samples) out << format_sample_row(s.k, s.rho_ddot(), f(s.state.x));
}

}  // namespace permcmc
