#include "permcmc/importance.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "permcmc/models.hpp"

namespace permcmc {

std::string to_string(KAllocation allocation) {
  return allocation == KAllocation::stratified ? "stratified" : "uniform";
}

KAllocation parse_k_allocation(const std::string& name) {
  if (name == "stratified") return KAllocation::stratified;
  if (name == "uniform" || name == "uniform_random") return KAllocation::uniform_random;
  throw std::invalid_argument("unknown k allocation '" + name + "'");
}

std::vector<Index> allocate_starts(Index n, Index m, KAllocation allocation, UniformStream& stream) {
  if (n < 1) throw std::invalid_argument("need at least one sample");
  if (m < 0) throw std::invalid_argument("M must be non-negative");
  const Index choices = m + 1;
  const auto random_k = [&] {
    return std::min(static_cast<Index>(stream.next_uniform() * static_cast<double>(choices)), m);
  };

  std::vector<Index> starts;
  starts.reserve(static_cast<std::size_t>(n));
  if (allocation == KAllocation::stratified) {
    const Index share = n / choices;
    for (Index k = 0; k < choices; ++k) starts.insert(starts.end(), static_cast<std::size_t>(share), k);
  }
  while (static_cast<Index>(starts.size()) < n) starts.push_back(random_k());
  return starts;
}

ImportanceEstimate weighted_estimate(const Eigen::VectorXd& log_weights, const Eigen::VectorXd& values) {
  if (log_weights.size() != values.size() || log_weights.size() == 0) {
    throw std::invalid_argument("weights and values must be non-empty and the same length");
  }
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) throw std::domain_error("all importance weights are zero");
  const Eigen::ArrayXd w = (log_weights.array() - top).exp();
  const Eigen::ArrayXd wn = w / w.sum();
  ImportanceEstimate est;
  est.value = (wn * values.array()).sum();
  est.se = std::sqrt((wn.square() * (values.array() - est.value).square()).sum());
  return est;
}

double effective_sample_size(const Eigen::VectorXd& log_weights) {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) throw std::domain_error("all importance weights are zero");
  const Eigen::ArrayXd w = (log_weights.array() - top).exp();
  return w.sum() * w.sum() / w.square().sum();
}

BananaExperimentResult run_banana_experiment(const BananaExperimentConfig& config) {
  if (config.M < 0) throw std::invalid_argument("M must be non-negative");
  if (!(config.proposal_sd > 0)) throw std::invalid_argument("proposal sd must be positive");
  const double sd = config.proposal_sd;
  const DeltaSampler offsets = [sd](UniformStream& st) {
    Eigen::VectorXd d(2);
    d(0) = sd * st.next_normal();
    d(1) = sd * st.next_normal();
    return d;
  };
  DrivingSequence driving = generate(origin::Seeded{derive_seed(config.seed, 0)}, config.M, false, offsets);
  const RandomWalkMetropolisMap map(std::move(driving),
                                    [](const Eigen::VectorXd& x) { return banana_logdensity(Eigen::Vector2d(x)); });
  const IsotropicNormalBase base(config.base_mean, config.base_sd);

  UniformStream stream(derive_seed(config.seed, 1));
  BananaExperimentResult result;
  result.samples = draw_samples(map, base, config.N, config.allocation, stream);
  const auto f = [](const Eigen::VectorXd& x) { return x(1) * x(1); };
  result.estimate = estimate(result.samples, f);
  result.ess = effective_sample_size(result.samples);
  return result;
}

std::string format_sample_row(Index k, double rho_ddot, double f_value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%ld,%.12g,%.12g\n", static_cast<long>(k), rho_ddot, f_value);
  return buf;
}

void write_summary(std::ostream& out, const ImportanceEstimate& est, double ess) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", est.value, est.se, ess);
  out << "estimate,se,ess\n" << buf;
}

}  // namespace permcmc
