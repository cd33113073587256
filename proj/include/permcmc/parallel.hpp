#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "permcmc/models.hpp"
#include "permcmc/stream.hpp"

namespace permcmc {

struct IsingParams {
  Index rows = 4;
  Index cols = 5;
  double beta = 0.4;
};

enum class TruncNormSampler { gibbs, metropolis };

std::string to_string(TruncNormSampler sampler);
TruncNormSampler parse_truncnorm_sampler(const std::string& name);

struct TruncNormParams {
  TruncNormModel model;
  TruncNormSampler sampler = TruncNormSampler::gibbs;
  double proposal_sd = 4.0;
};

struct RunConfig {
  std::variant<IsingParams, TruncNormParams> model;
  Index chains = 100;
  Index iterations = 1000;
  Index burn_in = 0;
  ChainMode mode = ChainMode::permutation;
  std::uint64_t seed = 1;
  /// Shared driving values: `random`, `constant:<v>` or `repeat:<v1>,...`.
  std::string s_pattern = "random";

  void validate() const;
};

/// Per-chain, per-iteration statistics recorded after every full sweep.
struct TraceSet {
  std::vector<std::string> names;
  /// One chains x iterations matrix per statistic.
  std::vector<Eigen::MatrixXd> values;
  /// First iteration from which every chain has the same state, if any.
  std::optional<Index> coalescence;
  /// Number of distinct extended states after each iteration (permutation
  /// mode only; empty otherwise). A bijective map can never decrease it.
  std::vector<Index> distinct_states;

  Index chains() const { return values.empty() ? 0 : values.front().rows(); }
  Index iterations() const { return values.empty() ? 0 : values.front().cols(); }
  const Eigen::MatrixXd& operator[](const std::string& name) const;
};

/// The shared driving values a run uses: one s per site update for Ising,
/// one per coordinate update for the truncated normal (with one offset each
/// for Metropolis). Empty in standard mode, where chains draw their own.
DrivingSequence driving_sequence(const RunConfig& config);

/// Driving seed, initial-state seed and per-chain seeds derived from
/// config.seed as derive_seed(seed, 0), derive_seed(seed, 1) and
/// derive_seed(seed, 2 + k).
TraceSet run(const RunConfig& config);

struct EstimateRow {
  std::string name;
  double estimate = 0;
  /// Standard deviation of the per-chain means over sqrt(K).
  double se = 0;
  /// False for a single chain, where the standard error is undefined.
  bool se_defined = true;
};

/// Grand mean over chains of iterations burn_in+1..n, with a standard error
/// that treats the chains as independent. `statistics` selects a subset by
/// name; empty means all.
std::vector<EstimateRow> estimate(const TraceSet& traces, Index burn_in,
                                  const std::vector<std::string>& statistics = {});

/// |estimate - reference| <= k * sqrt(se^2 + reference_se^2).
bool consistent_with(const EstimateRow& row, double reference, double reference_se, double k = 3.0);

/// CSV with header `chain,iteration,<stat>...`; iterations are numbered from 1.
void write_traces(std::ostream& out, const TraceSet& traces);
/// CSV with header `statistic,estimate,se`.
void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows);

/// Accurate long-run values and their standard errors.
namespace reference {
struct Value {
  const char* name;
  double value;
  double se;
};
inline constexpr Value ising[] = {
    {"energy", -26.944, 0.020},
    {"magnetization", 0.0, 0.0},
    {"abs_magnetization", 14.746, 0.012},
};
inline constexpr Value truncnorm[] = {
    {"x1", 0.2329, 0.0012},
    {"x2", 0.2162, 0.0012},
    {"x1_sq", 0.5821, 0.0011},
    {"x2_sq", 0.5962, 0.0010},
};
}  // namespace reference

}  // namespace permcmc
