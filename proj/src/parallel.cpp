#include "permcmc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace permcmc {

std::string to_string(TruncNormSampler sampler) {
  return sampler == TruncNormSampler::gibbs ? "gibbs" : "metropolis";
}

TruncNormSampler parse_truncnorm_sampler(const std::string& name) {
  if (name == "gibbs") return TruncNormSampler::gibbs;
  if (name == "metropolis") return TruncNormSampler::metropolis;
  throw std::invalid_argument("unknown sampler '" + name + "'");
}

void RunConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("need at least one chain");
  if (iterations < 1) throw std::invalid_argument("need at least one iteration");
  if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("burn-in must be in [0, iterations)");
  if (const auto* tn = std::get_if<TruncNormParams>(&model)) {
    if (tn->sampler == TruncNormSampler::metropolis && !(tn->proposal_sd > 0)) {
      throw std::invalid_argument("proposal sd must be positive");
    }
  }
}

const Eigen::MatrixXd& TraceSet::operator[](const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no statistic named '" + name + "'");
  return values[static_cast<std::size_t>(it - names.begin())];
}

namespace {

// Collects traces and tracks coalescence and the number of distinct states.
class Recorder {
 public:
  Recorder(std::vector<std::string> names, Index chains, Index iterations, bool track_distinct) {
    set_.names = std::move(names);
    for (std::size_t i = 0; i < set_.names.size(); ++i) set_.values.emplace_back(chains, iterations);
    track_distinct_ = track_distinct;
  }

  // `states` has one column per chain; `extended` adds the auxiliary
  // coordinates used for the distinctness count.
  void record(Index iter, const std::vector<Eigen::RowVectorXd>& stats, const Eigen::MatrixXd& states,
              const Eigen::MatrixXd& extended) {
    for (std::size_t i = 0; i < stats.size(); ++i) set_.values[i].col(iter) = stats[i].transpose();
    bool all_same = true;
    for (Index k = 1; k < states.cols() && all_same; ++k) all_same = states.col(k) == states.col(0);
    if (!all_same) last_apart_ = iter;
    if (track_distinct_) set_.distinct_states.push_back(count_distinct(extended));
  }

  TraceSet finish() {
    const Index n = set_.iterations();
    if (last_apart_ + 1 < n) set_.coalescence = last_apart_ + 2;  // 1-based iteration
    return std::move(set_);
  }

 private:
  static Index count_distinct(const Eigen::MatrixXd& extended) {
    std::vector<std::vector<double>> keys;
    keys.reserve(static_cast<std::size_t>(extended.cols()));
    for (Index k = 0; k < extended.cols(); ++k) {
      keys.emplace_back(extended.col(k).data(), extended.col(k).data() + extended.rows());
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<Index>(std::unique(keys.begin(), keys.end()) - keys.begin());
  }

  TraceSet set_;
  bool track_distinct_ = false;
  Index last_apart_ = -1;
};

std::vector<UniformStream> make_chain_streams(const RunConfig& config) {
  std::vector<UniformStream> streams;
  if (config.mode != ChainMode::standard_multi) return streams;
  for (Index k = 0; k < config.chains; ++k) {
    streams.emplace_back(derive_seed(config.seed, 2 + static_cast<std::uint64_t>(k)));
  }
  return streams;
}

TraceSet run_ising(const RunConfig& config, const IsingParams& params) {
  const IsingModel model(params.rows, params.cols, params.beta);
  UniformStream init(derive_seed(config.seed, 1));
  IsingEnsemble ens = ising_initial(model, config.chains, init);

  std::vector<UniformStream> streams = make_chain_streams(config);
  const DrivingSequence seq = driving_sequence(config);
  SweepDriving driving;
  if (config.mode == ChainMode::standard_multi) {
    driving.streams = &streams;
  } else {
    driving.shared = &seq.s;
  }

  const bool permutation = config.mode == ChainMode::permutation;
  Recorder rec({"energy", "magnetization", "abs_magnetization"}, config.chains, config.iterations, permutation);
  Eigen::MatrixXd extended(model.sites() + 2, config.chains);
  for (Index it = 0; it < config.iterations; ++it) {
    ising_sweep(model, ens, config.mode, driving);
    const Eigen::RowVectorXd mag = ising_magnetizations(ens);
    const Eigen::MatrixXd states = ens.spins.cast<double>();
    if (permutation) extended << states, ens.u, ens.r;
    rec.record(it, {ising_energies(model, ens), mag, mag.cwiseAbs()}, states, extended);
  }
  return rec.finish();
}

TraceSet run_truncnorm(const RunConfig& config, const TruncNormParams& params) {
  const TruncNormModel& model = params.model;
  UniformStream init(derive_seed(config.seed, 1));
  TruncNormEnsemble ens = truncnorm_initial(model, config.chains, init);

  const bool metropolis = params.sampler == TruncNormSampler::metropolis;
  std::vector<UniformStream> streams = make_chain_streams(config);
  const DrivingSequence seq = driving_sequence(config);
  SweepDriving driving;
  if (config.mode == ChainMode::standard_multi) {
    driving.streams = &streams;
  } else {
    driving.shared = &seq.s;
    driving.delta = &seq.delta;
  }

  const bool permutation = config.mode == ChainMode::permutation;
  Recorder rec({"x1", "x2", "x1_sq", "x2_sq"}, config.chains, config.iterations, permutation);
  Eigen::MatrixXd extended(metropolis ? 4 : 3, config.chains);
  for (Index it = 0; it < config.iterations; ++it) {
    if (metropolis) {
      truncnorm_metropolis_sweep(model, ens, config.mode, driving, params.proposal_sd);
    } else {
      truncnorm_gibbs_sweep(model, ens, config.mode, driving);
    }
    if (permutation) {
      if (metropolis) {
        extended << ens.x, ens.u, ens.r;
      } else {
        extended << ens.x, ens.u;
      }
    }
    const Eigen::RowVectorXd x1 = ens.x.row(0);
    const Eigen::RowVectorXd x2 = ens.x.row(1);
    rec.record(it, {x1, x2, x1.array().square(), x2.array().square()}, ens.x, extended);
  }
  return rec.finish();
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

DrivingSequence driving_sequence(const RunConfig& config) {
  config.validate();
  if (config.mode == ChainMode::standard_multi) return {};
  const std::uint64_t driving_seed = derive_seed(config.seed, 0);
  const Origin origin = parse_origin(config.s_pattern, driving_seed);
  if (const auto* ising = std::get_if<IsingParams>(&config.model)) {
    return generate(origin, ising->rows * ising->cols * config.iterations);
  }
  const auto& params = std::get<TruncNormParams>(config.model);
  DeltaSampler offsets;
  if (params.sampler == TruncNormSampler::metropolis) {
    const double sd = params.proposal_sd;
    offsets = [sd](UniformStream& st) { return Eigen::VectorXd::Constant(1, sd * st.next_normal()); };
  }
  return generate(origin, 2 * config.iterations, false, offsets, driving_seed);
}

TraceSet run(const RunConfig& config) {
  config.validate();
  if (const auto* ising = std::get_if<IsingParams>(&config.model)) return run_ising(config, *ising);
  return run_truncnorm(config, std::get<TruncNormParams>(config.model));
}

std::vector<EstimateRow> estimate(const TraceSet& traces, Index burn_in, const std::vector<std::string>& statistics) {
  const Index n = traces.iterations();
  const Index k = traces.chains();
  if (burn_in < 0 || burn_in >= n) throw std::invalid_argument("burn-in must be in [0, iterations)");

  std::vector<EstimateRow> rows;
  for (std::size_t i = 0; i < traces.names.size(); ++i) {
    const auto& name = traces.names[i];
    if (!statistics.empty() && std::find(statistics.begin(), statistics.end(), name) == statistics.end()) continue;
    const Eigen::VectorXd means = traces.values[i].rightCols(n - burn_in).rowwise().mean();
    EstimateRow row;
    row.name = name;
    row.estimate = means.mean();
    if (k < 2) {
      row.se_defined = false;
      row.se = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double var = (means.array() - row.estimate).square().sum() / static_cast<double>(k - 1);
      row.se = std::sqrt(var / static_cast<double>(k));
    }
    rows.push_back(row);
  }
  return rows;
}

bool consistent_with(const EstimateRow& row, double reference, double reference_se, double k) {
  const double se = row.se_defined ? row.se : 0.0;
  return std::abs(row.estimate - reference) <= k * std::sqrt(se * se + reference_se * reference_se);
}

void write_traces(std::ostream& out, const TraceSet& traces) {
  out << "chain,iteration";
  for (const auto& name : traces.names) out << ',' << name;
  out << '\n';
  for (Index c = 0; c < traces.chains(); ++c) {
    for (Index it = 0; it < traces.iterations(); ++it) {
      out << c << ',' << it + 1;
      for (const auto& m : traces.values) out << ',' << format_number(m(c, it));
      out << '\n';
    }
  }
}

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows) {
  out << "statistic,estimate,se\n";
  for (const auto& row : rows) {
    out << row.name << ',' << format_number(row.estimate) << ',' << (row.se_defined ? format_number(row.se) : "NA")
        << '\n';
  }
}

}  // namespace permcmc
