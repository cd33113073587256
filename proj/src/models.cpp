#include "permcmc/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "permcmc/continuous.hpp"
#include "permcmc/discrete_general.hpp"
#include "permcmc/error.hpp"

namespace permcmc {

std::string to_string(ChainMode mode) {
  switch (mode) {
    case ChainMode::standard_multi:
      return "standard";
    case ChainMode::coupled_standard:
      return "coupled";
    case ChainMode::permutation:
      return "permutation";
  }
  return "unknown";
}

ChainMode parse_chain_mode(const std::string& name) {
  if (name == "standard" || name == "standard_multi") return ChainMode::standard_multi;
  if (name == "coupled" || name == "coupled_standard") return ChainMode::coupled_standard;
  if (name == "permutation") return ChainMode::permutation;
  throw std::invalid_argument("unknown chain mode '" + name + "'");
}

namespace {

double take_shared(SweepDriving& driving) {
  if (driving.shared == nullptr || driving.cursor >= driving.shared->size()) {
    throw DrivingExhausted("driving sequence exhausted at update " + std::to_string(driving.cursor));
  }
  return (*driving.shared)(driving.cursor++);
}

std::vector<UniformStream>& chain_streams(SweepDriving& driving, Index chains) {
  if (driving.streams == nullptr || static_cast<Index>(driving.streams->size()) < chains) {
    throw DrivingExhausted("standard mode needs one stream per chain");
  }
  return *driving.streams;
}

}  // namespace

// Ising

IsingModel::IsingModel(Index rows, Index cols, double beta) : rows_(rows), cols_(cols), beta_(beta) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("Ising grid must have at least one row and column");
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  neighbors_.resize(sites(), 4);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const Index site = i * cols + j;
      neighbors_(site, 0) = ((i + rows - 1) % rows) * cols + j;
      neighbors_(site, 1) = ((i + 1) % rows) * cols + j;
      neighbors_(site, 2) = i * cols + (j + cols - 1) % cols;
      neighbors_(site, 3) = i * cols + (j + 1) % cols;
    }
  }
}

namespace {

Eigen::VectorXi flatten(const IsingModel& model, const IsingState& state) {
  if (state.rows() != model.rows() || state.cols() != model.cols()) {
    throw std::invalid_argument("spin array does not match the model dimensions");
  }
  Eigen::VectorXi flat(model.sites());
  for (Index i = 0; i < model.rows(); ++i) {
    for (Index j = 0; j < model.cols(); ++j) flat(i * model.cols() + j) = state(i, j);
  }
  return flat;
}

}  // namespace

int ising_energy(const IsingModel& model, const IsingState& state) {
  const Eigen::VectorXi flat = flatten(model, state);
  const auto& nb = model.neighbors();
  int e = 0;
  // Each edge counted once via the down and right neighbors.
  for (Index s = 0; s < model.sites(); ++s) e -= flat(s) * (flat(nb(s, 1)) + flat(nb(s, 3)));
  return e;
}

double ising_conditional(double beta, int neighbor_sum) { return 1.0 / (1.0 + std::exp(-2.0 * beta * neighbor_sum)); }

double ising_conditional(const IsingModel& model, const IsingState& state, Index site) {
  const Eigen::VectorXi flat = flatten(model, state);
  int sum = 0;
  for (int k = 0; k < 4; ++k) sum += flat(model.neighbors()(site, k));
  return ising_conditional(model.beta(), sum);
}

IsingState IsingEnsemble::chain(const IsingModel& model, Index k) const {
  IsingState st(model.rows(), model.cols());
  for (Index i = 0; i < model.rows(); ++i) {
    for (Index j = 0; j < model.cols(); ++j) st(i, j) = spins(i * model.cols() + j, k);
  }
  return st;
}

IsingEnsemble ising_initial(const IsingModel& model, Index chains, UniformStream& stream) {
  IsingEnsemble ens;
  ens.spins.resize(model.sites(), chains);
  ens.u.resize(chains);
  ens.r.resize(chains);
  for (Index k = 0; k < chains; ++k) {
    for (Index s = 0; s < model.sites(); ++s) ens.spins(s, k) = stream.next_uniform() < 0.5 ? -1 : 1;
    ens.u(k) = stream.next_uniform();
    ens.r(k) = stream.next_uniform();
  }
  return ens;
}

Eigen::RowVectorXd ising_energies(const IsingModel& model, const IsingEnsemble& ens) {
  const auto& nb = model.neighbors();
  Eigen::RowVectorXi e = Eigen::RowVectorXi::Zero(ens.chains());
  for (Index s = 0; s < model.sites(); ++s) {
    e -= ens.spins.row(s).cwiseProduct(ens.spins.row(nb(s, 1)) + ens.spins.row(nb(s, 3)));
  }
  return e.cast<double>();
}

Eigen::RowVectorXd ising_magnetizations(const IsingEnsemble& ens) {
  return ens.spins.colwise().sum().cast<double>();
}

void ising_sweep(const IsingModel& model, IsingEnsemble& ens, ChainMode mode, SweepDriving& driving) {
  const auto& nb = model.neighbors();
  const Index k_chains = ens.chains();
  auto* streams = mode == ChainMode::standard_multi ? &chain_streams(driving, k_chains) : nullptr;

  for (Index site = 0; site < model.sites(); ++site) {
    const Eigen::RowVectorXi sums =
        ens.spins.row(nb(site, 0)) + ens.spins.row(nb(site, 1)) + ens.spins.row(nb(site, 2)) + ens.spins.row(nb(site, 3));
    const double shared = mode == ChainMode::standard_multi ? 0.0 : take_shared(driving);

    for (Index k = 0; k < k_chains; ++k) {
      const double p = ising_conditional(model.beta(), sums(k));
      switch (mode) {
        case ChainMode::permutation: {
          // The new spin ignores the old one, so the kernel rows are all
          // (1 - p, p) over (-1, +1) and the chain is reversible.
          const Eigen::Vector2d row(1.0 - p, p);
          const auto rows = [&row](Index) -> const Eigen::Vector2d& { return row; };
          const GeneralExtState<double> st{ens.spins(site, k) > 0 ? 1 : 0, ens.r(k), ens.u(k)};
          const auto next = transition_forward(rows, rows, st, shared);
          ens.spins(site, k) = next.x == 1 ? 1 : -1;
          ens.r(k) = next.r;
          ens.u(k) = next.u;
          break;
        }
        case ChainMode::coupled_standard:
          ens.spins(site, k) = shared >= 1.0 - p ? 1 : -1;
          break;
        case ChainMode::standard_multi:
          ens.spins(site, k) = (*streams)[static_cast<std::size_t>(k)].next_uniform() >= 1.0 - p ? 1 : -1;
          break;
      }
    }
  }
}

// Truncated bivariate normal

bool TruncNormModel::in_support(const Eigen::Vector2d& x) const {
  return (x.array() > lower.array()).all() && (x.array() < upper.array()).all();
}

double TruncNormModel::log_density(const Eigen::Vector2d& x) const {
  if (!in_support(x)) return -std::numeric_limits<double>::infinity();
  return -(x(0) * x(0) - 2 * rho * x(0) * x(1) + x(1) * x(1)) / (2 * (1 - rho * rho));
}

TruncatedNormalLaw<double> truncnorm_conditional(const TruncNormModel& model, Index axis, double other_value) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("axis must be 0 or 1");
  return TruncatedNormalLaw<double>(model.rho * other_value, std::sqrt(1 - model.rho * model.rho), model.lower(axis),
                                    model.upper(axis));
}

TruncNormEnsemble truncnorm_initial(const TruncNormModel& model, Index chains, UniformStream& stream) {
  TruncNormEnsemble ens;
  ens.x.resize(2, chains);
  ens.u.resize(chains);
  ens.r.resize(chains);
  for (Index k = 0; k < chains; ++k) {
    for (Index a = 0; a < 2; ++a) {
      ens.x(a, k) = model.lower(a) + (model.upper(a) - model.lower(a)) * stream.next_open_uniform();
    }
    ens.u(k) = stream.next_uniform();
    ens.r(k) = stream.next_uniform();
  }
  return ens;
}

void truncnorm_gibbs_sweep(const TruncNormModel& model, TruncNormEnsemble& ens, ChainMode mode,
                           SweepDriving& driving) {
  const Index k_chains = ens.chains();
  auto* streams = mode == ChainMode::standard_multi ? &chain_streams(driving, k_chains) : nullptr;

  for (Index axis = 0; axis < 2; ++axis) {
    const double shared = mode == ChainMode::standard_multi ? 0.0 : take_shared(driving);
    for (Index k = 0; k < k_chains; ++k) {
      const auto law = truncnorm_conditional(model, axis, ens.x(1 - axis, k));
      switch (mode) {
        case ChainMode::permutation: {
          const auto next = gibbs_forward(law, ContPoint<double>{ens.x(axis, k), ens.u(k)}, shared);
          ens.x(axis, k) = next.x;
          ens.u(k) = next.u;
          break;
        }
        case ChainMode::coupled_standard:
          ens.x(axis, k) = law.inv_cdf(shared);
          break;
        case ChainMode::standard_multi:
          ens.x(axis, k) = law.inv_cdf((*streams)[static_cast<std::size_t>(k)].next_uniform());
          break;
      }
    }
  }
}

void truncnorm_metropolis_sweep(const TruncNormModel& model, TruncNormEnsemble& ens, ChainMode mode,
                                SweepDriving& driving, double proposal_sd) {
  const Index k_chains = ens.chains();
  auto* streams = mode == ChainMode::standard_multi ? &chain_streams(driving, k_chains) : nullptr;

  for (Index axis = 0; axis < 2; ++axis) {
    double shared = 0.0;
    double shared_delta = 0.0;
    if (mode != ChainMode::standard_multi) {
      const Index at = driving.cursor;
      shared = take_shared(driving);
      if (driving.delta == nullptr || at >= driving.delta->rows()) {
        throw DrivingExhausted("driving sequence has no offset for update " + std::to_string(at));
      }
      shared_delta = (*driving.delta)(at, 0);
    }

    for (Index k = 0; k < k_chains; ++k) {
      Eigen::Vector2d point = ens.x.col(k);
      const auto log_target = [&](double value) {
        Eigen::Vector2d y = point;
        y(axis) = value;
        return model.log_density(y);
      };
      switch (mode) {
        case ChainMode::permutation: {
          const ContExtState<double> st{point(axis), ens.u(k), ens.r(k), 0.0};
          const auto next = metropolis_component_forward(log_target, shared_delta, st, shared);
          ens.x(axis, k) = next.x;
          ens.u(k) = next.u;
          ens.r(k) = next.r;
          break;
        }
        case ChainMode::coupled_standard:
        case ChainMode::standard_multi: {
          double delta = shared_delta;
          double uniform = shared;
          if (mode == ChainMode::standard_multi) {
            auto& stream = (*streams)[static_cast<std::size_t>(k)];
            delta = proposal_sd * stream.next_normal();
            uniform = stream.next_uniform();
          }
          const double proposed = point(axis) + delta;
          const double log_ratio = log_target(proposed) - log_target(point(axis));
          if (std::log(uniform) < log_ratio) ens.x(axis, k) = proposed;
          break;
        }
      }
    }
  }
}

// Banana

double banana_logdensity(const Eigen::Vector2d& x) {
  const double d = x(1) - (x(0) * x(0) - 1);
  return -x(0) * x(0) / 2 - d * d / 2;
}

double BananaTarget::log_density(const Eigen::Vector2d& x) const { return banana_logdensity(x); }

Eigen::Vector2d BananaTarget::sample(UniformStream& stream) const {
  const double x1 = stream.next_normal();
  const double x2 = x1 * x1 - 1 + stream.next_normal();
  return {x1, x2};
}

}  // namespace permcmc
