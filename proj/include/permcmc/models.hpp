#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "permcmc/distributions.hpp"
#include "permcmc/stream.hpp"

namespace permcmc {

/// How a set of parallel chains is driven.
///  - standard_multi: each chain has its own random stream.
///  - coupled_standard: standard updates, all chains share one stream.
///  - permutation: permutation / volume-preserving maps, one shared stream.
enum class ChainMode { standard_multi, coupled_standard, permutation };

std::string to_string(ChainMode mode);
/// Accepts "standard", "coupled", "permutation" and the full enum names.
ChainMode parse_chain_mode(const std::string& name);

/// Uniform draws consumed by one sweep. Shared modes read `shared` starting at
/// `cursor` and advance it; standard_multi draws from `streams`, one per chain.
struct SweepDriving {
  const Eigen::VectorXd* shared = nullptr;
  const Eigen::MatrixXd* delta = nullptr;
  Index cursor = 0;
  std::vector<UniformStream>* streams = nullptr;
};

// Ising model on a toroidal grid.

class IsingModel {
 public:
  IsingModel(Index rows, Index cols, double beta);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index sites() const { return rows_ * cols_; }
  double beta() const { return beta_; }
  /// Sites are numbered row-major; columns are up, down, left, right.
  const Eigen::Matrix<Index, Eigen::Dynamic, 4>& neighbors() const { return neighbors_; }

 private:
  Index rows_, cols_;
  double beta_;
  Eigen::Matrix<Index, Eigen::Dynamic, 4> neighbors_;
};

/// Spins as a rows x cols array of -1 / +1.
using IsingState = Eigen::MatrixXi;

/// E(x) = -sum over the 2 r c toroidal edges of x(a) x(b).
int ising_energy(const IsingModel& model, const IsingState& state);
/// P(spin at `site` is +1 | neighbors) = 1 / (1 + exp(-2 beta sum)).
double ising_conditional(const IsingModel& model, const IsingState& state, Index site);
double ising_conditional(double beta, int neighbor_sum);

/// K chains in lockstep. Column k of `spins` holds chain k, flattened
/// row-major. `u` and `r` carry u* and y*/pi for permutation mode.
struct IsingEnsemble {
  Eigen::MatrixXi spins;
  Eigen::RowVectorXd u;
  Eigen::RowVectorXd r;

  Index chains() const { return spins.cols(); }
  IsingState chain(const IsingModel& model, Index k) const;
};

/// Spins i.i.d. uniform on {-1, +1}; u and r uniform on [0, 1).
IsingEnsemble ising_initial(const IsingModel& model, Index chains, UniformStream& stream);

Eigen::RowVectorXd ising_energies(const IsingModel& model, const IsingEnsemble& ens);
Eigen::RowVectorXd ising_magnetizations(const IsingEnsemble& ens);

/// One sweep updating each spin in row-major order. Shared modes consume one
/// driving value per spin update.
void ising_sweep(const IsingModel& model, IsingEnsemble& ens, ChainMode mode, SweepDriving& driving);

// Truncated bivariate normal.

struct TruncNormModel {
  double rho = 0.95;
  Eigen::Vector2d lower{-1.0, -1.5};
  Eigen::Vector2d upper{2.5, 2.0};

  double log_density(const Eigen::Vector2d& x) const;
  bool in_support(const Eigen::Vector2d& x) const;
};

/// Law of coordinate `axis` given the other coordinate:
/// N(rho * other, sqrt(1 - rho^2)) truncated to the axis support.
TruncatedNormalLaw<double> truncnorm_conditional(const TruncNormModel& model, Index axis, double other_value);

/// K chains; column k of `x` is chain k. One u* (and one y*/pi) per chain is
/// shared by the two coordinate updates.
struct TruncNormEnsemble {
  Eigen::Matrix2Xd x;
  Eigen::RowVectorXd u;
  Eigen::RowVectorXd r;

  Index chains() const { return x.cols(); }
};

/// Initial points uniform over the rectangle; u and r uniform on [0, 1).
TruncNormEnsemble truncnorm_initial(const TruncNormModel& model, Index chains, UniformStream& stream);

/// Gibbs sweep: coordinate 0 then coordinate 1, one driving value each.
void truncnorm_gibbs_sweep(const TruncNormModel& model, TruncNormEnsemble& ens, ChainMode mode,
                           SweepDriving& driving);

/// Single-variable random-walk Metropolis sweep. Each coordinate update uses
/// one offset and one uniform. In shared modes the offsets come from
/// `driving.delta`; standard_multi draws N(0, proposal_sd^2) per chain.
void truncnorm_metropolis_sweep(const TruncNormModel& model, TruncNormEnsemble& ens, ChainMode mode,
                                SweepDriving& driving, double proposal_sd);

// Banana-shaped test distribution:
// x1 ~ N(0, 1), x2 | x1 ~ N(x1^2 - 1, 1).

struct BananaTarget {
  /// Log density up to an additive constant; 0 at (0, -1).
  double log_density(const Eigen::Vector2d& x) const;
  Eigen::Vector2d sample(UniformStream& stream) const;
};

double banana_logdensity(const Eigen::Vector2d& x);

}  // namespace permcmc
