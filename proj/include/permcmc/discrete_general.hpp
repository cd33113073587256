#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "permcmc/error.hpp"
#include "permcmc/unit_interval.hpp"

namespace permcmc {

using Eigen::Index;

/// Extended state (x, y*, u*) for a discrete chain. The slice coordinate is
/// stored normalized as r = y* / pi(x).
template <typename Point, typename Scalar = double>
struct ExtState {
  Point x{};
  Scalar r = 0;
  Scalar u = 0;
};

template <typename Scalar = double>
using GeneralExtState = ExtState<Index, Scalar>;

template <typename Point, typename Scalar>
Scalar slice_height(const ExtState<Point, Scalar>& st, Scalar pi_x) {
  return pi_x * st.r;
}

namespace detail {

template <typename Scalar>
struct Cell {
  Index index = -1;
  Scalar lower = 0;
  Scalar width = 0;
};

// Cell of `row` containing u: the last index with positive width whose
// running lower bound is <= u. A value on a boundary goes to the upper cell.
template <typename Row, typename Scalar>
Cell<Scalar> locate(const Row& row, Scalar u) {
  Cell<Scalar> cell;
  Scalar acc = 0;
  for (Index j = 0; j < static_cast<Index>(row.size()); ++j) {
    if (acc > u) break;
    const Scalar w = row(j);
    if (w > 0) cell = {j, acc, w};
    acc += w;
  }
  return cell;
}

template <typename Row>
auto cumulative_before(const Row& row, Index end) {
  using Scalar = std::decay_t<decltype(row(0))>;
  Scalar acc = 0;
  for (Index j = 0; j < end; ++j) acc += row(j);
  return acc;
}

}  // namespace detail

/// One step of the limiting map for a pi-invariant kernel:
///   x' = cell of T(x, .) containing u,
///   r' = (u - lower) / T(x, x'),
///   u' = s + sum_{j < x} Trev(x', j) + Trev(x', x) r  (mod 1).
/// `fwd(x)` and `rev(x)` return rows of T and Trev.
template <typename Scalar, typename ForwardRows, typename ReverseRows>
GeneralExtState<Scalar> transition_forward(const ForwardRows& fwd, const ReverseRows& rev,
                                           const GeneralExtState<Scalar>& st, Scalar s) {
  const auto row = fwd(st.x);
  const auto cell = detail::locate(row, st.u);
  if (cell.index < 0) {
    throw ZeroForwardProbability("no transition with positive probability from state " + std::to_string(st.x));
  }
  const auto back = rev(cell.index);
  const Scalar back_width = back(st.x);
  if (!(back_width > 0)) {
    throw ZeroForwardProbability("reverse transition " + std::to_string(cell.index) + " -> " +
                                 std::to_string(st.x) + " has zero probability");
  }
  GeneralExtState<Scalar> out;
  out.x = cell.index;
  out.r = clamp_unit((st.u - cell.lower) / cell.width);
  out.u = wrap_unit(s + detail::cumulative_before(back, st.x) + back_width * st.r);
  return out;
}

/// Inverse of transition_forward() for the same s: the forward step with the
/// roles of T and Trev exchanged, applied after removing the shift.
template <typename Scalar, typename ForwardRows, typename ReverseRows>
GeneralExtState<Scalar> transition_inverse(const ForwardRows& fwd, const ReverseRows& rev,
                                           const GeneralExtState<Scalar>& st, Scalar s) {
  GeneralExtState<Scalar> shifted = st;
  shifted.u = wrap_unit(st.u - s);
  return transition_forward(rev, fwd, shifted, Scalar(0));
}

/// Unnormalized probabilities pi(x) on {0..M-1}, all positive.
template <typename Scalar = double>
class DiscreteTarget {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit DiscreteTarget(Vector pi) : pi_(std::move(pi)) {
    if (pi_.size() == 0) throw InvalidKernel("target must have at least one state");
    for (Index i = 0; i < pi_.size(); ++i) {
      if (!(pi_(i) > 0) || !std::isfinite(pi_(i))) {
        throw InvalidKernel("target probability for state " + std::to_string(i) + " must be positive and finite");
      }
    }
  }

  Index size() const { return pi_.size(); }
  const Vector& pi() const { return pi_; }
  Scalar operator()(Index x) const { return pi_(x); }
  Scalar log_density(Index x) const {
    if (x < 0 || x >= pi_.size()) return -std::numeric_limits<Scalar>::infinity();
    return std::log(pi_(x));
  }
  Vector normalized() const { return pi_ / pi_.sum(); }

 private:
  Vector pi_;
};

/// Row-stochastic kernel T leaving pi invariant, with its reversal
/// Trev(x, x') = T(x', x) pi(x') / pi(x).
template <typename Scalar = double>
class GeneralKernel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GeneralKernel(DiscreteTarget<Scalar> target, Matrix T) : target_(std::move(target)), t_(std::move(T)) {
    const Index m = target_.size();
    if (t_.rows() != m || t_.cols() != m) throw InvalidKernel("kernel must be M x M with M = target size");
    if ((t_.array() < 0).any()) throw InvalidKernel("transition probabilities must be non-negative");
    for (Index i = 0; i < m; ++i) {
      if (std::abs(t_.row(i).sum() - 1) > Scalar(1e-12)) {
        throw InvalidKernel("row " + std::to_string(i) + " of T does not sum to one");
      }
    }
    const auto& pi = target_.pi();
    const Scalar total = pi.sum();
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> image = pi.transpose() * t_;
    for (Index j = 0; j < m; ++j) {
      if (std::abs(image(j) - pi(j)) > Scalar(1e-10) * total) {
        throw InvalidKernel("T does not leave pi invariant at column " + std::to_string(j));
      }
    }
    rev_.resize(m, m);
    for (Index x = 0; x < m; ++x) {
      for (Index y = 0; y < m; ++y) rev_(x, y) = t_(y, x) * pi(y) / pi(x);
      if (std::abs(rev_.row(x).sum() - 1) > Scalar(1e-10)) {
        throw InvalidKernel("row " + std::to_string(x) + " of the reverse kernel does not sum to one");
      }
    }
  }

  Index size() const { return t_.rows(); }
  const DiscreteTarget<Scalar>& target() const { return target_; }
  const Matrix& T() const { return t_; }
  const Matrix& reverse() const { return rev_; }

  GeneralExtState<Scalar> forward(const GeneralExtState<Scalar>& st, Scalar s) const {
    check(st);
    return transition_forward(rows(t_), rows(rev_), st, s);
  }

  GeneralExtState<Scalar> inverse(const GeneralExtState<Scalar>& st, Scalar s) const {
    check(st);
    return transition_inverse(rows(t_), rows(rev_), st, s);
  }

 private:
  static auto rows(const Matrix& m) {
    return [&m](Index i) { return m.row(i); };
  }
  void check(const GeneralExtState<Scalar>& st) const {
    if (st.x < 0 || st.x >= size()) throw std::out_of_range("state index out of range");
  }

  DiscreteTarget<Scalar> target_;
  Matrix t_;
  Matrix rev_;
};

// Metropolis-Hastings map.
//
// A proposal describes, for each point x, an ordered list of moves with
// probabilities. `moves(x)` returns that list as (move, probability) pairs,
// `apply(x, m)` gives the proposed point and `reverse(x, m)` the move that
// leads from apply(x, m) back to x. The partition of u* follows the order of
// the list, so the forward and reverse cells line up as required.

template <typename Move, typename Scalar>
using MoveList = std::vector<std::pair<Move, Scalar>>;

namespace detail {

template <typename Move, typename Scalar>
struct MoveCell {
  std::size_t index = std::numeric_limits<std::size_t>::max();
  Scalar lower = 0;
  Scalar width = 0;
  bool found() const { return index != std::numeric_limits<std::size_t>::max(); }
};

template <typename Move, typename Scalar>
MoveCell<Move, Scalar> locate_move(const MoveList<Move, Scalar>& list, Scalar u) {
  MoveCell<Move, Scalar> cell;
  Scalar acc = 0;
  for (std::size_t j = 0; j < list.size(); ++j) {
    if (acc > u) break;
    const Scalar w = list[j].second;
    if (w > 0) cell = {j, acc, w};
    acc += w;
  }
  return cell;
}

template <typename Move, typename Scalar>
MoveCell<Move, Scalar> find_move(const MoveList<Move, Scalar>& list, const Move& m) {
  Scalar acc = 0;
  for (std::size_t j = 0; j < list.size(); ++j) {
    if (list[j].first == m) return {j, acc, list[j].second};
    acc += list[j].second;
  }
  return {};
}

}  // namespace detail

/// One Metropolis-Hastings step on (x, r, u) with shift s. `log_target(x)`
/// returns log pi(x) up to a constant, or -inf outside the support.
///
/// An accepted move that raises the density by a factor R stores r in u' at a
/// resolution of about R times the double epsilon, so the inverse recovers r
/// only to that accuracy (x and u are unaffected).
template <typename Proposal, typename LogTarget, typename Point, typename Scalar>
ExtState<Point, Scalar> mh_forward(const Proposal& proposal, const LogTarget& log_target,
                                   const ExtState<Point, Scalar>& st, Scalar s) {
  const auto fwd_moves = proposal.moves(st.x);
  const auto cell = detail::locate_move(fwd_moves, st.u);
  if (!cell.found()) throw ZeroProposalProbability("proposal distribution has no mass at the current state");

  const Scalar frac = (st.u - cell.lower) / cell.width;
  const auto& move = fwd_moves[cell.index].first;
  Point proposed = proposal.apply(st.x, move);

  ExtState<Point, Scalar> out = st;
  out.u = wrap_unit(s + st.u);

  const Scalar log_ratio = log_target(proposed) - log_target(st.x);
  if (std::isnan(log_ratio) || log_ratio == -std::numeric_limits<Scalar>::infinity()) return out;

  const auto back_moves = proposal.moves(proposed);
  const auto back = detail::find_move(back_moves, proposal.reverse(st.x, move));
  if (!back.found() || !(back.width > 0)) return out;

  const Scalar ratio = std::exp(log_ratio);
  const Scalar accept = std::min(Scalar(1), ratio * back.width / cell.width);
  if (!(frac < accept)) return out;

  const Scalar accept_back = std::min(Scalar(1), cell.width / (ratio * back.width));
  out.x = std::move(proposed);
  out.r = clamp_unit(frac / accept);
  out.u = wrap_unit(s + back.lower + back.width * accept_back * st.r);
  return out;
}

/// Inverse of mh_forward() for the same s. With s = 0 the two coincide.
template <typename Proposal, typename LogTarget, typename Point, typename Scalar>
ExtState<Point, Scalar> mh_inverse(const Proposal& proposal, const LogTarget& log_target,
                                   const ExtState<Point, Scalar>& st, Scalar s) {
  ExtState<Point, Scalar> shifted = st;
  shifted.u = wrap_unit(st.u - s);
  return mh_forward(proposal, log_target, shifted, Scalar(0));
}

/// Proposal given by a full row-stochastic matrix S. A move is the target index.
template <typename Scalar = double>
class MatrixProposal {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Move = Index;

  explicit MatrixProposal(Matrix S) : s_(std::move(S)) {
    if (s_.rows() == 0 || s_.rows() != s_.cols()) throw InvalidKernel("proposal matrix must be square");
    if ((s_.array() < 0).any()) throw InvalidKernel("proposal probabilities must be non-negative");
    for (Index i = 0; i < s_.rows(); ++i) {
      if (std::abs(s_.row(i).sum() - 1) > Scalar(1e-12)) {
        throw InvalidKernel("row " + std::to_string(i) + " of S does not sum to one");
      }
    }
  }

  const Matrix& matrix() const { return s_; }

  MoveList<Move, Scalar> moves(Index x) const {
    MoveList<Move, Scalar> list;
    list.reserve(static_cast<std::size_t>(s_.cols()));
    for (Index j = 0; j < s_.cols(); ++j) list.emplace_back(j, s_(x, j));
    return list;
  }
  Index apply(Index, Move m) const { return m; }
  Move reverse(Index x, Move) const { return x; }

 private:
  Matrix s_;
};

enum class WalkStep { minus, plus };

/// Two-point random walk x -/+ delta with probability 1/2 each. `Point` is a
/// scalar or an Eigen vector; the cells are ordered minus, then plus.
template <typename Point, typename Scalar = double>
class RandomWalkProposal {
 public:
  using Move = WalkStep;

  explicit RandomWalkProposal(Point delta) : delta_(std::move(delta)) {}

  MoveList<Move, Scalar> moves(const Point&) const { return {{WalkStep::minus, Scalar(0.5)}, {WalkStep::plus, Scalar(0.5)}}; }
  Point apply(const Point& x, Move m) const {
    if (m == WalkStep::minus) return Point(x - delta_);
    return Point(x + delta_);
  }
  Move reverse(const Point&, Move m) const { return m == WalkStep::minus ? WalkStep::plus : WalkStep::minus; }

 private:
  Point delta_;
};

/// Random walk on the cyclic group Z_M with offset delta.
template <typename Scalar = double>
class CyclicWalkProposal {
 public:
  using Move = WalkStep;

  CyclicWalkProposal(Index m, Index delta) : m_(m), delta_(((delta % m) + m) % m) {
    if (m <= 0) throw InvalidKernel("group size must be positive");
  }

  MoveList<Move, Scalar> moves(Index) const { return {{WalkStep::minus, Scalar(0.5)}, {WalkStep::plus, Scalar(0.5)}}; }
  Index apply(Index x, Move m) const { return m == WalkStep::minus ? (x - delta_ + m_) % m_ : (x + delta_) % m_; }
  Move reverse(Index, Move m) const { return m == WalkStep::minus ? WalkStep::plus : WalkStep::minus; }

 private:
  Index m_;
  Index delta_;
};

/// Proposal family for discrete targets: a full matrix, or a cyclic group
/// walk whose offset delta is drawn from p(delta) once per step.
template <typename Scalar = double>
struct ProposalFamily {
  struct FullMatrix {
    MatrixProposal<Scalar> proposal;
  };
  struct GroupWalk {
    Index group_size = 0;
    std::vector<Index> offsets;
    std::vector<Scalar> probabilities;
  };
  std::variant<FullMatrix, GroupWalk> mode;

  static ProposalFamily full_matrix(typename MatrixProposal<Scalar>::Matrix S) {
    return {FullMatrix{MatrixProposal<Scalar>(std::move(S))}};
  }
  static ProposalFamily group_walk(Index group_size, std::vector<Index> offsets, std::vector<Scalar> probabilities) {
    if (offsets.empty() || offsets.size() != probabilities.size()) {
      throw InvalidKernel("group walk needs one probability per offset");
    }
    Scalar total = 0;
    for (Scalar p : probabilities) {
      if (p < 0) throw InvalidKernel("offset probabilities must be non-negative");
      total += p;
    }
    if (std::abs(total - 1) > Scalar(1e-12)) throw InvalidKernel("offset probabilities must sum to one");
    return {GroupWalk{group_size, std::move(offsets), std::move(probabilities)}};
  }

  /// Offset for a group walk selected by a uniform draw; 0 for full matrices.
  Index sample_offset(Scalar uniform) const {
    const auto* walk = std::get_if<GroupWalk>(&mode);
    if (walk == nullptr) return 0;
    Scalar acc = 0;
    for (std::size_t i = 0; i < walk->offsets.size(); ++i) {
      acc += walk->probabilities[i];
      if (uniform < acc) return walk->offsets[i];
    }
    return walk->offsets.back();
  }
};

template <typename Scalar>
GeneralExtState<Scalar> mh_forward(const DiscreteTarget<Scalar>& target, const ProposalFamily<Scalar>& family,
                                   const GeneralExtState<Scalar>& st, Scalar s, Index delta = 0) {
  const auto log_target = [&target](Index x) { return target.log_density(x); };
  if (const auto* full = std::get_if<typename ProposalFamily<Scalar>::FullMatrix>(&family.mode)) {
    return mh_forward(full->proposal, log_target, st, s);
  }
  const auto& walk = std::get<typename ProposalFamily<Scalar>::GroupWalk>(family.mode);
  return mh_forward(CyclicWalkProposal<Scalar>(walk.group_size, delta), log_target, st, s);
}

template <typename Scalar>
GeneralExtState<Scalar> mh_inverse(const DiscreteTarget<Scalar>& target, const ProposalFamily<Scalar>& family,
                                   const GeneralExtState<Scalar>& st, Scalar s, Index delta = 0) {
  const auto log_target = [&target](Index x) { return target.log_density(x); };
  if (const auto* full = std::get_if<typename ProposalFamily<Scalar>::FullMatrix>(&family.mode)) {
    return mh_inverse(full->proposal, log_target, st, s);
  }
  const auto& walk = std::get<typename ProposalFamily<Scalar>::GroupWalk>(family.mode);
  return mh_inverse(CyclicWalkProposal<Scalar>(walk.group_size, delta), log_target, st, s);
}

/// Metropolis-Hastings acceptance probability min[1, pi(b) S(b, a) / (pi(a) S(a, b))].
template <typename Scalar>
Scalar mh_acceptance(const DiscreteTarget<Scalar>& target, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& S,
                     Index a, Index b) {
  if (S(a, b) <= 0) return 0;
  return std::min(Scalar(1), target(b) * S(b, a) / (target(a) * S(a, b)));
}

/// Transition matrix induced by a Metropolis-Hastings chain with proposal S.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mh_transition_matrix(
    const DiscreteTarget<Scalar>& target, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& S) {
  const Index m = S.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> T = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m, m);
  for (Index x = 0; x < m; ++x) {
    Scalar stay = S(x, x);
    for (Index y = 0; y < m; ++y) {
      if (y == x) continue;
      const Scalar a = mh_acceptance(target, S, x, y);
      T(x, y) = S(x, y) * a;
      stay += S(x, y) * (1 - a);
    }
    T(x, x) = stay;
  }
  return T;
}

}  // namespace permcmc
