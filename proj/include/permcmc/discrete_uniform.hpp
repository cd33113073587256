#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace permcmc::uniform {

using Eigen::Index;

/// Transition counts Q * T(x, x') for a kernel on {0..M-1} that leaves the
/// uniform distribution invariant. Rows and columns both sum to Q.
class UniformKernel {
 public:
  UniformKernel(Eigen::MatrixXi counts, int denominator);

  Index size() const { return counts_.rows(); }
  int denominator() const { return q_; }
  const Eigen::MatrixXi& counts() const { return counts_; }
  /// Reverse-chain counts, the transpose of counts().
  const Eigen::MatrixXi& reverse_counts() const { return reverse_; }
  bool reversible() const { return counts_ == reverse_; }

 private:
  Eigen::MatrixXi counts_;
  Eigen::MatrixXi reverse_;
  int q_;
};

/// A point (x, u) of X x {0..Q-1}.
struct UniformExtState {
  Index x = 0;
  int u = 0;

  friend bool operator==(const UniformExtState&, const UniformExtState&) = default;
};

/// One step of the permutation map driven by s in {0..Q-1}.
UniformExtState forward(const UniformKernel& kernel, const UniformExtState& state, int s);

/// Exact inverse of forward() for the same s.
UniformExtState inverse(const UniformKernel& kernel, const UniformExtState& state, int s);

/// The update u' = s + u (mod Q) with x' chosen as in forward(). It is not a
/// bijection in general and exists to demonstrate the collisions it causes.
UniformExtState forward_naive_shift(const UniformKernel& kernel, const UniformExtState& state, int s);

using UniformMap = std::function<UniformExtState(const UniformKernel&, const UniformExtState&, int)>;

struct PermutationVerdict {
  bool bijection = true;
  /// Image states reached from two or more preimages.
  std::vector<UniformExtState> collisions;
  /// Image states that nothing maps to.
  std::vector<UniformExtState> unreached;
  /// Image of state index x * Q + u.
  std::vector<UniformExtState> image;
};

inline constexpr Index kEnumerationLimit = 10'000'000;

/// Enumerate `map` over all M * Q extended states for one s.
/// Throws EnumerationTooLarge above kEnumerationLimit states.
PermutationVerdict verify_permutation(const UniformKernel& kernel, int s, const UniformMap& map = forward);

/// Kernel text format: a line "M Q", then M rows of M integer counts. An
/// optional trailing row of M positive reals gives unnormalized target
/// probabilities; when present the file describes a general discrete kernel
/// T = counts / Q with that target.
struct KernelFile {
  Eigen::MatrixXi counts;
  int denominator = 0;
  std::optional<Eigen::VectorXd> target;
};

KernelFile read_kernel(std::istream& in);

/// Built-in kernels from the worked examples: the reversible 4-state chain with
/// Q = 3 and the non-reversible 4-state chain with Q = 4.
UniformKernel reversible4();
UniformKernel nonreversible4();

}  // namespace permcmc::uniform
