#include "permcmc/discrete_uniform.hpp"

#include <istream>
#include <sstream>
#include <string>

#include "permcmc/error.hpp"

namespace permcmc::uniform {

namespace {

int mod(long long v, int q) {
  const long long r = v % q;
  return static_cast<int>(r < 0 ? r + q : r);
}

// Sum of row[0..end-1].
template <typename Row>
long long prefix(const Row& row, Index end) {
  long long acc = 0;
  for (Index j = 0; j < end; ++j) acc += row(j);
  return acc;
}

// Largest x' with prefix(row, x') <= u, restricted to cells of positive width.
template <typename Row>
Index locate(const Row& row, long long u) {
  Index chosen = -1;
  long long acc = 0;
  for (Index j = 0; j < row.size() && acc <= u; ++j) {
    if (row(j) > 0) chosen = j;
    acc += row(j);
  }
  return chosen;
}

void check_state(const UniformKernel& kernel, const UniformExtState& st, int s) {
  if (st.x < 0 || st.x >= kernel.size() || st.u < 0 || st.u >= kernel.denominator() || s < 0 ||
      s >= kernel.denominator()) {
    throw std::out_of_range("extended state or driving value out of range");
  }
}

}  // namespace

UniformKernel::UniformKernel(Eigen::MatrixXi counts, int denominator) : counts_(std::move(counts)), q_(denominator) {
  if (q_ <= 0) throw InvalidKernel("denominator Q must be positive");
  if (counts_.rows() == 0 || counts_.rows() != counts_.cols()) throw InvalidKernel("count matrix must be square");
  if ((counts_.array() < 0).any()) throw InvalidKernel("counts must be non-negative");
  for (Index i = 0; i < counts_.rows(); ++i) {
    if (counts_.row(i).sum() != q_) throw InvalidKernel("row " + std::to_string(i) + " does not sum to Q");
    if (counts_.col(i).sum() != q_) {
      throw InvalidKernel("column " + std::to_string(i) + " does not sum to Q (uniform not invariant)");
    }
  }
  reverse_ = counts_.transpose();
}

UniformExtState forward(const UniformKernel& kernel, const UniformExtState& state, int s) {
  check_state(kernel, state, s);
  const auto row = kernel.counts().row(state.x);
  const Index next = locate(row, state.u);
  const long long excess = state.u - prefix(row, next);
  const long long back = prefix(kernel.reverse_counts().row(next), state.x);
  return {next, mod(s + excess + back, kernel.denominator())};
}

UniformExtState inverse(const UniformKernel& kernel, const UniformExtState& state, int s) {
  check_state(kernel, state, s);
  const int shifted = mod(static_cast<long long>(state.u) - s, kernel.denominator());
  const auto back_row = kernel.reverse_counts().row(state.x);
  const Index prev = locate(back_row, shifted);
  const long long excess = shifted - prefix(back_row, prev);
  const long long fwd = prefix(kernel.counts().row(prev), state.x);
  return {prev, mod(excess + fwd, kernel.denominator())};
}

UniformExtState forward_naive_shift(const UniformKernel& kernel, const UniformExtState& state, int s) {
  check_state(kernel, state, s);
  const Index next = locate(kernel.counts().row(state.x), state.u);
  return {next, mod(static_cast<long long>(s) + state.u, kernel.denominator())};
}

PermutationVerdict verify_permutation(const UniformKernel& kernel, int s, const UniformMap& map) {
  const Index m = kernel.size();
  const Index q = kernel.denominator();
  if (m * q > kEnumerationLimit) throw EnumerationTooLarge("extended space too large to enumerate");

  PermutationVerdict verdict;
  std::vector<int> hits(static_cast<std::size_t>(m * q), 0);
  verdict.image.reserve(hits.size());
  for (Index x = 0; x < m; ++x) {
    for (int u = 0; u < q; ++u) {
      const UniformExtState out = map(kernel, {x, u}, s);
      verdict.image.push_back(out);
      ++hits[static_cast<std::size_t>(out.x * q + out.u)];
    }
  }
  for (Index x = 0; x < m; ++x) {
    for (int u = 0; u < q; ++u) {
      const int h = hits[static_cast<std::size_t>(x * q + u)];
      if (h >= 2) verdict.collisions.push_back({x, u});
      if (h == 0) verdict.unreached.push_back({x, u});
    }
  }
  verdict.bijection = verdict.collisions.empty();
  return verdict;
}

KernelFile read_kernel(std::istream& in) {
  Index m = 0;
  int q = 0;
  if (!(in >> m >> q) || m <= 0) throw InvalidKernel("kernel file must start with \"M Q\"");
  Eigen::MatrixXi counts(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (!(in >> counts(i, j))) throw InvalidKernel("kernel file has too few counts");
    }
  }
  std::optional<Eigen::VectorXd> target;
  double first = 0;
  if (in >> first) {
    Eigen::VectorXd pi(m);
    pi(0) = first;
    for (Index i = 1; i < m; ++i) {
      if (!(in >> pi(i))) throw InvalidKernel("target row must have M entries");
    }
    target = pi;
  }
  std::string trailing;
  if (in >> trailing) throw InvalidKernel("unexpected trailing content in kernel file");
  if (q <= 0) throw InvalidKernel("denominator Q must be positive");
  return {std::move(counts), q, target};
}

UniformKernel reversible4() {
  Eigen::MatrixXi c(4, 4);
  c << 2, 1, 0, 0,
       1, 1, 1, 0,
       0, 1, 1, 1,
       0, 0, 1, 2;
  return UniformKernel(c, 3);
}

UniformKernel nonreversible4() {
  Eigen::MatrixXi c(4, 4);
  c << 2, 2, 0, 0,
       1, 1, 1, 1,
       0, 0, 2, 2,
       1, 1, 1, 1;
  return UniformKernel(c, 4);
}

}  // namespace permcmc::uniform
