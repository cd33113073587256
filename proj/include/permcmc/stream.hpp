#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace permcmc {

using Eigen::Index;

/// SplitMix64 output finalizer.
std::uint64_t mix64(std::uint64_t z);

/// Seed for an independent sub-stream, derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Counter-based uniform generator.
///
/// Draw number i is mix64(seed + (i + 1) * golden_gamma), i.e. the SplitMix64
/// sequence addressed by position. The full state is (seed, counter), so a
/// stream can be recorded, replayed or forked at any point and produces the
/// same bits on every platform.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  std::uint64_t next_bits();
  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform();
  /// Uniform on the open interval (0, 1).
  double next_open_uniform();
  /// Standard normal via inversion, so the value is platform independent.
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

namespace origin {
struct Seeded {
  std::uint64_t seed = 0;
};
struct Constant {
  double value = 0;
};
struct Repeating {
  std::vector<double> values;
};
struct Explicit {
  std::vector<double> values;
};
}  // namespace origin

using Origin = std::variant<origin::Seeded, origin::Constant, origin::Repeating, origin::Explicit>;

/// Draws one proposal offset from the shared stream.
using DeltaSampler = std::function<Eigen::VectorXd(UniformStream&)>;

/// The fixed values (s, t, delta) that select a permutation or
/// volume-preserving map at each step.
///
/// `delta` holds one offset per row; it has zero rows when no offsets were
/// requested. `t` is empty when not requested.
struct DrivingSequence {
  Eigen::VectorXd s;
  Eigen::VectorXd t;
  Eigen::MatrixXd delta;
  Origin origin;

  Index size() const { return s.size(); }
  bool has_t() const { return t.size() > 0; }
  bool has_delta() const { return delta.rows() > 0; }
};

/// Materialize `length` driving values.
///
/// Seeded origins draw s_i, then t_i, then delta_i for each i from a single
/// stream. Pattern origins (constant, repeating, explicit) fill both s and t
/// from the pattern; offsets for them come from a stream seeded with
/// `delta_seed`. Explicit origins need at least `length` values.
DrivingSequence generate(const Origin& origin, Index length, bool needs_t = false,
                         const DeltaSampler& delta_sampler = {}, std::uint64_t delta_seed = 0);

/// Parse the pattern grammar `random`, `constant:<v>`, `repeat:<v1>,<v2>,...`.
/// `random` maps to a seeded origin with the given seed.
Origin parse_origin(const std::string& pattern, std::uint64_t seed);

/// Inverse of parse_origin for pattern origins; seeded origins print as `random`.
std::string describe_origin(const Origin& origin);

/// Text sidecar: `#`-prefixed header lines naming the origin and each
/// component, then one value (one offset row for delta) per line, in the
/// shortest form that reads back bit-exactly.
void write_sidecar(std::ostream& out, const DrivingSequence& seq);
DrivingSequence read_sidecar(std::istream& in);

}  // namespace permcmc
