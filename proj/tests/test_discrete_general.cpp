#include "doctest.h"
#include "permcmc/discrete_general.hpp"
#include "permcmc/error.hpp"
#include "permcmc/stream.hpp"
#include "permcmc/verify.hpp"
#include "support.hpp"

using namespace permcmc;
using doctest::Approx;

TEST_CASE("three-state example oracles") {
  const auto k = example_general3();
  const auto a = k.forward({1, 0.5, 0.5}, 0.0);
  CHECK(a.x == 2);
  CHECK(a.r == Approx(0.5).epsilon(1e-15));
  CHECK(a.u == Approx(0.25).epsilon(1e-15));

  const auto b = k.forward({0, 0.3, 0.1}, 0.2);
  CHECK(b.x == 0);
  CHECK(b.r == Approx(0.3).epsilon(1e-14));
  CHECK(b.u == Approx(0.3).epsilon(1e-14));
}

TEST_CASE("reverse kernel") {
  const auto k = example_general3();
  Eigen::Matrix3d expected;
  expected << 1. / 3, 0, 2. / 3, 1, 0, 0, 1. / 6, 1. / 6, 2. / 3;
  CHECK((k.reverse() - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kernel validation") {
  Eigen::Vector3d pi(0.3, 0.1, 0.6);
  Eigen::Matrix3d notInvariant = Eigen::Matrix3d::Constant(1.0 / 3);
  CHECK_THROWS_AS(GeneralKernel<double>(DiscreteTarget<double>(pi), notInvariant), InvalidKernel);
  Eigen::Matrix3d notStochastic = Eigen::Matrix3d::Identity() * 0.5;
  CHECK_THROWS_AS(GeneralKernel<double>(DiscreteTarget<double>(pi), notStochastic), InvalidKernel);
  CHECK_THROWS_AS(DiscreteTarget<double>(Eigen::Vector3d(0.5, 0, 0.5)), InvalidKernel);
}

TEST_CASE("general map round-trips") {
  const auto k = example_general3();
  UniformStream rng(3);
  double worst = 0;
  for (int i = 0; i < 20000; ++i) {
    const GeneralExtState<double> z{static_cast<Index>(rng.next_uniform() * 3), rng.next_uniform(), rng.next_uniform()};
    const double s = rng.next_uniform();
    const auto back = k.inverse(k.forward(z, s), s);
    REQUIRE(back.x == z.x);
    worst = std::max({worst, std::abs(back.r - z.r), std::abs(circular_difference(back.u, z.u))});
    const auto f = k.forward(z, s);
    REQUIRE((f.r >= 0 && f.r < 1 && f.u >= 0 && f.u < 1));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("general map is volume preserving") {
  const auto k = example_general3();
  UniformStream rng(4);
  int used = 0;
  for (int i = 0; i < 300; ++i) {
    const GeneralExtState<double> z{static_cast<Index>(rng.next_uniform() * 3), rng.next_uniform(), rng.next_uniform()};
    const auto det = jacobian_det_general(k, z, rng.next_uniform());
    if (!det) continue;
    ++used;
    CHECK(std::abs(std::abs(*det) - 1) < 1e-5);
  }
  CHECK(used > 250);
}

TEST_CASE("target is stationary for the permutation map") {
  const auto k = example_general3();
  const Eigen::Vector3d pi(0.3, 0.1, 0.6);
  const int replicas = 20000;
  UniformStream rng(5);
  std::vector<GeneralExtState<double>> states(replicas);
  for (auto& z : states) {
    const double v = rng.next_uniform();
    z.x = v < 0.3 ? 0 : v < 0.4 ? 1 : 2;
    z.r = rng.next_uniform();
    z.u = rng.next_uniform();
  }
  const auto shifts = generate(origin::Seeded{77}, 10);
  for (int step = 0; step < 10; ++step) {
    for (auto& z : states) z = k.forward(z, shifts.s(step));
  }
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (const auto& z : states) counts(z.x) += 1;
  CHECK(testing::chi_square_p(counts, pi) > 0.001);
}

TEST_CASE("MH oracle and induced kernel") {
  const auto target = example_mh4_target();
  const Eigen::MatrixXd S = example_mh4_proposal();
  const auto family = ProposalFamily<double>::full_matrix(S);

  const auto z = mh_forward(target, family, GeneralExtState<double>{0, 0.6, 0.9}, 0.0);
  CHECK(z.x == 0);
  CHECK(z.r == Approx(0.6));
  CHECK(z.u == Approx(0.9));

  Eigen::Matrix4d T;
  T << 2. / 3, 1. / 3, 0, 0, 1. / 3, 4. / 9, 2. / 9, 0, 0, 1. / 3, 5. / 12, 1. / 4, 0, 0, 0.5, 0.5;
  CHECK((mh_transition_matrix(target, S) - Eigen::MatrixXd(T)).cwiseAbs().maxCoeff() < 1e-15);

  // The map moves x with the induced probabilities when u is uniform.
  const int grid = 90000;
  for (Index x = 0; x < 4; ++x) {
    Eigen::Vector4d freq = Eigen::Vector4d::Zero();
    for (int i = 0; i < grid; ++i) {
      const auto next = mh_forward(target, family, GeneralExtState<double>{x, 0.37, (i + 0.5) / grid}, 0.61);
      freq(next.x) += 1.0 / grid;
    }
    CHECK((freq - T.row(x).transpose()).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("MH map inverse and involution") {
  const auto target = example_mh4_target();
  const auto family = ProposalFamily<double>::full_matrix(example_mh4_proposal());
  UniformStream rng(6);
  for (int i = 0; i < 20000; ++i) {
    const GeneralExtState<double> z{static_cast<Index>(rng.next_uniform() * 4), rng.next_uniform(), rng.next_uniform()};
    const double s = rng.next_uniform();
    const auto back = mh_inverse(target, family, mh_forward(target, family, z, s), s);
    REQUIRE(back.x == z.x);
    REQUIRE(std::abs(back.r - z.r) < 1e-9);
    REQUIRE(std::abs(circular_difference(back.u, z.u)) < 1e-9);
    const auto twice = mh_forward(target, family, mh_forward(target, family, z, 0.0), 0.0);
    REQUIRE(twice.x == z.x);
    REQUIRE(std::abs(twice.r - z.r) < 1e-9);
    REQUIRE(std::abs(circular_difference(twice.u, z.u)) < 1e-9);
  }
}

TEST_CASE("cyclic group walk round-trips") {
  Eigen::VectorXd pi(6);
  pi << 1, 2, 3, 3, 2, 1;
  const DiscreteTarget<double> target(pi);
  const auto family = ProposalFamily<double>::group_walk(6, {1, 2}, {0.5, 0.5});
  CHECK(family.sample_offset(0.2) == 1);
  CHECK(family.sample_offset(0.7) == 2);
  UniformStream rng(8);
  for (int i = 0; i < 5000; ++i) {
    const GeneralExtState<double> z{static_cast<Index>(rng.next_uniform() * 6), rng.next_uniform(), rng.next_uniform()};
    const double s = rng.next_uniform();
    const Index delta = family.sample_offset(rng.next_uniform());
    const auto back = mh_inverse(target, family, mh_forward(target, family, z, s, delta), s, delta);
    REQUIRE(back.x == z.x);
    REQUIRE(std::abs(back.r - z.r) < 1e-9);
  }
  CHECK_THROWS_AS(ProposalFamily<double>::group_walk(6, {1}, {0.5}), InvalidKernel);
}
