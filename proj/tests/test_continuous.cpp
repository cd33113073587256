#include "doctest.h"
#include "permcmc/continuous.hpp"
#include "permcmc/distributions.hpp"
#include "permcmc/error.hpp"
#include "permcmc/stream.hpp"
#include "permcmc/verify.hpp"

using namespace permcmc;
using doctest::Approx;

TEST_CASE("exponential Gibbs oracle") {
  const ExponentialLaw<double> law(1.0);
  const ContExtState<double> z{0.5, 1 - std::exp(-1.0), 0.2, 0.7};
  const auto next = gibbs_forward(law, z, 0.0, 0.0);
  CHECK(next.x == Approx(1.0).epsilon(1e-14));
  CHECK(next.u == Approx(0.39346934028736658).epsilon(1e-14));
  CHECK(next.r == 0.7);
  CHECK(next.v == 0.2);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-300, 1e-20, 1e-5, 0.02425, 0.3, 0.5, 0.77, 0.97575, 1 - 1e-10}) {
    CHECK(normal_cdf(normal_quantile(p)) == Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("truncated normal law") {
  const TruncatedNormalLaw<double> law(0.3, 0.5, -1.0, 2.5);
  CHECK(law.cdf(-1.0) == Approx(0.0));
  CHECK(law.cdf(2.5) == Approx(1.0));
  for (double u : {1e-12, 0.001, 0.25, 0.5, 0.9, 0.999999}) {
    const double x = law.inv_cdf(u);
    CHECK(x > -1.0);
    CHECK(x < 2.5);
    CHECK(law.cdf(x) == Approx(u).epsilon(1e-10));
  }
  // A far tail interval is still inverted accurately.
  const TruncatedNormalLaw<double> tail(0.0, 0.3, 2.0, 2.5);
  CHECK(tail.cdf(tail.inv_cdf(0.5)) == Approx(0.5).epsilon(1e-10));
  CHECK_THROWS_AS(TruncatedNormalLaw<double>(0, 1, 1, 1), InvalidKernel);
}

TEST_CASE("Gibbs map round-trips and rejects points outside the support") {
  const TruncatedNormalLaw<double> law(0.2, 0.31, -1.5, 2.0);
  UniformStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const ContExtState<double> z{law.inv_cdf(rng.next_open_uniform()), rng.next_uniform(), rng.next_uniform(),
                                 rng.next_uniform()};
    const double s = rng.next_uniform(), t = rng.next_uniform();
    const auto back = gibbs_inverse(law, gibbs_forward(law, z, s, t), s, t);
    REQUIRE(std::abs(back.x - z.x) < 1e-9);
    REQUIRE(std::abs(circular_difference(back.u, z.u)) < 1e-9);
    REQUIRE(std::abs(circular_difference(back.r, z.r)) < 1e-12);
    REQUIRE(back.v == z.v);

    const ContPoint<double> p{z.x, z.u};
    const auto pb = gibbs_inverse(law, gibbs_forward(law, p, s), s);
    REQUIRE(std::abs(pb.x - p.x) < 1e-9);
  }
  CHECK_THROWS_AS(gibbs_forward(law, ContExtState<double>{3.0, 0.5, 0.5, 0.5}, 0.0, 0.0), DegenerateLaw);
}

TEST_CASE("general kernel map round-trips") {
  const GaussianAr1Family family(0.8);
  UniformStream rng(2);
  for (int i = 0; i < 10000; ++i) {
    const ContExtState<double> z{rng.next_normal(), rng.next_uniform(), rng.next_uniform(), rng.next_uniform()};
    const double s = rng.next_uniform(), t = rng.next_uniform();
    const auto back = general_inverse(family, family, general_forward(family, family, z, s, t), s, t);
    REQUIRE(std::abs(back.x - z.x) < 1e-9);
    REQUIRE(std::abs(circular_difference(back.u, z.u)) < 1e-9);
  }
}

TEST_CASE("continuous suites pass") {
  VerifyOptions options;
  options.round_trips = 20000;
  options.involution_states = 2000;
  options.jacobian_points = 300;
  const auto report = verify_continuous(options);
  for (const auto& c : report.checks) {
    INFO(c.name << " " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("Metropolis component leaves v alone and rejects outside the support") {
  const auto log_target = [](double x) {
    return x > -1 && x < 2 ? -x * x / 2 : -std::numeric_limits<double>::infinity();
  };
  const ContExtState<double> z{0.5, 0.3, 0.4, 0.9};
  // Both proposals (0.5 -/+ 10) leave the support, so the state stays and u shifts.
  const auto next = metropolis_component_forward(log_target, 10.0, z, 0.25);
  CHECK(next.x == 0.5);
  CHECK(next.r == 0.4);
  CHECK(next.u == Approx(0.55));
  CHECK(next.v == 0.9);
  const auto back = metropolis_component_inverse(log_target, 10.0, next, 0.25);
  CHECK(back.u == Approx(0.3));
}
