#include <sstream>

#include "doctest.h"
#include "permcmc/stream.hpp"
#include "support.hpp"

using namespace permcmc;

TEST_CASE("stream is reproducible and addressable by position") {
  UniformStream a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_bits() == b.next_bits());
  UniformStream c(7, 50);
  UniformStream d(7);
  for (int i = 0; i < 50; ++i) d.next_bits();
  CHECK(c.next_bits() == d.next_bits());
  CHECK(UniformStream(7).next_bits() != UniformStream(8).next_bits());
}

TEST_CASE("derived seeds differ") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(1, 3) == derive_seed(1, 3));
}

TEST_CASE("uniform draws stay in range") {
  UniformStream s(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double o = s.next_open_uniform();
    REQUIRE(o > 0.0);
    REQUIRE(o < 1.0);
  }
}

TEST_CASE("seeded sequence passes a KS test") {
  const auto seq = generate(origin::Seeded{42}, 100000);
  REQUIRE(seq.size() == 100000);
  std::vector<double> xs(seq.s.data(), seq.s.data() + seq.s.size());
  for (double x : xs) REQUIRE((x >= 0 && x < 1));
  CHECK(testing::ks_uniform(xs) < testing::ks_critical_001(xs.size()));
}

TEST_CASE("normal draws have unit variance") {
  UniformStream s(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.next_normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1) < 0.015);
}

TEST_CASE("pattern origins") {
  const auto rep = generate(origin::Repeating{{0.213, 0.631}}, 4);
  CHECK(rep.s(0) == 0.213);
  CHECK(rep.s(1) == 0.631);
  CHECK(rep.s(2) == 0.213);
  CHECK(rep.s(3) == 0.631);

  const auto zero = generate(origin::Constant{0.0}, 3);
  CHECK(zero.s == Eigen::VectorXd::Zero(3));

  const auto withT = generate(origin::Constant{0.25}, 2, true);
  CHECK(withT.has_t());
  CHECK(withT.t(1) == 0.25);

  CHECK_THROWS(generate(origin::Explicit{{0.1, 0.2}}, 3));
  CHECK(generate(origin::Explicit{{0.1, 0.2, 0.3}}, 3).s(2) == 0.3);
}

TEST_CASE("regenerating gives the same sequence") {
  const DeltaSampler offsets = [](UniformStream& st) { return Eigen::VectorXd::Constant(2, st.next_normal()); };
  const auto a = generate(origin::Seeded{5}, 100, true, offsets);
  const auto b = generate(origin::Seeded{5}, 100, true, offsets);
  CHECK(a.s == b.s);
  CHECK(a.t == b.t);
  CHECK(a.delta == b.delta);
  CHECK(a.delta.rows() == 100);
}

TEST_CASE("pattern grammar") {
  CHECK(std::holds_alternative<origin::Seeded>(parse_origin("random", 9)));
  CHECK(std::get<origin::Seeded>(parse_origin("random", 9)).seed == 9);
  CHECK(std::get<origin::Constant>(parse_origin("constant:0.211", 0)).value == 0.211);
  const auto rep = std::get<origin::Repeating>(parse_origin("repeat:0.213,0.631", 0));
  REQUIRE(rep.values.size() == 2);
  CHECK(rep.values[1] == 0.631);
  CHECK(describe_origin(parse_origin("repeat:0.213,0.631", 0)) == "repeat:0.213,0.631");
  CHECK_THROWS(parse_origin("constant:1.5", 0));
  CHECK_THROWS(parse_origin("repeat:", 0));
  CHECK_THROWS(parse_origin("sometimes", 0));
}

TEST_CASE("sidecar round-trips bit-exactly") {
  const DeltaSampler offsets = [](UniformStream& st) { return Eigen::VectorXd::Constant(1, 4 * st.next_normal()); };
  const auto seq = generate(origin::Seeded{17}, 500, true, offsets);
  std::stringstream buf;
  write_sidecar(buf, seq);
  const auto back = read_sidecar(buf);
  CHECK(back.s == seq.s);
  CHECK(back.t == seq.t);
  CHECK(back.delta == seq.delta);
}
