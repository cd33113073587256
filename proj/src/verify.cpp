#include "permcmc/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/LU>

#include "permcmc/models.hpp"

namespace permcmc {

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void print_report(std::ostream& out, const VerifyReport& report) {
  out << "verify " << report.subject << '\n';
  for (const auto& c : report.checks) {
    char worst[32] = "";
    if (c.worst > 0) std::snprintf(worst, sizeof worst, "  worst %.3g", c.worst);
    out << "  " << (c.passed ? "PASS" : "FAIL") << "  " << c.name << worst;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  out << "result: " << (report.passed() ? "PASS" : "FAIL") << '\n';
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Collects the worst error for one named check.
struct ErrorTracker {
  std::string name;
  double tolerance;
  double worst = 0;
  Index failures = 0;
  Index count = 0;

  void add(double err) {
    ++count;
    if (!(err <= tolerance)) ++failures;  // NaN counts as a failure
    if (!(err <= worst)) worst = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
  }
  CheckResult result() const {
    CheckResult c;
    c.name = name;
    c.worst = worst;
    c.passed = failures == 0 && count > 0;
    c.detail = std::to_string(count) + " cases";
    if (failures > 0) c.detail += ", " + std::to_string(failures) + " over tolerance " + fmt("%.0e", tolerance);
    return c;
  }
};

// Counts outputs outside [0, 1).
struct RangeTracker {
  std::string name;
  Index violations = 0;
  Index count = 0;

  void add(std::initializer_list<double> values) {
    ++count;
    for (double v : values) {
      if (!(v >= 0 && v < 1)) {
        ++violations;
        return;
      }
    }
  }
  CheckResult result() const {
    CheckResult c;
    c.name = name;
    c.passed = violations == 0;
    c.detail = std::to_string(count) + " cases";
    if (violations > 0) c.detail += ", " + std::to_string(violations) + " outside [0,1)";
    return c;
  }
};

double unit_gap(double a, double b) { return std::abs(circular_difference(a, b)); }

double interior_uniform(UniformStream& stream) { return 0.01 + 0.98 * stream.next_uniform(); }

using Evaluator = std::function<bool(const Eigen::VectorXd& in, Eigen::VectorXd& out, Index& branch)>;

// Central-difference Jacobian determinant of a piecewise-smooth map. Outputs
// flagged as circular are differenced on the unit circle. Returns nothing if
// any stencil point changes branch or the one-sided differences disagree,
// which signals a kink inside the stencil.
std::optional<double> fd_determinant(const Evaluator& f, const Eigen::VectorXd& p, const std::vector<bool>& circular,
                                     double h) {
  const Index n = p.size();
  Eigen::VectorXd f0;
  Index b0 = 0;
  if (!f(p, f0, b0)) return std::nullopt;
  Eigen::MatrixXd jac(n, n);
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXd pp = p, pm = p;
    pp(i) += h;
    pm(i) -= h;
    Eigen::VectorXd fp, fm;
    Index bp = 0, bm = 0;
    if (!f(pp, fp, bp) || !f(pm, fm, bm) || bp != b0 || bm != b0) return std::nullopt;
    for (Index j = 0; j < n; ++j) {
      const bool circ = circular[static_cast<std::size_t>(j)];
      const double d1 = circ ? circular_difference(fp(j), f0(j)) : fp(j) - f0(j);
      const double d2 = circ ? circular_difference(f0(j), fm(j)) : f0(j) - fm(j);
      if (std::abs(d1 - d2) > 1e-4 * (std::abs(d1) + std::abs(d2)) + 1e-13) return std::nullopt;
      jac(j, i) = (d1 + d2) / (2 * h);
    }
  }
  return jac.determinant();
}

// Draws points until `wanted` usable determinants are found.
CheckResult jacobian_check(const std::string& name, Index wanted, double tolerance,
                           const std::function<std::optional<double>()>& sample) {
  ErrorTracker t{name, tolerance};
  Index attempts = 0;
  while (t.count < wanted && attempts < 50 * wanted) {
    ++attempts;
    if (const auto det = sample()) t.add(std::abs(std::abs(*det) - 1));
  }
  CheckResult c = t.result();
  if (t.count < wanted) {
    c.passed = false;
    c.detail += ", only " + std::to_string(t.count) + " usable points";
  }
  return c;
}

}  // namespace

std::optional<double> jacobian_det_general(const GeneralKernel<double>& kernel, const GeneralExtState<double>& st,
                                           double s, double h) {
  const auto& pi = kernel.target();
  const Evaluator f = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out, Index& branch) {
    const GeneralExtState<double> p{st.x, in(0) / pi(st.x), in(1)};
    if (!(p.r >= 0 && p.r < 1 && p.u >= 0 && p.u < 1)) return false;
    const auto next = kernel.forward(p, s);
    out = Eigen::Vector2d(pi(next.x) * next.r, next.u);
    branch = next.x;
    return true;
  };
  return fd_determinant(f, Eigen::Vector2d(pi(st.x) * st.r, st.u), {false, true}, h);
}

std::optional<double> jacobian_det_mh(const DiscreteTarget<double>& target, const MatrixProposal<double>& proposal,
                                      const GeneralExtState<double>& st, double s, double h) {
  const auto log_target = [&target](Index x) { return target.log_density(x); };
  const Evaluator f = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out, Index& branch) {
    const GeneralExtState<double> p{st.x, in(0) / target(st.x), in(1)};
    if (!(p.r >= 0 && p.r < 1 && p.u >= 0 && p.u < 1)) return false;
    const auto next = mh_forward(proposal, log_target, p, s);
    out = Eigen::Vector2d(target(next.x) * next.r, next.u);
    branch = next.x;
    return true;
  };
  return fd_determinant(f, Eigen::Vector2d(target(st.x) * st.r, st.u), {false, true}, h);
}

std::optional<double> jacobian_det_continuous(
    const std::function<double(double)>& pi,
    const std::function<ContExtState<double>(const ContExtState<double>&)>& step, const ContExtState<double>& st,
    double h) {
  const Evaluator f = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out, Index& branch) {
    const double density = pi(in(0));
    if (!(density > 0)) return false;
    const ContExtState<double> p{in(0), in(1), in(2) / density, in(3)};
    if (!(p.u >= 0 && p.u < 1 && p.r >= 0 && p.r < 1 && p.v >= 0 && p.v < 1)) return false;
    const auto next = step(p);
    out = Eigen::Vector4d(next.x, next.u, pi(next.x) * next.r, next.v);
    branch = 0;
    return out.allFinite();
  };
  const Eigen::Vector4d p(st.x, st.u, pi(st.x) * st.r, st.v);
  return fd_determinant(f, p, {false, true, false, true}, h);
}

VerifyReport verify_uniform_map(const uniform::UniformKernel& kernel, const std::string& subject,
                                const uniform::UniformMap& map) {
  VerifyReport report{subject, {}};
  for (int s = 0; s < kernel.denominator(); ++s) {
    const auto verdict = uniform::verify_permutation(kernel, s, map);
    CheckResult c;
    c.name = "bijection s=" + std::to_string(s);
    c.passed = verdict.bijection;
    if (!verdict.bijection) {
      c.detail = "collisions:";
      for (const auto& st : verdict.collisions) c.detail += " (" + std::to_string(st.x) + "," + std::to_string(st.u) + ")";
    }
    report.checks.push_back(c);
  }
  return report;
}

VerifyReport verify_uniform(const uniform::UniformKernel& kernel, const std::string& subject) {
  VerifyReport report = verify_uniform_map(kernel, subject, uniform::forward);
  Index cases = 0;
  Index mismatches = 0;
  for (int s = 0; s < kernel.denominator(); ++s) {
    for (Index x = 0; x < kernel.size(); ++x) {
      for (int u = 0; u < kernel.denominator(); ++u) {
        const uniform::UniformExtState st{x, u};
        ++cases;
        if (!(uniform::inverse(kernel, uniform::forward(kernel, st, s), s) == st)) ++mismatches;
        if (!(uniform::forward(kernel, uniform::inverse(kernel, st, s), s) == st)) ++mismatches;
      }
    }
  }
  CheckResult c;
  c.name = "exact inverse round-trip";
  c.passed = mismatches == 0;
  c.detail = std::to_string(cases) + " cases";
  if (mismatches > 0) c.detail += ", " + std::to_string(mismatches) + " mismatches";
  report.checks.push_back(c);
  return report;
}

VerifyReport verify_general(const GeneralKernel<double>& kernel, const std::string& subject,
                            const VerifyOptions& options) {
  VerifyReport report{subject, {}};
  UniformStream stream(options.seed);
  const Index m = kernel.size();
  const auto random_state = [&](bool interior) {
    GeneralExtState<double> st;
    st.x = std::min(static_cast<Index>(stream.next_uniform() * static_cast<double>(m)), m - 1);
    st.r = interior ? interior_uniform(stream) : stream.next_uniform();
    st.u = interior ? interior_uniform(stream) : stream.next_uniform();
    return st;
  };

  ErrorTracker trip{"inverse round-trip", options.round_trip_tolerance};
  RangeTracker range{"outputs in [0,1)"};
  for (Index i = 0; i < options.round_trips; ++i) {
    const auto st = random_state(false);
    const double s = stream.next_uniform();
    const auto next = kernel.forward(st, s);
    range.add({next.r, next.u});
    const auto back = kernel.inverse(next, s);
    const double err = back.x != st.x ? std::numeric_limits<double>::infinity()
                                      : std::max(std::abs(back.r - st.r), unit_gap(back.u, st.u));
    trip.add(err);
  }
  report.checks.push_back(trip.result());
  report.checks.push_back(range.result());

  report.checks.push_back(jacobian_check("jacobian |det| = 1", options.jacobian_points, options.jacobian_tolerance, [&] {
    const auto st = random_state(true);
    return jacobian_det_general(kernel, st, stream.next_uniform());
  }));
  return report;
}

VerifyReport verify_mh(const DiscreteTarget<double>& target, const Eigen::MatrixXd& proposal_matrix,
                       const std::string& subject, const VerifyOptions& options) {
  VerifyReport report{subject, {}};
  const MatrixProposal<double> proposal(proposal_matrix);
  const auto log_target = [&target](Index x) { return target.log_density(x); };
  UniformStream stream(options.seed);
  const Index m = target.size();
  const auto random_state = [&](bool interior) {
    GeneralExtState<double> st;
    st.x = std::min(static_cast<Index>(stream.next_uniform() * static_cast<double>(m)), m - 1);
    st.r = interior ? interior_uniform(stream) : stream.next_uniform();
    st.u = interior ? interior_uniform(stream) : stream.next_uniform();
    return st;
  };
  const auto distance = [](const GeneralExtState<double>& a, const GeneralExtState<double>& b) {
    if (a.x != b.x) return std::numeric_limits<double>::infinity();
    return std::max(std::abs(a.r - b.r), unit_gap(a.u, b.u));
  };

  ErrorTracker trip{"inverse round-trip", options.round_trip_tolerance};
  RangeTracker range{"outputs in [0,1)"};
  for (Index i = 0; i < options.round_trips; ++i) {
    const auto st = random_state(false);
    const double s = stream.next_uniform();
    const auto next = mh_forward(proposal, log_target, st, s);
    range.add({next.r, next.u});
    trip.add(distance(mh_inverse(proposal, log_target, next, s), st));
  }
  report.checks.push_back(trip.result());
  report.checks.push_back(range.result());

  ErrorTracker involution{"involution at s=0", options.round_trip_tolerance};
  for (Index i = 0; i < options.involution_states; ++i) {
    const auto st = random_state(false);
    const auto once = mh_forward(proposal, log_target, st, 0.0);
    const double err = std::max(distance(mh_forward(proposal, log_target, once, 0.0), st),
                                distance(mh_inverse(proposal, log_target, st, 0.0), once));
    involution.add(err);
  }
  report.checks.push_back(involution.result());

  report.checks.push_back(jacobian_check("jacobian |det| = 1", options.jacobian_points, options.jacobian_tolerance, [&] {
    const auto st = random_state(true);
    return jacobian_det_mh(target, proposal, st, stream.next_uniform());
  }));
  return report;
}

VerifyReport verify_continuous(const VerifyOptions& options) {
  VerifyReport report{"continuous", {}};
  UniformStream stream(options.seed);
  const TruncNormModel model;

  using State = ContExtState<double>;
  const auto distance = [](const State& a, const State& b) {
    const double dx = std::abs(a.x - b.x) / std::max(1.0, std::abs(b.x));
    return std::max({dx, unit_gap(a.u, b.u), unit_gap(a.r, b.r), unit_gap(a.v, b.v)});
  };
  // A random truncated-normal conditional with a point drawn from it.
  const auto random_conditional = [&](bool interior) {
    const Index axis = stream.next_uniform() < 0.5 ? 0 : 1;
    const Index other = 1 - axis;
    const double given = model.lower(other) + (model.upper(other) - model.lower(other)) * stream.next_open_uniform();
    const auto law = truncnorm_conditional(model, axis, given);
    State st;
    st.x = law.inv_cdf(interior ? interior_uniform(stream) : stream.next_open_uniform());
    st.u = interior ? interior_uniform(stream) : stream.next_uniform();
    st.r = interior ? interior_uniform(stream) : stream.next_uniform();
    st.v = interior ? interior_uniform(stream) : stream.next_uniform();
    return std::make_pair(law, st);
  };

  // Truncated-normal Gibbs.
  {
    ErrorTracker trip{"gibbs round-trip (truncated normal)", options.round_trip_tolerance};
    RangeTracker range{"gibbs outputs in [0,1)"};
    for (Index i = 0; i < options.round_trips; ++i) {
      const auto [law, st] = random_conditional(false);
      const double s = stream.next_uniform();
      const double t = stream.next_uniform();
      const auto next = gibbs_forward(law, st, s, t);
      range.add({next.u, next.r, next.v});
      trip.add(distance(gibbs_inverse(law, next, s, t), st));
    }
    report.checks.push_back(trip.result());
    report.checks.push_back(range.result());
    report.checks.push_back(jacobian_check("gibbs jacobian |det| = 1", options.jacobian_points,
                                           options.jacobian_tolerance, [&]() -> std::optional<double> {
                                             const auto [law, st] = random_conditional(true);
                                             const double s = stream.next_uniform();
                                             const double t = stream.next_uniform();
                                             return jacobian_det_continuous(
                                                 [&law = law](double x) { return law.density(x); },
                                                 [&law = law, s, t](const State& p) { return gibbs_forward(law, p, s, t); },
                                                 st);
                                           }));
  }

  // Reversible Gaussian autoregressive kernel through the general map.
  {
    const GaussianAr1Family family(0.8);
    const NormalLaw<double> stationary(0.0, 1.0);
    const auto random_state = [&](bool interior) {
      State st;
      st.x = stationary.inv_cdf(interior ? interior_uniform(stream) : stream.next_open_uniform());
      st.u = interior ? interior_uniform(stream) : stream.next_open_uniform();
      st.r = interior ? interior_uniform(stream) : stream.next_uniform();
      st.v = interior ? interior_uniform(stream) : stream.next_uniform();
      return st;
    };
    ErrorTracker trip{"general-kernel round-trip (autoregressive)", options.round_trip_tolerance};
    ErrorTracker twice{"reversible kernel at s=0 applied twice", options.round_trip_tolerance};
    for (Index i = 0; i < options.round_trips; ++i) {
      const State st = random_state(false);
      const double s = stream.next_uniform();
      const double t = stream.next_uniform();
      trip.add(distance(general_inverse(family, family, general_forward(family, family, st, s, t), s, t), st));
      if (i < options.involution_states) {
        const State two = general_forward(family, family, general_forward(family, family, st, 0.0, 0.0), 0.0, 0.0);
        twice.add(std::max(std::abs(two.x - st.x) / std::max(1.0, std::abs(st.x)), unit_gap(two.u, st.u)));
      }
    }
    report.checks.push_back(trip.result());
    report.checks.push_back(twice.result());
    report.checks.push_back(jacobian_check(
        "general-kernel jacobian |det| = 1", options.jacobian_points, options.jacobian_tolerance, [&] {
          const State st = random_state(true);
          const double s = stream.next_uniform();
          const double t = stream.next_uniform();
          return jacobian_det_continuous([&](double x) { return stationary.density(x); },
                                         [&](const State& p) { return general_forward(family, family, p, s, t); }, st);
        }));
  }

  // Random-walk Metropolis on one truncated-normal coordinate.
  {
    const auto random_case = [&](bool interior) {
      auto [law, st] = random_conditional(interior);
      const double delta = 4.0 * stream.next_normal();
      return std::make_tuple(law, st, delta);
    };
    const auto log_of = [](const TruncatedNormalLaw<double>& law) {
      return [law](double x) {
        const double d = law.density(x);
        return d > 0 ? std::log(d) : -std::numeric_limits<double>::infinity();
      };
    };
    ErrorTracker trip{"metropolis round-trip (truncated normal)", options.round_trip_tolerance};
    ErrorTracker involution{"metropolis involution at s=0", options.round_trip_tolerance};
    RangeTracker range{"metropolis outputs in [0,1)"};
    for (Index i = 0; i < options.round_trips; ++i) {
      const auto [law, st, delta] = random_case(false);
      const auto lt = log_of(law);
      const double s = stream.next_uniform();
      const auto next = metropolis_component_forward(lt, delta, st, s);
      range.add({next.u, next.r, next.v});
      trip.add(distance(metropolis_component_inverse(lt, delta, next, s), st));
      if (i < options.involution_states) {
        const auto once = metropolis_component_forward(lt, delta, st, 0.0);
        involution.add(distance(metropolis_component_forward(lt, delta, once, 0.0), st));
      }
    }
    report.checks.push_back(trip.result());
    report.checks.push_back(involution.result());
    report.checks.push_back(range.result());
    report.checks.push_back(jacobian_check(
        "metropolis jacobian |det| = 1", options.jacobian_points, options.jacobian_tolerance, [&] {
          const auto [law, st, delta] = random_case(true);
          const auto lt = log_of(law);
          const double s = stream.next_uniform();
          return jacobian_det_continuous([&law = law](double x) { return law.density(x); },
                                         [&](const State& p) { return metropolis_component_forward(lt, delta, p, s); },
                                         st);
        }));
  }
  return report;
}

GeneralKernel<double> example_general3() {
  Eigen::Vector3d pi(0.3, 0.1, 0.6);
  Eigen::Matrix3d T;
  T << 1.0 / 3, 1.0 / 3, 1.0 / 3,
       0.0, 0.0, 1.0,
       1.0 / 3, 0.0, 2.0 / 3;
  return GeneralKernel<double>(DiscreteTarget<double>(pi), T);
}

DiscreteTarget<double> example_mh4_target() {
  return DiscreteTarget<double>(Eigen::Vector4d(1.0 / 3, 1.0 / 3, 2.0 / 9, 1.0 / 9));
}

Eigen::MatrixXd example_mh4_proposal() {
  Eigen::MatrixXd S(4, 4);
  S << 1.0 / 2, 1.0 / 2, 0.0, 0.0,
       1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0,
       0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3,
       0.0, 0.0, 1.0 / 2, 1.0 / 2;
  return S;
}

std::vector<std::string> builtin_subjects() {
  return {"reversible4", "nonreversible4", "broken-u-update", "general3", "mh4", "continuous"};
}

bool is_builtin(const std::string& name) {
  const auto names = builtin_subjects();
  return std::find(names.begin(), names.end(), name) != names.end();
}

VerifyReport verify_builtin(const std::string& name, const VerifyOptions& options) {
  if (name == "reversible4") return verify_uniform(uniform::reversible4(), name);
  if (name == "nonreversible4") return verify_uniform(uniform::nonreversible4(), name);
  if (name == "broken-u-update") return verify_uniform_map(uniform::reversible4(), name, uniform::forward_naive_shift);
  if (name == "general3") return verify_general(example_general3(), name, options);
  if (name == "mh4") return verify_mh(example_mh4_target(), example_mh4_proposal(), name, options);
  if (name == "continuous") return verify_continuous(options);
  throw std::invalid_argument("unknown builtin '" + name + "'");
}

VerifyReport verify_kernel_file(std::istream& in, const std::string& subject, const VerifyOptions& options) {
  const auto file = uniform::read_kernel(in);
  if (!file.target) return verify_uniform(uniform::UniformKernel(file.counts, file.denominator), subject);
  const Eigen::MatrixXd T = file.counts.cast<double>() / static_cast<double>(file.denominator);
  return verify_general(GeneralKernel<double>(DiscreteTarget<double>(*file.target), T), subject, options);
}

}  // namespace permcmc
