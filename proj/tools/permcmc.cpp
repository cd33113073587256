// permcmc: run the verification suites and the sampling experiments, writing
// CSV output and a manifest that `permcmc rerun` can replay.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "permcmc/importance.hpp"
#include "permcmc/parallel.hpp"
#include "permcmc/verify.hpp"

namespace fs = std::filesystem;
using namespace permcmc;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Resolved parameters in the order they were declared, for the manifest.
using Params = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const fs::path& dir, const std::string& command, const Params& params) {
  std::ofstream out(dir / "manifest.txt");
  out << "command=" << command << '\n';
  for (const auto& [k, v] : params) out << k << '=' << v << '\n';
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + out + "'");
  return dir;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
}

// verify

struct VerifyArgs {
  std::string subject;
  Index round_trips = 100000;
  Index jacobian_points = 1000;
  std::uint64_t seed = 12345;
};

int cmd_verify(const VerifyArgs& args) {
  VerifyOptions options;
  options.round_trips = args.round_trips;
  options.jacobian_points = args.jacobian_points;
  options.seed = args.seed;

  VerifyReport report;
  if (is_builtin(args.subject)) {
    report = verify_builtin(args.subject, options);
  } else {
    std::ifstream in(args.subject);
    if (!in) {
      std::string names;
      for (const auto& n : builtin_subjects()) names += " " + n;
      throw UsageError("'" + args.subject + "' is neither a kernel file nor a builtin (" + names.substr(1) + ")");
    }
    try {
      report = verify_kernel_file(in, args.subject, options);
    } catch (const std::invalid_argument& e) {
      throw UsageError(args.subject + ": " + e.what());
    }
  }
  print_report(std::cout, report);
  return report.passed() ? kOk : kCheckFailed;
}

// ising / truncnorm

struct ChainArgs {
  Index chains = 100;
  Index iterations = 1000;
  Index burn_in = 0;
  std::string mode = "permutation";
  std::uint64_t seed = 1;
  std::string s_pattern = "random";
  std::string out;
};

void add_chain_options(CLI::App* app, ChainArgs& a) {
  app->add_option("--chains", a.chains, "number of parallel chains")->capture_default_str();
  app->add_option("--iters", a.iterations, "iterations (full sweeps) per chain")->capture_default_str();
  app->add_option("--burn-in", a.burn_in, "iterations discarded before estimating")->capture_default_str();
  app->add_option("--mode", a.mode, "permutation, coupled or standard")->capture_default_str();
  app->add_option("--seed", a.seed, "master seed")->capture_default_str();
  app->add_option("--s-pattern", a.s_pattern, "random, constant:<v> or repeat:<v1>,<v2>,...")->capture_default_str();
  app->add_option("--out", a.out, "output directory for CSV files and the manifest");
}

Params chain_params(const ChainArgs& a) {
  return {{"chains", std::to_string(a.chains)}, {"iters", std::to_string(a.iterations)},
          {"burn-in", std::to_string(a.burn_in)}, {"mode", a.mode},
          {"seed", std::to_string(a.seed)},       {"s-pattern", a.s_pattern}};
}

RunConfig make_config(const ChainArgs& a) {
  RunConfig c;
  c.chains = a.chains;
  c.iterations = a.iterations;
  c.burn_in = a.burn_in;
  c.seed = a.seed;
  c.s_pattern = a.s_pattern;
  try {
    c.mode = parse_chain_mode(a.mode);
    parse_origin(a.s_pattern, 0);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

template <std::size_t N>
void print_estimates(const std::vector<EstimateRow>& rows, const reference::Value (&refs)[N]) {
  std::printf("%-18s %12s %10s %20s  %s\n", "statistic", "estimate", "se", "reference", "consistent");
  for (const auto& row : rows) {
    for (const auto& ref : refs) {
      if (row.name != ref.name) continue;
      char refbuf[48];
      std::snprintf(refbuf, sizeof refbuf, "%.4f +- %.4f", ref.value, ref.se);
      const char* verdict = consistent_with(row, ref.value, ref.se) ? "yes" : "NO";
      if (row.se_defined) {
        std::printf("%-18s %12.4f %10.4f %20s  %s\n", row.name.c_str(), row.estimate, row.se, refbuf, verdict);
      } else {
        std::printf("%-18s %12.4f %10s %20s  %s\n", row.name.c_str(), row.estimate, "NA", refbuf, verdict);
      }
    }
  }
}

void report_run(const RunConfig& config, const TraceSet& traces) {
  if (traces.coalescence) {
    std::printf("coalescence: all chains equal from iteration %ld\n", static_cast<long>(*traces.coalescence));
  } else {
    std::printf("coalescence: none\n");
  }
  if (!traces.distinct_states.empty()) {
    const Index least = *std::min_element(traces.distinct_states.begin(), traces.distinct_states.end());
    std::printf("distinct extended states: at least %ld of %ld chains\n", static_cast<long>(least),
                static_cast<long>(config.chains));
  }
}

void write_run(const fs::path& dir, const RunConfig& config, const TraceSet& traces,
               const std::vector<EstimateRow>& rows) {
  write_file(dir / "traces.csv", [&](std::ostream& o) { write_traces(o, traces); });
  write_file(dir / "estimates.csv", [&](std::ostream& o) { write_estimates(o, rows); });
  if (config.mode != ChainMode::standard_multi) {
    write_file(dir / "driving.txt", [&](std::ostream& o) { write_sidecar(o, driving_sequence(config)); });
  }
}

template <std::size_t N>
int finish_run(const std::string& command, const RunConfig& config, const ChainArgs& a, Params params,
               const reference::Value (&refs)[N]) {
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const TraceSet traces = run(config);
  const auto rows = estimate(traces, config.burn_in);
  print_estimates(rows, refs);
  report_run(config, traces);
  if (!a.out.empty()) {
    const fs::path dir = prepare_out(a.out);
    write_run(dir, config, traces, rows);
    write_manifest(dir, command, params);
  }
  return kOk;
}

struct IsingArgs {
  ChainArgs chain;
  IsingParams model;
};

int cmd_ising(const IsingArgs& a) {
  RunConfig config = make_config(a.chain);
  if (a.model.rows < 1 || a.model.cols < 1) throw UsageError("lattice must be at least 1 x 1");
  config.model = a.model;
  Params params = {{"rows", std::to_string(a.model.rows)}, {"cols", std::to_string(a.model.cols)},
                   {"beta", fmt(a.model.beta)}};
  for (auto& p : chain_params(a.chain)) params.push_back(p);
  return finish_run("ising", config, a.chain, params, reference::ising);
}

struct TruncNormArgs {
  ChainArgs chain;
  std::string sampler = "gibbs";
  double proposal_sd = 4.0;
};

int cmd_truncnorm(const TruncNormArgs& a) {
  RunConfig config = make_config(a.chain);
  TruncNormParams p;
  try {
    p.sampler = parse_truncnorm_sampler(a.sampler);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  p.proposal_sd = a.proposal_sd;
  config.model = p;
  Params params = {{"sampler", a.sampler}, {"proposal-sd", fmt(a.proposal_sd)}};
  for (auto& q : chain_params(a.chain)) params.push_back(q);
  return finish_run("truncnorm", config, a.chain, params, reference::truncnorm);
}

// istest

struct IsTestArgs {
  Index M = 0;
  Index N = 2000;
  std::vector<double> base_mean{0.0, 0.0};
  double base_sd = 3.0;
  double proposal_sd = 4.0;
  bool stratified = true;
  std::uint64_t seed = 1;
  Index seeds = 1;
  std::string out;
};

int cmd_istest(const IsTestArgs& a) {
  if (a.M < 0) throw UsageError("--M must be non-negative");
  if (a.N < 2) throw UsageError("--N must be at least 2");
  if (a.base_mean.size() != 2) throw UsageError("--base-mean needs two values");
  if (!(a.base_sd > 0) || !(a.proposal_sd > 0)) throw UsageError("standard deviations must be positive");
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");

  fs::path dir;
  if (!a.out.empty()) dir = prepare_out(a.out);

  constexpr double exact = 3.0;
  std::printf("%-8s %12s %10s %10s %8s  %s\n", "seed", "estimate", "se", "ess", "N/ESS", "within 3 se of 3");
  for (Index i = 0; i < a.seeds; ++i) {
    BananaExperimentConfig c;
    c.M = a.M;
    c.N = a.N;
    c.base_mean = Eigen::Vector2d(a.base_mean[0], a.base_mean[1]);
    c.base_sd = a.base_sd;
    c.proposal_sd = a.proposal_sd;
    c.allocation = a.stratified ? KAllocation::stratified : KAllocation::uniform_random;
    c.seed = a.seed + static_cast<std::uint64_t>(i);
    const auto result = run_banana_experiment(c);
    const auto& e = result.estimate;
    std::printf("%-8lu %12.4f %10.4f %10.1f %8.2f  %s\n", static_cast<unsigned long>(c.seed), e.value, e.se,
                result.ess, static_cast<double>(a.N) / result.ess,
                std::abs(e.value - exact) <= 3 * e.se ? "yes" : "NO");
    if (!a.out.empty()) {
      const fs::path sub = a.seeds == 1 ? dir : dir / ("seed-" + std::to_string(c.seed));
      fs::create_directories(sub);
      const auto f = [](const Eigen::VectorXd& x) { return x(1) * x(1); };
      write_file(sub / "samples.csv", [&](std::ostream& o) { write_samples(o, result.samples, f); });
      write_file(sub / "summary.csv", [&](std::ostream& o) { write_summary(o, e, result.ess); });
    }
  }
  if (!a.out.empty()) {
    write_manifest(dir, "istest",
                   {{"M", std::to_string(a.M)},
                    {"N", std::to_string(a.N)},
                    {"base-mean", fmt(a.base_mean[0]) + "," + fmt(a.base_mean[1])},
                    {"base-sd", fmt(a.base_sd)},
                    {"proposal-sd", fmt(a.proposal_sd)},
                    {"allocation", a.stratified ? "stratified" : "uniform"},
                    {"seed", std::to_string(a.seed)},
                    {"seeds", std::to_string(a.seeds)}});
  }
  return kOk;
}

// rerun

int run_cli(std::vector<std::string> args);

int cmd_rerun(const std::string& manifest, const std::string& out) {
  std::ifstream in(manifest);
  if (!in) throw UsageError("cannot read manifest '" + manifest + "'");
  std::string command;
  std::vector<std::string> args{"permcmc"};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("bad manifest line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "command") {
      command = value;
      args.insert(args.begin() + 1, value);
    } else if (key == "allocation") {
      args.push_back(value == "stratified" ? "--stratified" : "--no-stratified");
    } else {
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  if (command != "ising" && command != "truncnorm" && command != "istest") {
    throw UsageError("manifest names no runnable command");
  }
  args.push_back("--out");
  args.push_back(out.empty() ? fs::path(manifest).parent_path().string() : out);
  return run_cli(std::move(args));
}

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Permutation MCMC experiments and map verification"};
  app.require_subcommand(1);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "check bijection, inverse round-trips and volume preservation");
  v->add_option("subject", verify.subject, "builtin name or kernel file")->required();
  v->add_option("--round-trips", verify.round_trips, "random round-trip and involution trials")->capture_default_str();
  v->add_option("--jacobian-points", verify.jacobian_points, "points for the Jacobian check")->capture_default_str();
  v->add_option("--seed", verify.seed, "seed for the random checks")->capture_default_str();

  IsingArgs ising;
  auto* is = app.add_subcommand("ising", "parallel Gibbs sampling of a toroidal Ising model");
  is->add_option("--rows", ising.model.rows)->capture_default_str();
  is->add_option("--cols", ising.model.cols)->capture_default_str();
  is->add_option("--beta", ising.model.beta)->capture_default_str();
  add_chain_options(is, ising.chain);

  TruncNormArgs tn;
  tn.chain.burn_in = 10;
  auto* t = app.add_subcommand("truncnorm", "parallel sampling of a truncated bivariate normal");
  t->add_option("--sampler", tn.sampler, "gibbs or metropolis")->capture_default_str();
  t->add_option("--proposal-sd", tn.proposal_sd, "Metropolis proposal standard deviation")->capture_default_str();
  add_chain_options(t, tn.chain);

  IsTestArgs ist;
  auto* im = app.add_subcommand("istest", "improved importance sampling for the banana target");
  im->add_option("--M", ist.M, "map applications per trajectory")->capture_default_str();
  im->add_option("--N", ist.N, "number of samples")->capture_default_str();
  im->add_option("--base-mean", ist.base_mean, "base mean as x,y")->delimiter(',')->expected(2)->capture_default_str();
  im->add_option("--base-sd", ist.base_sd)->capture_default_str();
  im->add_option("--proposal-sd", ist.proposal_sd, "random-walk offset standard deviation")->capture_default_str();
  im->add_flag("--stratified,!--no-stratified", ist.stratified, "equal share of start indices (default on)");
  im->add_option("--seed", ist.seed, "first seed")->capture_default_str();
  im->add_option("--seeds", ist.seeds, "number of consecutive seeds to run")->capture_default_str();
  im->add_option("--out", ist.out, "output directory");

  std::string manifest, rerun_out;
  auto* r = app.add_subcommand("rerun", "repeat a run from its manifest");
  r->add_option("manifest", manifest, "manifest.txt written by an earlier run")->required();
  r->add_option("--out", rerun_out, "output directory (default: the manifest's directory)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*v) return cmd_verify(verify);
  if (*is) return cmd_ising(ising);
  if (*t) return cmd_truncnorm(tn);
  if (*im) return cmd_istest(ist);
  return cmd_rerun(manifest, rerun_out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(std::vector<std::string>(argv, argv + argc));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
}
