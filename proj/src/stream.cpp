#include "permcmc/stream.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "permcmc/distributions.hpp"

namespace permcmc {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

double check_unit(double v) {
  if (!(v >= 0.0 && v < 1.0)) {
    throw std::invalid_argument("driving values must lie in [0, 1)");
  }
  return v;
}

double pattern_value(const Origin& origin, Index i) {
  if (const auto* c = std::get_if<origin::Constant>(&origin)) return c->value;
  if (const auto* r = std::get_if<origin::Repeating>(&origin)) {
    return r->values[static_cast<std::size_t>(i) % r->values.size()];
  }
  return std::get<origin::Explicit>(origin).values[static_cast<std::size_t>(i)];
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("malformed number: " + text);
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(parse_double(item));
  return values;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + kGoldenGamma));
}

std::uint64_t UniformStream::next_bits() {
  ++counter_;
  return mix64(seed_ + counter_ * kGoldenGamma);
}

double UniformStream::next_uniform() {
  return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double UniformStream::next_open_uniform() {
  return (static_cast<double>(next_bits() >> 11) + 0.5) * 0x1.0p-53;
}

double UniformStream::next_normal() {
  return normal_quantile(next_open_uniform());
}

DrivingSequence generate(const Origin& origin, Index length, bool needs_t, const DeltaSampler& delta_sampler,
                         std::uint64_t delta_seed) {
  if (length < 0) throw std::invalid_argument("driving sequence length must be non-negative");

  DrivingSequence seq;
  seq.origin = origin;
  seq.s.resize(length);
  if (needs_t) seq.t.resize(length);

  const auto* seeded = std::get_if<origin::Seeded>(&origin);
  if (!seeded) {
    if (const auto* c = std::get_if<origin::Constant>(&origin)) check_unit(c->value);
    if (const auto* r = std::get_if<origin::Repeating>(&origin)) {
      if (r->values.empty()) throw std::invalid_argument("repeating pattern needs at least one value");
      for (double v : r->values) check_unit(v);
    }
    if (const auto* e = std::get_if<origin::Explicit>(&origin)) {
      if (static_cast<Index>(e->values.size()) < length) {
        throw std::invalid_argument("explicit driving sequence is shorter than requested");
      }
      for (double v : e->values) check_unit(v);
    }
  }

  UniformStream stream(seeded ? seeded->seed : delta_seed);
  for (Index i = 0; i < length; ++i) {
    if (seeded) {
      seq.s(i) = stream.next_uniform();
      if (needs_t) seq.t(i) = stream.next_uniform();
    } else {
      seq.s(i) = pattern_value(origin, i);
      if (needs_t) seq.t(i) = seq.s(i);
    }
    if (delta_sampler) {
      Eigen::VectorXd d = delta_sampler(stream);
      if (i == 0) seq.delta.resize(length, d.size());
      if (d.size() != seq.delta.cols()) throw std::invalid_argument("delta sampler changed dimension");
      seq.delta.row(i) = d.transpose();
    }
  }
  return seq;
}

Origin parse_origin(const std::string& pattern, std::uint64_t seed) {
  if (pattern == "random") return origin::Seeded{seed};
  const auto colon = pattern.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("unknown s-pattern: " + pattern);
  const std::string kind = pattern.substr(0, colon);
  const std::string rest = pattern.substr(colon + 1);
  if (kind == "constant") return origin::Constant{check_unit(parse_double(rest))};
  if (kind == "repeat") {
    auto values = parse_list(rest);
    if (values.empty()) throw std::invalid_argument("repeat pattern needs values");
    for (double v : values) check_unit(v);
    return origin::Repeating{std::move(values)};
  }
  throw std::invalid_argument("unknown s-pattern: " + pattern);
}

std::string describe_origin(const Origin& origin) {
  if (std::holds_alternative<origin::Seeded>(origin)) return "random";
  if (const auto* c = std::get_if<origin::Constant>(&origin)) return "constant:" + format_double(c->value);
  if (const auto* r = std::get_if<origin::Repeating>(&origin)) return "repeat:" + join(r->values);
  return "explicit:" + join(std::get<origin::Explicit>(origin).values);
}

void write_sidecar(std::ostream& out, const DrivingSequence& seq) {
  out << "# permcmc driving sequence\n";
  if (const auto* sd = std::get_if<origin::Seeded>(&seq.origin)) {
    out << "# origin seeded " << sd->seed << '\n';
  } else {
    out << "# origin " << describe_origin(seq.origin) << '\n';
  }
  out << "# length " << seq.size() << '\n';
  out << "# component s\n";
  for (Index i = 0; i < seq.s.size(); ++i) out << format_double(seq.s(i)) << '\n';
  if (seq.has_t()) {
    out << "# component t\n";
    for (Index i = 0; i < seq.t.size(); ++i) out << format_double(seq.t(i)) << '\n';
  }
  if (seq.has_delta()) {
    out << "# component delta " << seq.delta.cols() << '\n';
    for (Index i = 0; i < seq.delta.rows(); ++i) {
      for (Index j = 0; j < seq.delta.cols(); ++j) {
        if (j) out << ' ';
        out << format_double(seq.delta(i, j));
      }
      out << '\n';
    }
  }
}

DrivingSequence read_sidecar(std::istream& in) {
  DrivingSequence seq;
  std::string line;
  Index length = -1;
  std::string component;
  Index row = 0;
  Index delta_dim = 0;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "origin") {
        std::string kind;
        hs >> kind;
        if (kind == "seeded") {
          std::uint64_t seed = 0;
          hs >> seed;
          seq.origin = origin::Seeded{seed};
        } else if (kind.rfind("explicit:", 0) == 0) {
          seq.origin = origin::Explicit{parse_list(kind.substr(9))};
        } else {
          seq.origin = parse_origin(kind, 0);
        }
      } else if (key == "length") {
        hs >> length;
      } else if (key == "component") {
        hs >> component;
        row = 0;
        if (length < 0) throw std::invalid_argument("sidecar is missing its length header");
        if (component == "s") {
          seq.s.resize(length);
        } else if (component == "t") {
          seq.t.resize(length);
        } else if (component == "delta") {
          hs >> delta_dim;
          seq.delta.resize(length, delta_dim);
        } else {
          throw std::invalid_argument("unknown sidecar component: " + component);
        }
      }
      continue;
    }
    if (row >= length) throw std::invalid_argument("sidecar has more values than its length header");
    std::istringstream vs(line);
    if (component == "delta") {
      for (Index j = 0; j < delta_dim; ++j) {
        std::string tok;
        vs >> tok;
        seq.delta(row, j) = parse_double(tok);
      }
    } else {
      std::string tok;
      vs >> tok;
      (component == "s" ? seq.s : seq.t)(row) = parse_double(tok);
    }
    ++row;
  }
  return seq;
}

}  // namespace permcmc
