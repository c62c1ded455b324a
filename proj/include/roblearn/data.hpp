#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roblearn/core.hpp"
#include "roblearn/random.hpp"

namespace roblearn {

// ---- generators ----

struct GaussianPair {
  Vector center_pos;  // label +1
  Vector center_neg;  // label −1
  double sigma = 1.0;
};

struct TwoMoons {
  double noise = 0.1;
};

// Two parallel sheets at ±margin·normal/‖normal‖ from `center`, jittered by
// `spread` (uniform, orthogonal to the normal). Label +1 on the positive sheet.
struct MarginCluster {
  Vector center;
  Vector normal;
  double margin = 1.0;
  double spread = 0.0;
  double weight = 1.0;
};

struct MarginUnion {
  std::vector<MarginCluster> clusters;
};

// 2-D preset for radius γ. One cluster is robust along e1 with a wide e2 spread,
// the other sits at the origin with a tiny e1 margin and a 3γ margin along
// roughly e2. Any single halfspace that is robust on both loses most of one.
inline MarginUnion two_direction_union(double gamma, double spread = 60.0) {
  if (!(gamma > 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be > 0");
  Vector origin = Vector::Zero(2);
  Vector e1(2), nb(2);
  e1 << 1.0, 0.0;
  nb << 0.2, 3.0;
  MarginUnion mu;
  mu.clusters.push_back({origin, e1, 4.0 * gamma, spread * gamma, 1.0});
  mu.clusters.push_back({origin, nb, nb.norm() * gamma, 0.1 * gamma, 1.0});
  return mu;
}

// Points in the unit ℓ2 ball whose component along w* has magnitude uniform in
// [margin_lo, margin_hi]; label is the side of w*.
struct PlantedMargin {
  Vector w_star;
  double margin_lo = 0.0;
  double margin_hi = 1.0;
};

using GenKind = std::variant<GaussianPair, TwoMoons, MarginUnion, PlantedMargin>;

struct GenSpec {
  GenKind kind;
  std::size_t n = 100;
  std::uint64_t rng_seed = 0;
};

namespace detail {

inline Vector uniform_ball(Rng& g, Index d) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = gaussian(g);
  const double r = std::pow(uniform01(g), 1.0 / static_cast<double>(d));
  return v / std::max(v.norm(), 1e-300) * r;
}

}  // namespace detail

inline Dataset generate(const GenSpec& spec) {
  if (spec.n < 1) fail(ErrorCode::InvalidArgument, "generator needs n >= 1");
  Rng g = SeedStream(spec.rng_seed).rng("generate");
  if (const auto* gp = std::get_if<GaussianPair>(&spec.kind)) {
    const Index d = gp->center_pos.size();
    if (d < 1 || gp->center_neg.size() != d) fail(ErrorCode::InvalidArgument, "centers must share a positive dimension");
    if (!(gp->sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be >= 0");
    Dataset out(d);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const int y = uniform01(g) < 0.5 ? 1 : -1;
      Vector x = y > 0 ? gp->center_pos : gp->center_neg;
      for (Index k = 0; k < d; ++k) x[k] += gp->sigma * gaussian(g);
      out.add(std::move(x), y);
    }
    return out;
  }
  if (const auto* tm = std::get_if<TwoMoons>(&spec.kind)) {
    if (!(tm->noise >= 0.0)) fail(ErrorCode::InvalidArgument, "noise must be >= 0");
    Dataset out(2);
    const std::size_t n_out = spec.n / 2, n_in = spec.n - n_out;
    auto angle = [](std::size_t i, std::size_t k) {
      return k <= 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(k - 1);
    };
    for (std::size_t i = 0; i < n_out; ++i) {
      const double t = angle(i, n_out);
      Vector x(2);
      x << std::cos(t) + tm->noise * gaussian(g), std::sin(t) + tm->noise * gaussian(g);
      out.add(std::move(x), -1);
    }
    for (std::size_t i = 0; i < n_in; ++i) {
      const double t = angle(i, n_in);
      Vector x(2);
      x << 1.0 - std::cos(t) + tm->noise * gaussian(g), 0.5 - std::sin(t) + tm->noise * gaussian(g);
      out.add(std::move(x), 1);
    }
    return out;
  }
  if (const auto* mu = std::get_if<MarginUnion>(&spec.kind)) {
    if (mu->clusters.empty()) fail(ErrorCode::InvalidArgument, "MarginUnion needs clusters");
    const Index d = mu->clusters[0].center.size();
    std::vector<double> w;
    for (const auto& c : mu->clusters) {
      if (c.center.size() != d || c.normal.size() != d || c.normal.norm() == 0.0)
        fail(ErrorCode::InvalidArgument, "cluster center/normal must share the dimension and be non-zero");
      if (!(c.weight > 0.0) || !(c.spread >= 0.0)) fail(ErrorCode::InvalidArgument, "cluster weight/spread invalid");
      w.push_back(c.weight);
    }
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    Dataset out(d);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const auto& c = mu->clusters[pick(g)];
      const int y = uniform01(g) < 0.5 ? 1 : -1;
      const Vector u = c.normal / c.normal.norm();
      Vector jitter(d);
      for (Index k = 0; k < d; ++k) jitter[k] = c.spread * (2.0 * uniform01(g) - 1.0);
      jitter -= jitter.dot(u) * u;
      out.add(c.center + y * c.margin * u + jitter, y);
    }
    return out;
  }
  const auto& pm = std::get<PlantedMargin>(spec.kind);
  const Index d = pm.w_star.size();
  if (d < 1 || pm.w_star.norm() == 0.0) fail(ErrorCode::InvalidArgument, "planted separator must be non-zero");
  if (!(pm.margin_lo >= 0.0 && pm.margin_lo < pm.margin_hi && pm.margin_lo <= 1.0))
    fail(ErrorCode::InvalidArgument, "planted margin band must satisfy 0 <= lo < hi");
  const Vector u = pm.w_star / pm.w_star.norm();
  Dataset out(d);
  while (out.size() < spec.n) {
    Vector x = detail::uniform_ball(g, d);
    const double s = pm.margin_lo + (std::min(pm.margin_hi, 1.0) - pm.margin_lo) * uniform01(g);
    const int y = uniform01(g) < 0.5 ? 1 : -1;
    Vector perp = x - x.dot(u) * u;
    const double room = std::sqrt(std::max(0.0, 1.0 - s * s));
    if (perp.norm() > room) perp *= room / perp.norm();
    out.add(y * s * u + perp, y);
  }
  return out;
}

inline Dataset apply_rcn(const Dataset& data, double eta, std::uint64_t seed) {
  if (!(eta >= 0.0 && eta < 0.5)) fail(ErrorCode::InvalidArgument, "eta must lie in [0, 0.5)");
  Rng g = SeedStream(seed).rng("rcn");
  Dataset out(data.dim());
  out.reserve(data.size());
  for (const auto& s : data) out.add(s.x, uniform01(g) < eta ? -s.y : s.y);
  return out;
}

// ---- CSV ----

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
  }
  return out;
}

inline std::optional<double> parse_real(const std::string& s) {
  std::string_view v(s);
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  if (v.empty()) return std::nullopt;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  std::size_t row = 0;
  bool first = true;
  Dataset out;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_csv(line);
    if (first) {
      first = false;
      bool numeric = true;
      for (const auto& f : fields) numeric = numeric && detail::parse_real(f).has_value();
      if (!numeric) continue;  // header
    }
    if (width == 0) width = fields.size();
    if (fields.size() < 2)
      fail(ErrorCode::ParseError, name + ":" + std::to_string(row) + ": need at least one feature and a label");
    if (fields.size() != width)
      fail(ErrorCode::ParseError, name + ":" + std::to_string(row) + ": expected " + std::to_string(width) +
                                      " columns, found " + std::to_string(fields.size()));
    Vector x(static_cast<Index>(width - 1));
    for (std::size_t c = 0; c + 1 < width; ++c) {
      auto v = detail::parse_real(fields[c]);
      if (!v || !std::isfinite(*v))
        fail(ErrorCode::ParseError, name + ":" + std::to_string(row) + ":" + std::to_string(c + 1) +
                                        ": not a finite number: '" + fields[c] + "'");
      x[static_cast<Index>(c)] = *v;
    }
    auto y = detail::parse_real(fields.back());
    if (!y || (*y != 1.0 && *y != -1.0))
      fail(ErrorCode::ParseError, name + ":" + std::to_string(row) + ":" + std::to_string(width) +
                                      ": label must be -1 or +1, got '" + fields.back() + "'");
    out.add(std::move(x), *y > 0 ? 1 : -1);
  }
  if (out.empty()) fail(ErrorCode::EmptyDataset, name + ": no data rows");
  return out;
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return parse_csv(in, path);
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  for (Index k = 0; k < data.dim(); ++k) out << 'x' << k << ',';
  out << "y\n";
  for (const auto& s : data) {
    for (Index k = 0; k < s.x.size(); ++k) out << format_real(s.x[k]) << ',';
    out << s.y << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  write_csv(out, data);
  if (!out) fail(ErrorCode::IoError, "write to '" + path + "' failed");
}

inline std::vector<Vector> points_of(const Dataset& d) {
  std::vector<Vector> out;
  out.reserve(d.size());
  for (const auto& s : d) out.push_back(s.x);
  return out;
}

}  // namespace roblearn
