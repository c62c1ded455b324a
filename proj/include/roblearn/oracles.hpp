#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "roblearn/core.hpp"

namespace roblearn {

// ---- attack ----

template <Predictor P>
std::optional<Vector> attack(const P& model, const Sample& s, const PerturbationSpec& U,
                             std::size_t index = kNoIndex) {
  if (const auto* b = std::get_if<LpBall>(&U)) {
    if constexpr (std::same_as<P, LinearModel>) {
      if (model.is_constant()) {
        if (model.predict(s.x) != s.y) return s.x;
        return std::nullopt;
      }
      if (robust_loss(model, s, U, index) == 0) return std::nullopt;
      return worst_case_point(model, s, *b);
    } else {
      fail(ErrorCode::Unsupported, "ball attack is only closed-form for linear models");
    }
  }
  for (auto& z : perturbations(U, s.x, index))
    if (model.predict(z) != s.y) return std::move(z);
  return std::nullopt;
}

// ---- separation oracles ----

struct Inside {};
struct Hyperplane {
  Vector normal;
  double offset = 0.0;
};
using SeparationAnswer = std::variant<Inside, Hyperplane>;

inline bool is_inside(const SeparationAnswer& a) { return std::holds_alternative<Inside>(a); }

// Convex region {z : A (z − x) ≤ b} around the centre x.
struct Polytope {
  Eigen::MatrixXd A;
  Vector b;
};

using RegionDescriptor = std::variant<LpBall, Polytope>;

inline SeparationAnswer separation_oracle(const RegionDescriptor& U, const Vector& x, const Vector& z) {
  if (x.size() != z.size()) fail(ErrorCode::DimensionMismatch, "separation_oracle dimension mismatch");
  if (const auto* poly = std::get_if<Polytope>(&U)) {
    if (poly->A.cols() != x.size() || poly->A.rows() != poly->b.size())
      fail(ErrorCode::DimensionMismatch, "polytope shape mismatch");
    const Vector r = poly->A * (z - x) - poly->b;
    for (Index i = 0; i < r.size(); ++i)
      if (r[i] > 0.0) {
        Vector n = poly->A.row(i).transpose();
        return Hyperplane{n, n.dot(x) + poly->b[i]};
      }
    return Inside{};
  }
  const auto& ball = std::get<LpBall>(U);
  const Vector dz = z - x;
  if (ball.p == 2.0) {
    const double r = dz.norm();
    if (r <= ball.gamma) return Inside{};
    Vector n = dz / r;
    return Hyperplane{n, n.dot(x) + ball.gamma};
  }
  if (std::isinf(ball.p)) {
    Index j = 0;
    for (Index i = 1; i < dz.size(); ++i)
      if (std::abs(dz[i]) > std::abs(dz[j])) j = i;
    if (std::abs(dz[j]) <= ball.gamma) return Inside{};
    Vector n = Vector::Zero(dz.size());
    n[j] = dz[j] > 0.0 ? 1.0 : -1.0;
    return Hyperplane{n, n.dot(x) + ball.gamma};
  }
  if (ball.p == 1.0) {
    if (dz.cwiseAbs().sum() <= ball.gamma) return Inside{};
    Vector n(dz.size());
    for (Index i = 0; i < dz.size(); ++i) n[i] = dz[i] > 0.0 ? 1.0 : (dz[i] < 0.0 ? -1.0 : 0.0);
    return Hyperplane{n, n.dot(x) + ball.gamma};
  }
  fail(ErrorCode::UnsupportedGeometry, "separation oracle supports p in {1, 2, inf} and polytopes");
}

// ---- ellipsoid method ----

struct EllipsoidConfig {
  long max_iters = 0;
  double init_radius = 10.0;
  double feas_slack = 0.1;
  double volume_eps = 1e-6;
};

inline EllipsoidConfig default_ellipsoid_config(Index d, double gamma, double init_radius = 10.0,
                                                double volume_eps = 1e-6) {
  EllipsoidConfig cfg;
  cfg.init_radius = init_radius;
  cfg.volume_eps = volume_eps;
  cfg.feas_slack = gamma > 0.0 ? gamma / 10.0 : 0.01;
  const double bits = std::ceil(std::log2(init_radius / volume_eps));
  cfg.max_iters = static_cast<long>(50.0 * static_cast<double>(d * d) * std::max(bits, 1.0));
  return cfg;
}

inline void validate(const EllipsoidConfig& cfg) {
  if (cfg.max_iters <= 0 || !(cfg.init_radius > 0.0) || !(cfg.feas_slack > 0.0) || !(cfg.volume_eps > 0.0))
    fail(ErrorCode::InvalidArgument, "ellipsoid config fields must all be positive");
}

using SeparationFn = std::function<SeparationAnswer(const Vector&)>;

struct EllipsoidStats {
  long iterations = 0;
};

// Deep-cut ellipsoid method on E = {c + P^{1/2} u : ‖u‖ ≤ 1}, starting from the
// ball of radius init_radius around `start`.
inline std::optional<Vector> ellipsoid_feasible(const SeparationFn& sep, const Vector& start,
                                                const EllipsoidConfig& cfg, EllipsoidStats* stats = nullptr) {
  validate(cfg);
  const Index d = start.size();
  if (d < 1) fail(ErrorCode::InvalidArgument, "ellipsoid dimension must be >= 1");
  const double dd = static_cast<double>(d);
  Vector c = start;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d) * (cfg.init_radius * cfg.init_radius);
  double log_sqrt_det = dd * std::log(cfg.init_radius);
  const double log_floor = dd * std::log(cfg.volume_eps);
  for (long it = 0; it < cfg.max_iters; ++it) {
    if (stats) stats->iterations = it + 1;
    SeparationAnswer ans = sep(c);
    if (is_inside(ans)) return c;
    const auto& h = std::get<Hyperplane>(ans);
    const double viol = h.normal.dot(c) - h.offset;
    if (!(viol > 0.0)) fail(ErrorCode::OracleViolation, "separating hyperplane does not cut the current centre");
    const Vector Pa = P * h.normal;
    const double aPa = h.normal.dot(Pa);
    if (!(aPa > 0.0) || !std::isfinite(aPa)) return std::nullopt;
    const double s = std::sqrt(aPa);
    const double alpha = viol / s;
    if (alpha >= 1.0) return std::nullopt;
    const Vector g = Pa / s;
    if (d == 1) {
      c -= 0.5 * (1.0 + alpha) * g;
      const double f = 0.5 * (1.0 - alpha);
      P *= f * f;
      log_sqrt_det += std::log(f);
    } else {
      c -= (1.0 + dd * alpha) / (dd + 1.0) * g;
      const double scale = dd * dd * (1.0 - alpha * alpha) / (dd * dd - 1.0);
      const double rank1 = 2.0 * (1.0 + dd * alpha) / ((dd + 1.0) * (1.0 + alpha));
      P = scale * (P - rank1 * g * g.transpose());
      P = 0.5 * (P + P.transpose());
      log_sqrt_det += 0.5 * (dd * std::log(scale) +
                             std::log((dd - 1.0) * (1.0 - alpha) / ((dd + 1.0) * (1.0 + alpha))));
    }
    if (!c.allFinite()) return std::nullopt;
    if (log_sqrt_det < log_floor) {
      if (is_inside(sep(c))) return c;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

inline std::optional<Vector> ellipsoid_feasible(const SeparationFn& sep, Index d, const EllipsoidConfig& cfg,
                                                EllipsoidStats* stats = nullptr) {
  return ellipsoid_feasible(sep, Vector::Zero(d), cfg, stats);
}

struct Certificate {
  bool robust = true;
  Vector counterexample;
};

using PointSeparation = std::function<SeparationAnswer(const Vector& center, const Vector& query)>;

inline PointSeparation separation_for(const RegionDescriptor& U) {
  return [U](const Vector& x, const Vector& z) { return separation_oracle(U, x, z); };
}

// Searches U(x) ∩ {z : y(⟨w,z⟩ + bias) ≤ threshold}.
inline Certificate ellipsoid_certify_below(const LinearModel& model, const Sample& s, const PointSeparation& sepU,
                                           const EllipsoidConfig& cfg, double threshold) {
  if (model.dim() != s.x.size()) fail(ErrorCode::DimensionMismatch, "model/sample dimension mismatch");
  if (model.is_constant()) {
    if (s.y * model.bias <= threshold && is_inside(sepU(s.x, s.x))) return {false, s.x};
    return {};
  }
  const Vector yw = s.y * model.w;
  const double off = threshold - s.y * model.bias;
  SeparationFn composed = [&](const Vector& z) -> SeparationAnswer {
    SeparationAnswer a = sepU(s.x, z);
    if (!is_inside(a)) return a;
    if (yw.dot(z) <= off) return Inside{};
    return Hyperplane{yw, off};
  };
  auto z = ellipsoid_feasible(composed, s.x, cfg);
  if (!z) return {};
  return {false, *z};
}

inline Certificate ellipsoid_certify(const LinearModel& model, const Sample& s, const PointSeparation& sepU,
                                     const EllipsoidConfig& cfg) {
  return ellipsoid_certify_below(model, s, sepU, cfg, 0.0);
}

struct RermStats {
  long outer_iterations = 0;
  long certify_calls = 0;
};

// Homogeneous w with y⟨w,z⟩ ≥ τ for every z in every U(x_i), searched inside
// the ‖w‖₂ ≤ init_radius ball. The inner search looks for z with
// y⟨w,z⟩ ≤ τ/2 so every returned cut strictly separates the query.
inline LinearModel rerm_ellipsoid(const Dataset& data, const std::vector<PointSeparation>& sepU,
                                  const EllipsoidConfig& cfg, RermStats* stats = nullptr) {
  validate(cfg);
  if (data.empty()) fail(ErrorCode::EmptyDataset, "rerm_ellipsoid on empty dataset");
  if (sepU.size() != 1 && sepU.size() != data.size())
    fail(ErrorCode::InvalidArgument, "need one separation oracle or one per example");
  const double tau = cfg.feas_slack;
  RermStats local;
  SeparationFn outer = [&](const Vector& w) -> SeparationAnswer {
    const double r = w.norm();
    if (r > cfg.init_radius) return Hyperplane{w / r, cfg.init_radius};
    LinearModel m(w, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      ++local.certify_calls;
      const auto& sep = sepU.size() == 1 ? sepU[0] : sepU[i];
      Certificate c = ellipsoid_certify_below(m, data[i], sep, cfg, 0.5 * tau);
      if (!c.robust) {
        if (m.is_constant()) {
          // No usable counterexample direction from a zero vector; cut with the sample itself.
          return Hyperplane{-data[i].y * data[i].x, -tau};
        }
        return Hyperplane{-data[i].y * c.counterexample, -tau};
      }
    }
    return Inside{};
  };
  EllipsoidStats es;
  auto w = ellipsoid_feasible(outer, data.dim(), cfg, &es);
  local.outer_iterations = es.iterations;
  if (stats) *stats = local;
  if (!w) fail(ErrorCode::NotSeparable, "outer ellipsoid budget exhausted without a robust separator");
  return LinearModel(*w, 0.0);
}

inline LinearModel rerm_ellipsoid(const Dataset& data, const RegionDescriptor& U, const EllipsoidConfig& cfg,
                                  RermStats* stats = nullptr) {
  return rerm_ellipsoid(data, std::vector<PointSeparation>{separation_for(U)}, cfg, stats);
}

}  // namespace roblearn
