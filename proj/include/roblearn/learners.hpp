#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "roblearn/core.hpp"
#include "roblearn/random.hpp"
#include "roblearn/source.hpp"

namespace roblearn {

struct WeightedDataset {
  Dataset data;
  std::vector<double> weights;

  WeightedDataset() = default;
  WeightedDataset(Dataset d, std::vector<double> w) : data(std::move(d)), weights(std::move(w)) { check(); }

  static WeightedDataset uniform(const Dataset& d) { return {d, std::vector<double>(d.size(), 1.0)}; }

  std::size_t size() const { return data.size(); }
  double total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  void check() const {
    if (weights.size() != data.size()) fail(ErrorCode::InvalidArgument, "weights and samples differ in length");
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
  }
  void require_positive() const {
    check();
    if (!(total() > 0.0)) fail(ErrorCode::AllZeroWeights, "every weight is zero");
  }
};

template <Predictor P>
double weighted_error(const P& h, const WeightedDataset& wd) {
  wd.require_positive();
  double bad = 0.0;
  for (std::size_t i = 0; i < wd.size(); ++i)
    if (h.predict(wd.data[i].x) != wd.data[i].y) bad += wd.weights[i];
  return bad / wd.total();
}

// ---- approximate ERM by weighted hinge subgradient descent ----

struct ErmConfig {
  int epochs = 200;
  double step_size = 1.0;  // η_t = step_size / (R² √t), R = max ‖x‖₂
  double lambda_reg = 1e-4;
  bool fit_bias = true;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t rng_seed = 0;
};

namespace detail {

inline double max_sq_norm(const Dataset& d) {
  double r = 1e-12;
  for (const auto& s : d) r = std::max(r, s.x.squaredNorm());
  return r;
}

}  // namespace detail

// Minimizes Σ w_i·max(0, 1 − y_i(⟨v,x_i⟩+b)) + λ/2‖v‖² and returns the iterate
// with the lowest weighted 0-1 error (ties: lower hinge objective, then earliest).
inline LinearModel erm_linear(const WeightedDataset& wd, const ErmConfig& cfg = {}) {
  wd.require_positive();
  if (cfg.epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
  const std::size_t n = wd.size();
  const Index d = wd.data.dim();
  const double W = wd.total();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = wd.weights[i] / W;
  const double r2 = detail::max_sq_norm(wd.data) + (cfg.fit_bias ? 1.0 : 0.0);

  Vector v = Vector::Zero(d);
  double b = 0.0;
  LinearModel best(v, b);
  double best_err = kInf, best_obj = kInf;
  Rng rng(splitmix64(cfg.rng_seed));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  auto evaluate = [&](const Vector& vv, double bb) {
    double err = 0.0, obj = 0.5 * cfg.lambda_reg * vv.squaredNorm();
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] == 0.0) continue;
      const auto& s = wd.data[i];
      const double sc = vv.dot(s.x) + bb;
      if (sign_of(sc) != s.y) err += p[i];
      obj += p[i] * std::max(0.0, 1.0 - s.y * sc);
    }
    if (err < best_err - 1e-15 || (err <= best_err + 1e-15 && obj < best_obj - 1e-15)) {
      best_err = err;
      best_obj = obj;
      best = LinearModel(vv, bb);
    }
  };

  long t = 0;
  const std::size_t bs = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  for (int ep = 0; ep < cfg.epochs; ++ep) {
    if (bs < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += bs) {
      ++t;
      Vector g = cfg.lambda_reg * v;
      double gb = 0.0, mass = 0.0;
      const std::size_t stop = std::min(n, start + bs);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        mass += p[i];
        const auto& s = wd.data[i];
        if (p[i] > 0.0 && s.y * (v.dot(s.x) + b) < 1.0) {
          g.noalias() -= p[i] * s.y * s.x;
          gb -= p[i] * s.y;
        }
      }
      if (bs < n && mass > 0.0) {
        const double sc = 1.0 / mass;
        g = cfg.lambda_reg * v + (g - cfg.lambda_reg * v) * sc;
        gb *= sc;
      }
      const double eta = cfg.step_size / (r2 * std::sqrt(static_cast<double>(t)));
      v -= eta * g;
      if (cfg.fit_bias) b -= eta * gb;
    }
    evaluate(v, b);
  }
  if (best.is_constant() && best_err > 0.0) evaluate(v, b);
  return best;
}

// ---- norm-ball projections ----

inline Vector project_l1_ball(const Vector& w, double radius) {
  if (w.cwiseAbs().sum() <= radius) return w;
  std::vector<double> a(w.size());
  for (Index i = 0; i < w.size(); ++i) a[i] = std::abs(w[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cum += a[k];
    const double t = (cum - radius) / static_cast<double>(k + 1);
    if (a[k] > t) theta = t;
  }
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    const double m = std::max(std::abs(w[i]) - theta, 0.0);
    out[i] = w[i] >= 0.0 ? m : -m;
  }
  return out;
}

// Euclidean projection for q ∈ {1, 2, ∞}; radial rescaling otherwise.
inline Vector project_lq_ball(const Vector& w, double q, double radius) {
  check_norm(q);
  if (q == 1.0) return project_l1_ball(w, radius);
  if (std::isinf(q)) return w.cwiseMax(-radius).cwiseMin(radius);
  const double n = lp_norm(w, q);
  if (n <= radius) return w;
  return w * (radius / n);
}

// ---- margin SVM used as the barely-robust learner ----

struct SvmResult {
  LinearModel model;
  double beta_hat = 0.0;
};

inline double margin_fraction_above(const LinearModel& m, const Dataset& data, double p, double level) {
  if (data.empty()) return 0.0;
  if (m.is_constant()) return 0.0;
  long c = 0;
  for (const auto& s : data) c += s.y * margin(m, s.x, p) > level ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(data.size());
}

// Hinge loss at normalized margin 2γ: minimize mean max(0, 1 − y(⟨w,x⟩+b)) over
// ‖w‖_q ≤ 1/(2γ). γ = 0 falls back to the regularized SVM of erm_linear.
inline SvmResult svm_margin(const Dataset& data, double gamma, const ErmConfig& cfg = {}, double p = 2.0) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "svm_margin on empty dataset");
  if (!(gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be >= 0");
  const double q = dual_exponent(p);
  if (gamma == 0.0) {
    LinearModel m = erm_linear(WeightedDataset::uniform(data), cfg);
    double acc = 1.0 - zero_one_error(m, data);
    return {m, acc};
  }
  const std::size_t n = data.size();
  const Index d = data.dim();
  const double radius = 1.0 / (2.0 * gamma);
  double G = 0.0;
  for (const auto& s : data) G = std::max(G, lp_norm(s.x, dual_exponent(q)));
  G = std::sqrt(G * G + (cfg.fit_bias ? 1.0 : 0.0)) + 1e-12;

  Vector w = Vector::Zero(d);
  double b = 0.0;
  Vector best_w = w;
  double best_b = b, best_obj = kInf;
  auto objective = [&](const Vector& ww, double bb) {
    double o = 0.0;
    for (const auto& s : data) o += std::max(0.0, 1.0 - s.y * (ww.dot(s.x) + bb));
    return o / static_cast<double>(n);
  };
  const int iters = std::max(cfg.epochs, 1) * 5;
  for (int t = 1; t <= iters; ++t) {
    Vector g = Vector::Zero(d);
    double gb = 0.0;
    for (const auto& s : data)
      if (s.y * (w.dot(s.x) + b) < 1.0) {
        g.noalias() -= s.y * s.x;
        gb -= s.y;
      }
    g /= static_cast<double>(n);
    gb /= static_cast<double>(n);
    const double eta = cfg.step_size * radius / (G * std::sqrt(static_cast<double>(t)));
    w = project_lq_ball(w - eta * g, q, radius);
    if (cfg.fit_bias) b -= eta * gb;
    const double o = objective(w, b);
    if (o < best_obj - 1e-15 && !(w.array() == 0.0).all()) {
      best_obj = o;
      best_w = w;
      best_b = b;
    }
  }
  if ((best_w.array() == 0.0).all()) best_w[0] = 1e-12;
  LinearModel m(best_w, best_b);
  return {m, margin_fraction_above(m, data, p, 2.0 * gamma)};
}

// ---- exact ERM over a finite pool ----

struct PoolErm {
  std::vector<LinearModel> pool;

  LinearModel operator()(const WeightedDataset& wd) const { return pool[argmin(wd)]; }

  std::size_t argmin(const WeightedDataset& wd) const {
    if (pool.empty()) fail(ErrorCode::EmptyPool, "pool ERM with an empty pool");
    wd.require_positive();
    std::size_t best = 0;
    double best_err = kInf;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      double bad = 0.0;
      for (std::size_t i = 0; i < wd.size(); ++i)
        if (pool[k].predict(wd.data[i].x) != wd.data[i].y) bad += wd.weights[i];
      if (bad < best_err) {
        best_err = bad;
        best = k;
      }
    }
    return best;
  }
};

// ---- perceptron ----

struct PerceptronState {
  Vector w;
  long mistakes = 0;
};

inline PerceptronState perceptron_update(PerceptronState st, const Vector& z, int y) {
  if (z.size() != st.w.size()) fail(ErrorCode::DimensionMismatch, "perceptron dimension mismatch");
  if (sign_of(st.w.dot(z)) == y) return st;
  st.w += y * z;
  ++st.mistakes;
  return st;
}

template <class L>
concept OnlineLearner = requires(L& l, const L& cl, const Vector& z, int y) {
  { cl.predictor() } -> std::convertible_to<LinearModel>;
  { l.update(z, y) } -> std::convertible_to<bool>;
  { cl.mistakes() } -> std::convertible_to<long>;
};

class Perceptron {
 public:
  explicit Perceptron(Index d) : st_{Vector::Zero(d), 0} {}
  explicit Perceptron(Vector w0) : st_{std::move(w0), 0} {}

  LinearModel predictor() const { return LinearModel(st_.w, 0.0); }
  bool update(const Vector& z, int y) {
    const long before = st_.mistakes;
    st_ = perceptron_update(std::move(st_), z, y);
    return st_.mistakes != before;
  }
  long mistakes() const { return st_.mistakes; }
  const PerceptronState& state() const { return st_; }

 private:
  PerceptronState st_;
};

// ---- RCN-tolerant surrogates ----

inline double rcn_lambda(double eps, double gamma, double eta) {
  if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::InvalidArgument, "eps must lie in (0,1)");
  if (!(gamma > 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be > 0");
  if (!(eta >= 0.0 && eta < 0.5)) fail(ErrorCode::InvalidArgument, "eta must lie in [0, 0.5)");
  return (eps * gamma / 2.0 + eta) / (1.0 + eps * gamma);
}

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;
};

inline ValueGrad rcn_phi(double s, double lambda, double gamma) {
  if (!(gamma > 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be > 0");
  if (s > gamma) return {lambda * (1.0 - s / gamma), -lambda / gamma};
  return {(1.0 - lambda) * (1.0 - s / gamma), -(1.0 - lambda) / gamma};
}

// η·φ(−z) + (1−η)·φ(z) in closed form.
inline double rcn_expected_phi(double z, double lambda, double gamma, double eta) {
  double v = (eta - lambda) * z / gamma + lambda + eta - 2.0 * lambda * eta;
  if (z >= -gamma && z <= gamma) v += (1.0 - eta) * (1.0 - 2.0 * lambda) * (1.0 - z / gamma);
  if (z < -gamma) v += (1.0 - 2.0 * lambda) * (1.0 - 2.0 * eta - z / gamma);
  return v;
}

inline double glm_link_u(double s, double eta, double gamma) {
  if (s < -gamma) return eta;
  if (s > gamma) return 1.0 - eta;
  return (1.0 - 2.0 * eta) * s / (2.0 * gamma) + 0.5;
}

// ∫₀^a u(s) ds.
inline double glm_link_integral(double a, double eta, double gamma) {
  const double k = (1.0 - 2.0 * eta) / (2.0 * gamma);
  auto mid = [&](double t) { return 0.5 * k * t * t + 0.5 * t; };
  if (a > gamma) return mid(gamma) + (1.0 - eta) * (a - gamma);
  if (a < -gamma) return mid(-gamma) + eta * (a + gamma);
  return mid(a);
}

// Loss ∫₀^{⟨w,x⟩}(u(s) − y₀₁) ds and its derivative in the score.
inline ValueGrad glm_loss(double score, int y, double eta, double gamma) {
  const double y01 = y > 0 ? 1.0 : 0.0;
  return {glm_link_integral(score, eta, gamma) - y01 * score, glm_link_u(score, eta, gamma) - y01};
}

struct RcnConfig {
  double gamma = 0.5;
  double eta = 0.0;
  double eps = 0.1;
  double q = 2.0;
  std::optional<double> lambda;  // unset: rcn_lambda(eps, gamma, eta)
  long steps = 0;                // 0: consume the whole stream
  std::uint64_t rng_seed = 0;

  double resolved_lambda() const { return lambda ? *lambda : rcn_lambda(eps, gamma, eta); }
};

// Mirror descent over ‖w‖_q ≤ 1. q = 1 keeps w = u − v with (u, v) on the
// 2d-simplex under the entropy potential; q ∈ (1,∞) uses ψ = ½‖w‖_q²; q = ∞
// uses Euclidean steps with coordinate clipping.
class MirrorDescent {
 public:
  MirrorDescent(Index d, double q) : d_(d), q_(q), w_(Vector::Zero(d)) {
    if (!(q >= 1.0)) fail(ErrorCode::InvalidNorm, "mirror descent needs q >= 1");
    if (q_ == 1.0) logits_ = Vector::Zero(2 * d);
  }

  const Vector& w() const { return w_; }

  void step(const Vector& g, double eta) {
    if (q_ == 1.0) {
      logits_.head(d_) -= eta * g;
      logits_.tail(d_) += eta * g;
      const double mx = logits_.maxCoeff();
      Vector e = (logits_.array() - mx).exp();
      e /= e.sum();
      logits_ = e.array().log();
      w_ = e.head(d_) - e.tail(d_);
      return;
    }
    if (std::isinf(q_)) {
      w_ = (w_ - eta * g).cwiseMax(-1.0).cwiseMin(1.0);
      return;
    }
    if (q_ == 2.0) {
      w_ -= eta * g;
    } else {
      const double p = q_ / (q_ - 1.0);
      Vector theta = mirror(w_, q_) - eta * g;
      w_ = mirror(theta, p);
    }
    const double n = lp_norm(w_, q_);
    if (n > 1.0) w_ /= n;
  }

  // ∇(½‖v‖_r²).
  static Vector mirror(const Vector& v, double r) {
    const double n = lp_norm(v, r);
    Vector out = Vector::Zero(v.size());
    if (n == 0.0) return out;
    const double scale = std::pow(n, 2.0 - r);
    for (Index i = 0; i < v.size(); ++i) {
      const double a = scale * std::pow(std::abs(v[i]), r - 1.0);
      out[i] = v[i] >= 0.0 ? a : -a;
    }
    return out;
  }

 private:
  Index d_;
  double q_;
  Vector w_;
  Vector logits_;
};

namespace detail {

template <class GradFn>
LinearModel run_mirror_descent(SampleSource& stream, const RcnConfig& cfg, double lipschitz, GradFn&& grad) {
  if (!(cfg.q >= 1.0)) fail(ErrorCode::InvalidNorm, "q must be >= 1");
  const Index d = stream.dim();
  MirrorDescent md(d, cfg.q);
  Vector avg = Vector::Zero(d);
  long t = 0;
  while (cfg.steps <= 0 || t < cfg.steps) {
    auto s = stream.next();
    if (!s) break;
    ++t;
    const double dscore = grad(md.w().dot(s->x), s->y);
    md.step(dscore * s->x, 1.0 / (lipschitz * std::sqrt(static_cast<double>(t))));
    avg += (md.w() - avg) / static_cast<double>(t);
  }
  if (t == 0) fail(ErrorCode::StreamExhausted, "training stream yielded no samples");
  if ((avg.array() == 0.0).all()) avg = md.w();
  return LinearModel(avg, 0.0);
}

}  // namespace detail

inline LinearModel rcn_train_md(SampleSource& stream, const RcnConfig& cfg) {
  const double lambda = cfg.resolved_lambda();
  const double L = std::max(lambda, 1.0 - lambda) / cfg.gamma;
  return detail::run_mirror_descent(stream, cfg, L, [&](double score, int y) {
    return rcn_phi(y * score, lambda, cfg.gamma).grad * y;
  });
}

inline LinearModel glm_train(SampleSource& stream, const RcnConfig& cfg) {
  if (!(cfg.gamma > 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be > 0");
  if (!(cfg.eta >= 0.0 && cfg.eta < 0.5)) fail(ErrorCode::InvalidArgument, "eta must lie in [0, 0.5)");
  return detail::run_mirror_descent(stream, cfg, 1.0, [&](double score, int y) {
    return glm_loss(score, y, cfg.eta, cfg.gamma).grad;
  });
}

}  // namespace roblearn
