#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "roblearn/core.hpp"
#include "roblearn/learners.hpp"
#include "roblearn/oracles.hpp"
#include "roblearn/random.hpp"
#include "roblearn/source.hpp"

namespace roblearn {

// ---- selective classifiers and cascades ----

enum class SelectiveLabel { Minus, Plus, Abstain };

inline SelectiveLabel to_selective(int y) { return y > 0 ? SelectiveLabel::Plus : SelectiveLabel::Minus; }
inline int label_value(SelectiveLabel l) { return l == SelectiveLabel::Plus ? 1 : (l == SelectiveLabel::Minus ? -1 : 0); }

struct SelectiveClassifier {
  LinearModel model;
  PerturbationSpec abstain_spec = LpBall{};
};

inline SelectiveLabel selective_predict(const SelectiveClassifier& sc, const Vector& z) {
  if (const auto* b = std::get_if<LpBall>(&sc.abstain_spec)) {
    if (sc.model.is_constant()) return to_selective(sc.model.predict(z));
    const double m = margin(sc.model, z, b->p);
    if (std::abs(m) > b->gamma) return to_selective(sign_of(m));
    return SelectiveLabel::Abstain;
  }
  if (const auto* o = std::get_if<FiniteOffsets>(&sc.abstain_spec)) {
    int first = 0;
    for (const auto& off : o->offsets) {
      const int p = sc.model.predict(z - off);
      if (first == 0) first = p;
      else if (p != first) return SelectiveLabel::Abstain;
    }
    return to_selective(first);
  }
  fail(ErrorCode::Unsupported, "selective_predict needs a ball or a shared offset list");
}

struct Cascade {
  std::vector<SelectiveClassifier> stages;
  LinearModel fallback;

  int predict(const Vector& z) const {
    for (const auto& s : stages) {
      const SelectiveLabel l = selective_predict(s, z);
      if (l != SelectiveLabel::Abstain) return label_value(l);
    }
    return fallback.predict(z);
  }
};

inline int cascade_predict(const Cascade& c, const Vector& z) { return c.predict(z); }

namespace detail {

struct Slab {
  Vector a;  // unit direction in δ-space (w/‖w‖_q)
  double m0 = 0.0;
  double half = 0.0;
};

// Exists δ in the ball with |m0_s + ⟨a_s,δ⟩| ≤ half_s for every slab and the
// optional halfspace ⟨h,δ⟩ ≤ h_off?
inline bool region_feasible(const LpBall& ball, Index d, const std::vector<Slab>& slabs,
                            const std::optional<std::pair<Vector, double>>& half) {
  if (ball.p != 2.0 && ball.p != 1.0 && !std::isinf(ball.p))
    fail(ErrorCode::UnsupportedGeometry, "cascade ball evaluation supports p in {1, 2, inf}");
  const RegionDescriptor region = ball;
  const Vector origin = Vector::Zero(d);
  SeparationFn sep = [&](const Vector& delta) -> SeparationAnswer {
    SeparationAnswer a = separation_oracle(region, origin, delta);
    if (!is_inside(a)) return a;
    for (const auto& s : slabs) {
      const double v = s.m0 + s.a.dot(delta);
      if (v > s.half) return Hyperplane{s.a, s.half - s.m0};
      if (v < -s.half) return Hyperplane{-s.a, s.half + s.m0};
    }
    if (half && half->first.dot(delta) > half->second) return Hyperplane{half->first, half->second};
    return Inside{};
  };
  EllipsoidConfig cfg;
  const double rad = ball.gamma * std::sqrt(static_cast<double>(d)) * 1.01 + 1e-12;
  cfg.init_radius = rad;
  cfg.volume_eps = 1e-7 * rad;
  cfg.feas_slack = 1.0;
  cfg.max_iters = static_cast<long>(50 * d * d * 30);
  return ellipsoid_feasible(sep, origin, cfg).has_value();
}

}  // namespace detail

// Exact robust loss of a cascade. Ball perturbations go through convex
// feasibility over the per-stage abstention slabs; finite sets are enumerated.
inline int robust_loss(const Cascade& c, const Sample& s, const PerturbationSpec& U, std::size_t index = kNoIndex) {
  if (is_finite_spec(U)) {
    for (const auto& z : perturbations(U, s.x, index))
      if (c.predict(z) != s.y) return 1;
    return 0;
  }
  const auto& ball = std::get<LpBall>(U);
  if (ball.gamma == 0.0) return c.predict(s.x) != s.y ? 1 : 0;
  const Index d = s.x.size();
  const double q = dual_exponent(ball.p);
  std::vector<detail::Slab> slabs;
  for (const auto& st : c.stages) {
    const auto* sb = std::get_if<LpBall>(&st.abstain_spec);
    if (!sb || sb->p != ball.p) fail(ErrorCode::Unsupported, "stage and perturbation norms must match");
    if (st.model.is_constant()) {
      // Never abstains: wrong iff its constant is wrong and it can be reached.
      if (st.model.predict(s.x) != s.y && detail::region_feasible(ball, d, slabs, std::nullopt)) return 1;
      return 0;
    }
    const double nq = lp_norm(st.model.w, q);
    const Vector a = st.model.w / nq;
    const double m0 = st.model.score(s.x) / nq;
    // Wrong prediction needs y·m(z) < −γ_s; the ball moves m by at most γ.
    if (s.y * m0 - ball.gamma < -sb->gamma) {
      if (slabs.empty()) return 1;
      if (detail::region_feasible(ball, d, slabs, std::make_pair(Vector(s.y * a), -sb->gamma - s.y * m0))) return 1;
    }
    if (std::abs(m0) - ball.gamma > sb->gamma) return 0;  // never abstains; later stages unreachable
    slabs.push_back({a, m0, sb->gamma});
  }
  const LinearModel& f = c.fallback;
  if (f.is_constant()) {
    if (f.predict(s.x) == s.y) return 0;
    return detail::region_feasible(ball, d, slabs, std::nullopt) ? 1 : 0;
  }
  const double nq = lp_norm(f.w, q);
  const double m0 = f.score(s.x) / nq;
  if (s.y * m0 - ball.gamma > 0.0) return 0;
  return detail::region_feasible(ball, d, slabs, std::make_pair(Vector(s.y * f.w / nq), -s.y * m0)) ? 1 : 0;
}

// ---- non-robust region and rejection sampling ----

inline bool stage_nonrobust(const SelectiveClassifier& sc, const Vector& x) {
  if (sc.model.is_constant()) return false;
  if (const auto* b = std::get_if<LpBall>(&sc.abstain_spec)) return std::abs(margin(sc.model, x, b->p)) <= 2.0 * b->gamma;
  // Some z ∈ U(x) where the selective classifier abstains.
  const auto& o = std::get<FiniteOffsets>(sc.abstain_spec);
  for (const auto& off : o.offsets)
    if (selective_predict(sc, x + off) == SelectiveLabel::Abstain) return true;
  return false;
}

inline bool in_nonrobust_region(const std::vector<SelectiveClassifier>& stages, const Vector& x) {
  if (stages.empty()) fail(ErrorCode::InvalidArgument, "in_nonrobust_region needs at least one model");
  for (const auto& s : stages)
    if (!stage_nonrobust(s, x)) return false;
  return true;
}

inline bool in_nonrobust_region(const std::vector<LinearModel>& models, const Vector& x, const PerturbationSpec& U) {
  std::vector<SelectiveClassifier> st;
  for (const auto& m : models) st.push_back({m, U});
  return in_nonrobust_region(st, x);
}

struct RejectionResult {
  std::optional<Dataset> data;
  long draws = 0;
};

template <std::predicate<const Vector&> Pred>
RejectionResult rejection_sample(SampleSource& source, Pred&& accept, std::size_t m, long budget_per_draw) {
  if (budget_per_draw < 1) fail(ErrorCode::InvalidArgument, "budget per draw must be >= 1");
  RejectionResult r;
  Dataset out(source.dim());
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    bool got = false;
    for (long b = 0; b < budget_per_draw; ++b) {
      auto s = source.next();
      if (!s) fail(ErrorCode::SourceExhausted, "sample source ran dry during rejection sampling");
      ++r.draws;
      if (accept(s->x)) {
        out.add(std::move(*s));
        got = true;
        break;
      }
    }
    if (!got) return r;
  }
  r.data = std::move(out);
  return r;
}

inline RejectionResult rejection_sample(SampleSource& source, const std::vector<SelectiveClassifier>& stages,
                                        std::size_t m, long budget_per_draw) {
  return rejection_sample(source, [&](const Vector& x) { return in_nonrobust_region(stages, x); }, m, budget_per_draw);
}

// ---- β-RoBoost ----

struct BoostConfig {
  double beta = 0.5;
  double eps = 0.1;
  double delta = 0.1;
  int rounds = 0;              // 0: ⌈ln(2/ε)/β⌉
  std::size_t m_learner = 0;   // m_A
  std::size_t per_round_m = 0; // 0: max{m_A, ⌈4 ln(2T/δ)⌉}
  long sample_budget_per_draw = 0;  // 0: ⌈4/ε⌉
  bool multi_granularity = false;
  std::uint64_t rng_seed = 0;

  int resolved_rounds() const {
    if (rounds > 0) return rounds;
    if (!(beta > 0.0 && beta <= 1.0)) fail(ErrorCode::InvalidArgument, "beta must lie in (0,1]");
    if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::InvalidArgument, "eps must lie in (0,1)");
    return std::max(1, static_cast<int>(std::ceil(std::log(2.0 / eps) / beta)));
  }
  std::size_t resolved_m() const {
    if (per_round_m > 0) return per_round_m;
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
    const double T = resolved_rounds();
    return std::max<std::size_t>(m_learner, static_cast<std::size_t>(std::ceil(4.0 * std::log(2.0 * T / delta))));
  }
  long resolved_budget() const {
    if (sample_budget_per_draw > 0) return sample_budget_per_draw;
    return static_cast<long>(std::ceil(4.0 / eps));
  }
};

struct RoundDiagnostics {
  int round = 0;
  double gamma = 0.0;
  std::size_t sample_size = 0;
  long draws = 0;
  double beta_hat = 0.0;
};

struct RoboostResult {
  Cascade cascade;
  std::vector<RoundDiagnostics> rounds;
  bool stopped_early = false;
};

// Fraction of the sample that h labels correctly everywhere on U⁻¹(U)(x).
inline double robust_fraction_2x(const LinearModel& h, const Dataset& data, const PerturbationSpec& U) {
  if (data.empty()) return 0.0;
  const PerturbationSpec blown = inverse_blowup(U);
  long good = 0;
  for (std::size_t i = 0; i < data.size(); ++i) good += robust_loss(h, data[i], blown) == 0 ? 1 : 0;
  return static_cast<double>(good) / static_cast<double>(data.size());
}

inline PerturbationSpec scaled_spec(const PerturbationSpec& U, double factor) {
  if (const auto* b = std::get_if<LpBall>(&U)) return LpBall{b->p, b->gamma * factor};
  if (factor != 1.0) fail(ErrorCode::Unsupported, "multi-granularity mode needs a ball perturbation set");
  return U;
}

inline double spec_radius(const PerturbationSpec& U) {
  if (const auto* b = std::get_if<LpBall>(&U)) return b->gamma;
  return 0.0;
}

// learner(data, U_t) -> LinearModel
template <class Learner>
RoboostResult beta_roboost(SampleSource& source, Learner&& learner, const BoostConfig& cfg, const PerturbationSpec& U) {
  validate(U);
  if (std::holds_alternative<FinitePerExample>(U))
    fail(ErrorCode::Unsupported, "beta_roboost needs a ball or a shared offset list");
  const int T = cfg.resolved_rounds();
  const std::size_t m = cfg.resolved_m();
  const long budget = cfg.resolved_budget();
  RoboostResult res;
  std::vector<SelectiveClassifier> stages;
  LinearModel last;
  for (int t = 1; t <= T; ++t) {
    const PerturbationSpec Ut = cfg.multi_granularity ? scaled_spec(U, std::ldexp(1.0, -(t - 1))) : U;
    RejectionResult rs;
    if (t == 1) {
      rs = rejection_sample(source, [](const Vector&) { return true; }, m, 1);
    } else {
      rs = rejection_sample(source, stages, m, budget);
    }
    if (!rs.data) {
      res.stopped_early = true;
      res.rounds.push_back({t, spec_radius(Ut), 0, rs.draws, 0.0});
      break;
    }
    LinearModel h = learner(*rs.data, Ut);
    RoundDiagnostics diag{t, spec_radius(Ut), rs.data->size(), rs.draws, robust_fraction_2x(h, *rs.data, Ut)};
    res.rounds.push_back(diag);
    stages.push_back({h, Ut});
    last = h;
  }
  if (stages.empty()) fail(ErrorCode::SourceExhausted, "no round produced a model");
  res.cascade = Cascade{stages, last};
  return res;
}

class PeekSource : public SampleSource {
 public:
  explicit PeekSource(SampleSource& inner) : inner_(&inner) {}
  bool has_next() {
    if (!buf_) buf_ = inner_->next();
    return buf_.has_value();
  }
  std::optional<Sample> next() override {
    if (buf_) {
      auto s = std::move(buf_);
      buf_.reset();
      return s;
    }
    return inner_->next();
  }
  Index dim() const override { return inner_->dim(); }

 private:
  SampleSource* inner_;
  std::optional<Sample> buf_;
};

struct UroboostResult {
  LinearModel h_hat;
  RoboostResult boost;
};

template <class Learner>
UroboostResult beta_uroboost(const Dataset& labeled, SampleSource& unlabeled, Learner&& learner, const BoostConfig& cfg,
                             const PerturbationSpec& U) {
  if (labeled.empty()) fail(ErrorCode::EmptyDataset, "beta_uroboost needs labeled data");
  UroboostResult out;
  out.h_hat = learner(labeled, U);
  PeekSource peek(unlabeled);
  if (!peek.has_next()) {
    out.boost.cascade = Cascade{{SelectiveClassifier{out.h_hat, U}}, out.h_hat};
    out.boost.stopped_early = true;
    return out;
  }
  RelabeledSource<LinearModel> relabeled(peek, out.h_hat);
  out.boost = beta_roboost(relabeled, learner, cfg, U);
  return out;
}

// ---- α-Boost ----

template <Predictor H>
struct MajorityVote {
  std::vector<H> members;

  int predict(const Vector& x) const {
    long s = 0;
    for (const auto& h : members) s += h.predict(x);
    return s >= 0 ? 1 : -1;
  }
};

enum class LossKind { Robust, ZeroOne };
enum class AlphaMode { Default, Agreement };

struct AlphaBoostConfig {
  double alpha = 0.0;  // 0: per mode
  int rounds = 0;      // 0: per mode
  AlphaMode mode = AlphaMode::Default;
  double delta = 1.0 / 3.0;
  int retry_budget = 0;  // 0: ⌈ln(2T/δ)⌉
  std::size_t resample_m = 0;  // 0: dataset size
  std::uint64_t rng_seed = 0;
};

struct AlphaSchedule {
  double alpha;
  int rounds;
};

inline AlphaSchedule alpha_schedule(const AlphaBoostConfig& cfg, std::size_t m) {
  const double lm = std::log(static_cast<double>(std::max<std::size_t>(m, 2)));
  AlphaSchedule s{cfg.alpha, cfg.rounds};
  if (cfg.mode == AlphaMode::Agreement) {
    if (s.rounds <= 0) s.rounds = static_cast<int>(std::ceil(112.0 * lm));
    if (s.alpha <= 0.0) s.alpha = 0.5 * std::log(1.0 + std::sqrt(2.0 * lm / s.rounds));
  } else {
    if (s.rounds <= 0) s.rounds = static_cast<int>(std::ceil(1.0 + 48.0 * lm));
    if (s.alpha <= 0.0) s.alpha = 0.125;
  }
  return s;
}

template <Predictor H>
int sample_loss(const H& h, const Sample& s, LossKind loss, const PerturbationSpec& U, std::size_t index) {
  if (loss == LossKind::ZeroOne) return h.predict(s.x) != s.y ? 1 : 0;
  return robust_loss(h, s, U, index);
}

// D_{t+1}(i) ∝ D_t(i)·e^{−2α} on examples h_t gets (robustly) right.
inline std::vector<double> alpha_update(const std::vector<double>& D, const std::vector<int>& losses, double alpha) {
  std::vector<double> out(D.size());
  double z = 0.0;
  for (std::size_t i = 0; i < D.size(); ++i) {
    out[i] = losses[i] ? D[i] : D[i] * std::exp(-2.0 * alpha);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

template <Predictor H>
struct AlphaBoostResult {
  std::vector<H> models;
  MajorityVote<H> majority;
  std::vector<double> round_errors;
  std::vector<double> agreement;  // per example: fraction of rounds (robustly) correct
  double alpha = 0.0;
  int rounds = 0;
  long retries = 0;
};

template <class WeakLearner>
auto alpha_boost(const Dataset& data, WeakLearner&& weak, const AlphaBoostConfig& cfg, LossKind loss,
                 const PerturbationSpec& U)
    -> AlphaBoostResult<std::decay_t<decltype(weak(std::declval<const WeightedDataset&>()))>> {
  using H = std::decay_t<decltype(weak(std::declval<const WeightedDataset&>()))>;
  if (data.empty()) fail(ErrorCode::EmptyDataset, "alpha_boost on empty dataset");
  const std::size_t m = data.size();
  const AlphaSchedule sch = alpha_schedule(cfg, m);
  const int retry =
      cfg.retry_budget > 0 ? cfg.retry_budget
                           : std::max(1, static_cast<int>(std::ceil(std::log(2.0 * sch.rounds / cfg.delta))));
  const std::size_t m0 = cfg.resample_m > 0 ? cfg.resample_m : m;
  Rng rng = SeedStream(cfg.rng_seed).rng("alpha_boost.resample");

  AlphaBoostResult<H> res;
  res.alpha = sch.alpha;
  res.rounds = sch.rounds;
  std::vector<double> D(m, 1.0 / static_cast<double>(m));
  std::vector<long> correct(m, 0);
  std::vector<int> losses(m);
  for (int t = 0; t < sch.rounds; ++t) {
    std::optional<H> h;
    double err = 1.0;
    for (int attempt = 0; attempt <= retry; ++attempt) {
      WeightedDataset wd;
      if (attempt == 0) {
        wd = WeightedDataset(data, D);
      } else {
        ++res.retries;
        std::discrete_distribution<std::size_t> pick(D.begin(), D.end());
        std::vector<double> counts(m, 0.0);
        for (std::size_t k = 0; k < m0; ++k) counts[pick(rng)] += 1.0;
        wd = WeightedDataset(data, counts);
      }
      H cand = weak(wd);
      double e = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        losses[i] = sample_loss(cand, data[i], loss, U, i);
        e += losses[i] * D[i];
      }
      if (e <= 1.0 / 3.0 + 1e-12) {
        h = std::move(cand);
        err = e;
        break;
      }
    }
    if (!h) fail(ErrorCode::WeakLearnerFailed, "no hypothesis with weighted error <= 1/3 in round " + std::to_string(t + 1));
    for (std::size_t i = 0; i < m; ++i) correct[i] += losses[i] ? 0 : 1;
    D = alpha_update(D, losses, sch.alpha);
    res.round_errors.push_back(err);
    res.models.push_back(std::move(*h));
  }
  res.agreement.resize(m);
  for (std::size_t i = 0; i < m; ++i) res.agreement[i] = static_cast<double>(correct[i]) / sch.rounds;
  res.majority = MajorityVote<H>{res.models};
  return res;
}

template <Predictor H>
std::vector<H> sparsify_majority(const std::vector<H>& models, const Dataset& check, std::size_t N, std::uint64_t seed,
                                 LossKind loss, const PerturbationSpec& U, int retry_limit = 100) {
  if (models.empty()) fail(ErrorCode::InvalidArgument, "sparsify_majority needs models");
  if (N == 0) fail(ErrorCode::InvalidArgument, "sparsify_majority needs N >= 1");
  SeedStream ss(seed);
  for (int a = 0; a < retry_limit; ++a) {
    Rng rng = ss.child(static_cast<std::uint64_t>(a)).rng();
    MajorityVote<H> sub;
    for (std::size_t k = 0; k < N; ++k) sub.members.push_back(models[uniform_index(rng, models.size())]);
    bool ok = true;
    for (std::size_t i = 0; i < check.size() && ok; ++i) ok = sample_loss(sub, check[i], loss, U, i) == 0;
    if (ok) return sub.members;
  }
  fail(ErrorCode::RetryLimit, "no zero-loss sub-majority after " + std::to_string(retry_limit) + " attempts");
}

// ---- strong-to-barely conversion ----

// g_y for a linear ĥ and a ball: y·margin(x) > −γ gives label y.
inline LinearModel expand_g(const LinearModel& h, const LpBall& U, int y) {
  if (h.is_constant()) fail(ErrorCode::ZeroWeight, "expand_g needs a non-constant model");
  const double shift = U.gamma * lp_norm(h.w, dual_exponent(U.p));
  return LinearModel(h.w, h.bias + (y > 0 ? shift : -shift));
}

struct StrongToBarelyResult {
  LinearModel g;
  int label = 1;
  double m_plus = 0.0;
  long draws = 0;
};

inline std::size_t strong_to_barely_m(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  return static_cast<std::size_t>(std::ceil(64.0 / 9.0 * std::log(1.0 / delta)));
}

inline StrongToBarelyResult strong_to_barely(const LinearModel& h, SampleSource& source, std::size_t m_tilde,
                                             const LpBall& U) {
  if (m_tilde == 0) fail(ErrorCode::InvalidArgument, "m_tilde must be >= 1");
  StrongToBarelyResult r;
  std::size_t plus = 0;
  for (std::size_t i = 0; i < m_tilde; ++i) {
    while (true) {
      auto s = source.next();
      if (!s) fail(ErrorCode::SourceExhausted, "source ran dry while sampling the robust region");
      ++r.draws;
      if (h.is_constant() || std::abs(margin(h, s->x, U.p)) > U.gamma) {
        plus += h.predict(s->x) > 0 ? 1 : 0;
        break;
      }
    }
  }
  r.m_plus = static_cast<double>(plus) / static_cast<double>(m_tilde);
  r.label = r.m_plus >= 0.5 ? 1 : -1;
  r.g = expand_g(h, U, r.label);
  return r;
}

}  // namespace roblearn
