#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "roblearn/boosting.hpp"
#include "roblearn/core.hpp"
#include "roblearn/learners.hpp"
#include "roblearn/oracles.hpp"
#include "roblearn/random.hpp"
#include "roblearn/source.hpp"

namespace roblearn {

// Perturbation spec for a dataset whose i-th row came from origin[i].
inline PerturbationSpec restrict_spec(const PerturbationSpec& U, const std::vector<std::size_t>& origin) {
  if (const auto* f = std::get_if<FinitePerExample>(&U)) {
    FinitePerExample out;
    for (std::size_t i = 0; i < origin.size(); ++i) {
      auto it = f->points.find(origin[i]);
      if (it == f->points.end()) fail(ErrorCode::MissingPerturbations, "no perturbation list for example");
      out.points.emplace(i, it->second);
    }
    return out;
  }
  return U;
}

// ---- robust-from-non-robust (finite U) ----

struct RobustifyConfig {
  AlphaBoostConfig outer;
  AlphaBoostConfig inner;
  std::size_t m0 = 0;                  // subsample size per outer round; 0: |S|
  std::size_t inner_sparsify_n = 25;
  std::size_t outer_sparsify_n = 25;
  int sparsify_retries = 100;
  std::size_t size_cap = 10'000'000;
  std::uint64_t rng_seed = 0;
};

using InnerVote = MajorityVote<LinearModel>;
using OuterVote = MajorityVote<InnerVote>;

// base(WeightedDataset) -> LinearModel
template <class Base>
InnerVote zero_robust_loss(const Dataset& L, const PerturbationSpec& U, Base&& base, const RobustifyConfig& cfg,
                           std::uint64_t seed) {
  if (L.empty()) fail(ErrorCode::EmptyDataset, "zero_robust_loss on empty dataset");
  InflatedDataset LU = inflate(L, U, cfg.size_cap);
  AlphaBoostConfig ic = cfg.inner;
  ic.rng_seed = SeedStream(seed).child("inner").seed();
  auto boosted = alpha_boost(LU.data, base, ic, LossKind::ZeroOne, U);
  for (const auto& s : LU.data)
    if (boosted.majority.predict(s.x) != s.y)
      fail(ErrorCode::WeakLearnerFailed, "inner majority is not robustly correct on its input");
  auto members = sparsify_majority(boosted.models, LU.data, cfg.inner_sparsify_n, SeedStream(seed).child("sparsify").seed(),
                                   LossKind::ZeroOne, U, cfg.sparsify_retries);
  return InnerVote{std::move(members)};
}

struct RobustifyResult {
  OuterVote predictor;
  int outer_rounds = 0;
  double outer_alpha = 0.0;
  std::size_t inflated_size = 0;
};

template <class Base>
RobustifyResult robustify_nonrobust(const Dataset& data, const PerturbationSpec& U, Base&& base,
                                    const RobustifyConfig& cfg) {
  validate(U);
  if (!is_finite_spec(U)) fail(ErrorCode::Unsupported, "robustify_nonrobust needs a finite perturbation set");
  if (data.empty()) fail(ErrorCode::EmptyDataset, "robustify_nonrobust on empty dataset");
  InflatedDataset SU = inflate(data, U, cfg.size_cap);
  const std::size_t m0 = cfg.m0 > 0 ? cfg.m0 : data.size();
  SeedStream ss(cfg.rng_seed);
  Rng sub_rng = ss.rng("robustify.subsample");
  std::uint64_t call = 0;

  auto weak = [&](const WeightedDataset& wd) -> InnerVote {
    std::discrete_distribution<std::size_t> pick(wd.weights.begin(), wd.weights.end());
    std::vector<std::size_t> origin;
    Dataset L(data.dim());
    for (std::size_t k = 0; k < m0; ++k) {
      const std::size_t o = SU.origin[pick(sub_rng)];
      origin.push_back(o);
      L.add(data[o]);
    }
    return zero_robust_loss(L, restrict_spec(U, origin), base, cfg, ss.child("zrl").child(call++).seed());
  };

  AlphaBoostConfig oc = cfg.outer;
  oc.rng_seed = ss.child("outer").seed();
  auto boosted = alpha_boost(SU.data, weak, oc, LossKind::ZeroOne, U);
  for (const auto& s : SU.data)
    if (boosted.majority.predict(s.x) != s.y)
      fail(ErrorCode::WeakLearnerFailed, "outer majority is not robustly correct on the training set");
  auto members = sparsify_majority(boosted.models, SU.data, cfg.outer_sparsify_n, ss.child("outer_sparsify").seed(),
                                   LossKind::ZeroOne, U, cfg.sparsify_retries);
  return {OuterVote{std::move(members)}, boosted.rounds, boosted.alpha, SU.data.size()};
}

// ---- agnostic per-example multiplicative weights ----

struct PerExampleWeights {
  std::vector<std::vector<double>> w;

  std::vector<double> normalized(std::size_t i) const {
    std::vector<double> out = w[i];
    double s = 0.0;
    for (double v : out) s += v;
    for (double& v : out) v /= s;
    return out;
  }
};

struct FmsResult {
  MajorityVote<LinearModel> majority;
  PerExampleWeights weights;
  int rounds = 0;
  double eta = 0.0;
};

inline int fms_default_rounds(std::size_t max_u, double eps) {
  const double lu = std::log(static_cast<double>(std::max<std::size_t>(max_u, 2)));
  return std::max(1, static_cast<int>(std::ceil(32.0 * lu / (eps * eps))));
}

inline double fms_default_eta(std::size_t max_u, int T) {
  const double lu = std::log(static_cast<double>(std::max<std::size_t>(max_u, 1)));
  return std::sqrt(lu / static_cast<double>(T));
}

// erm(WeightedDataset) -> LinearModel. rounds/eta <= 0 pick the defaults.
template <class Erm>
FmsResult fms_agnostic(const Dataset& data, const PerturbationSpec& U, Erm&& erm, double eta_mw, int rounds,
                       double eps = 0.1) {
  validate(U);
  if (!is_finite_spec(U)) fail(ErrorCode::Unsupported, "fms_agnostic needs a finite perturbation set");
  if (data.empty()) fail(ErrorCode::EmptyDataset, "fms_agnostic on empty dataset");
  InflatedDataset SU = inflate(data, U);
  const std::size_t m = data.size();
  std::size_t max_u = 1;
  FmsResult res;
  res.weights.w.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = perturbation_count(U, i);
    max_u = std::max(max_u, k);
    res.weights.w[i].assign(k, 1.0);
  }
  res.rounds = rounds > 0 ? rounds : fms_default_rounds(max_u, eps);
  res.eta = eta_mw > 0.0 ? eta_mw : fms_default_eta(max_u, res.rounds);
  std::vector<std::size_t> first(m, 0);
  for (std::size_t i = 1; i < m; ++i) first[i] = first[i - 1] + res.weights.w[i - 1].size();
  for (int t = 0; t < res.rounds; ++t) {
    std::vector<double> wts(SU.data.size());
    for (std::size_t i = 0; i < m; ++i) {
      const auto P = res.weights.normalized(i);
      for (std::size_t k = 0; k < P.size(); ++k) wts[first[i] + k] = P[k] / static_cast<double>(m);
    }
    LinearModel h = erm(WeightedDataset(SU.data, wts));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < res.weights.w[i].size(); ++k) {
        const auto& s = SU.data[first[i] + k];
        if (h.predict(s.x) != s.y) res.weights.w[i][k] *= 1.0 + res.eta;
      }
    res.majority.members.push_back(std::move(h));
  }
  return res;
}

// ---- online learners with a perfect attack oracle ----

using AttackOracle = std::function<std::optional<Vector>(const LinearModel&, const Sample&)>;

inline AttackOracle closed_form_attack(PerturbationSpec U) {
  return [U = std::move(U)](const LinearModel& h, const Sample& s) { return attack(h, s, U); };
}

struct OnePassResult {
  LinearModel model;
  long updates = 0;
  long consumed = 0;
  long run_length = 0;
};

inline long one_pass_run_length(double eps, double delta, long mistake_cap) {
  if (!(eps > 0.0 && eps <= 1.0)) fail(ErrorCode::InvalidArgument, "eps must lie in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  const double M = static_cast<double>(std::max<long>(mistake_cap, 1));
  return std::max(1L, static_cast<long>(std::ceil(std::log(M / delta) / eps)));
}

template <OnlineLearner L>
OnePassResult one_pass_robust(SampleSource& stream, L& learner, const AttackOracle& oracle, double eps, double delta,
                              long mistake_cap) {
  OnePassResult r;
  r.run_length = one_pass_run_length(eps, delta, mistake_cap);
  long streak = 0;
  while (streak < r.run_length) {
    auto s = stream.next();
    if (!s) fail(ErrorCode::StreamExhausted, "stream ended before a model survived the run length");
    ++r.consumed;
    auto z = oracle(learner.predictor(), *s);
    if (!z) {
      ++streak;
      continue;
    }
    streak = 0;
    if (learner.update(*z, s->y)) ++r.updates;
  }
  r.model = learner.predictor();
  return r;
}

struct CycleResult {
  LinearModel model;
  long oracle_calls = 0;
  long mistakes = 0;
  long passes = 0;
};

template <OnlineLearner L>
CycleResult cycle_robust(const Dataset& data, L& learner, const AttackOracle& oracle, long mistake_cap) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "cycle_robust on empty dataset");
  CycleResult r;
  const long call_cap = static_cast<long>(data.size()) * (mistake_cap + 1);
  while (true) {
    ++r.passes;
    bool clean = true;
    for (const auto& s : data) {
      ++r.oracle_calls;
      auto z = oracle(learner.predictor(), s);
      if (!z) continue;
      clean = false;
      learner.update(*z, s.y);
      if (learner.mistakes() > mistake_cap)
        fail(ErrorCode::MistakeCapExceeded, "learner exceeded its mistake cap of " + std::to_string(mistake_cap));
      if (r.oracle_calls > call_cap)
        fail(ErrorCode::MistakeCapExceeded, "oracle calls exceeded m * (cap + 1) without a clean pass");
    }
    if (clean) break;
  }
  r.model = learner.predictor();
  r.mistakes = learner.mistakes();
  return r;
}

inline long perceptron_mistake_cap(double radius, double margin) {
  if (!(margin > 0.0)) fail(ErrorCode::InvalidArgument, "perceptron cap needs a positive margin");
  return static_cast<long>(std::ceil((radius / margin) * (radius / margin)));
}

// ---- weighted majority over a finite pool ----

struct EnsembleWeights {
  std::vector<double> p;
};

struct WeightedVote {
  std::vector<LinearModel> pool;
  EnsembleWeights weights;

  int predict(const Vector& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < pool.size(); ++k) s += weights.p[k] * pool[k].predict(x);
    return s >= 0.0 ? 1 : -1;
  }
};

struct WmConstants {
  double a = 0.0;
  double b = 0.0;
};

inline WmConstants wm_constants(double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) fail(ErrorCode::InvalidArgument, "eta must lie in [0,1)");
  const double den = std::log(2.0 / (1.0 + eta));
  return {eta == 0.0 ? kInf : std::log(1.0 / eta) / den, 1.0 / den};
}

using VoteAttack = std::function<std::optional<Vector>(const WeightedVote&, const Sample&)>;

inline VoteAttack enumeration_attack(PerturbationSpec U) {
  return [U = std::move(U)](const WeightedVote& v, const Sample& s) { return attack(v, s, U); };
}

struct WmResult {
  WeightedVote vote;
  long mistakes = 0;
};

inline WmResult weighted_majority_robust(const std::vector<LinearModel>& pool, const std::vector<Sample>& stream,
                                         const VoteAttack& oracle, double eta) {
  if (pool.empty()) fail(ErrorCode::EmptyPool, "weighted majority needs a non-empty pool");
  wm_constants(eta);
  WmResult r;
  r.vote.pool = pool;
  r.vote.weights.p.assign(pool.size(), 1.0);
  for (const auto& s : stream) {
    auto z = oracle(r.vote, s);
    if (!z) continue;
    ++r.mistakes;
    for (std::size_t k = 0; k < pool.size(); ++k)
      if (pool[k].predict(*z) != s.y) r.vote.weights.p[k] *= eta;
  }
  return r;
}

}  // namespace roblearn
