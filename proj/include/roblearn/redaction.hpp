#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "roblearn/boosting.hpp"
#include "roblearn/core.hpp"
#include "roblearn/learners.hpp"

namespace roblearn {

enum class SelectionMode { Rejectron, URejectron };

struct SelectionSet {
  LinearModel h;
  SelectionMode mode = SelectionMode::Rejectron;
  std::vector<LinearModel> discriminators;
  std::vector<std::pair<LinearModel, LinearModel>> pairs;

  std::size_t size() const { return mode == SelectionMode::Rejectron ? discriminators.size() : pairs.size(); }
};

inline bool select_member(const SelectionSet& S, const Vector& x) {
  if (S.mode == SelectionMode::Rejectron) {
    const int hx = S.h.predict(x);
    for (const auto& c : S.discriminators)
      if (c.predict(x) != hx) return false;
    return true;
  }
  for (const auto& [c, c2] : S.pairs)
    if (c.predict(x) != c2.predict(x)) return false;
  return true;
}

inline SelectiveLabel selective_classify(const LinearModel& h, const SelectionSet& S, const Vector& x) {
  if (!select_member(S, x)) return SelectiveLabel::Abstain;
  return to_selective(h.predict(x));
}

struct RedactConfig {
  double eps = 0.1;
  std::optional<double> lambda;  // unset: n + 1
  double eta = 0.0;
  std::uint64_t rng_seed = 0;

  double resolved_lambda(std::size_t n) const { return lambda ? *lambda : static_cast<double>(n) + 1.0; }
};

inline void validate(const RedactConfig& cfg, std::size_t n) {
  if (!(cfg.eps > 0.0 && cfg.eps <= 1.0)) fail(ErrorCode::InvalidArgument, "eps must lie in (0,1]");
  if (!(cfg.resolved_lambda(n) >= 1.0)) fail(ErrorCode::InvalidArgument, "Lambda must be >= 1");
}

// s = err on selected tests − Λ·err on train, both as fractions of their full set sizes.
inline double rejectron_score(int test_disagree, std::size_t n_test, int train_disagree, std::size_t n_train,
                              double lambda) {
  return static_cast<double>(test_disagree) / static_cast<double>(n_test) -
         lambda * static_cast<double>(train_disagree) / static_cast<double>(n_train);
}

struct RejectronIteration {
  double score = 0.0;
  std::size_t removed = 0;
};

struct RejectronResult {
  LinearModel h;
  SelectionSet S;
  std::vector<RejectronIteration> iterations;
  double final_score = 0.0;
};

// Given a fixed h, grows the discriminator list. erm(WeightedDataset) -> LinearModel.
template <class Erm>
RejectronResult rejectron_with_h(const LinearModel& h, const Dataset& train, const std::vector<Vector>& test,
                                 const RedactConfig& cfg, Erm&& erm) {
  const std::size_t n = train.size(), m = test.size();
  if (n == 0) fail(ErrorCode::EmptyDataset, "rejectron needs training data");
  if (m == 0) fail(ErrorCode::EmptyDataset, "rejectron needs test points");
  validate(cfg, n);
  const double lambda = cfg.resolved_lambda(n);
  RejectronResult r;
  r.h = h;
  r.S.h = h;
  r.S.mode = SelectionMode::Rejectron;
  std::vector<int> h_train(n), h_test(m);
  for (std::size_t i = 0; i < n; ++i) h_train[i] = h.predict(train[i].x);
  for (std::size_t j = 0; j < m; ++j) h_test[j] = h.predict(test[j]);
  std::vector<bool> selected(m, true);
  const int max_iter = static_cast<int>(std::floor(1.0 / cfg.eps)) + 1;
  for (int t = 0; t < max_iter; ++t) {
    Dataset art(train.dim());
    std::vector<double> wts;
    for (std::size_t i = 0; i < n; ++i) {
      art.add(train[i].x, h_train[i]);
      wts.push_back(lambda / static_cast<double>(n));
    }
    for (std::size_t j = 0; j < m; ++j)
      if (selected[j]) {
        art.add(test[j], -h_test[j]);
        wts.push_back(1.0 / static_cast<double>(m));
      }
    LinearModel c = erm(WeightedDataset(std::move(art), std::move(wts)));
    int dtest = 0, dtrain = 0;
    for (std::size_t j = 0; j < m; ++j) dtest += selected[j] && c.predict(test[j]) != h_test[j] ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) dtrain += c.predict(train[i].x) != h_train[i] ? 1 : 0;
    const double s = rejectron_score(dtest, m, dtrain, n, lambda);
    r.final_score = s;
    if (s <= cfg.eps) break;
    for (std::size_t j = 0; j < m; ++j)
      if (selected[j] && c.predict(test[j]) != h_test[j]) selected[j] = false;
    r.iterations.push_back({s, static_cast<std::size_t>(dtest)});
    r.S.discriminators.push_back(std::move(c));
  }
  return r;
}

template <class Erm>
RejectronResult rejectron(const Dataset& train, const std::vector<Vector>& test, const RedactConfig& cfg, Erm&& erm) {
  if (train.empty()) fail(ErrorCode::EmptyDataset, "rejectron needs training data");
  LinearModel h = erm(WeightedDataset::uniform(train));
  return rejectron_with_h(h, train, test, cfg, erm);
}

struct MassartResult {
  LinearModel h_hat;
  double relabel_disagreement = 0.0;  // fraction of heldout labels changed by ĥ
  RejectronResult rejectron;
};

template <class Erm>
MassartResult massart_denoise_rejectron(const Dataset& extra_noisy, const Dataset& heldout,
                                        const std::vector<Vector>& test, const RedactConfig& cfg, Erm&& erm) {
  MassartResult out;
  WeightedDataset wd(extra_noisy, std::vector<double>(extra_noisy.size(), 1.0));
  out.h_hat = erm(wd);
  Dataset relabeled(heldout.dim());
  long changed = 0;
  for (const auto& s : heldout) {
    const int y = out.h_hat.predict(s.x);
    changed += y != s.y ? 1 : 0;
    relabeled.add(s.x, y);
  }
  if (!heldout.empty()) out.relabel_disagreement = static_cast<double>(changed) / static_cast<double>(heldout.size());
  out.rejectron = rejectron(relabeled, test, cfg, erm);
  return out;
}

struct LambdaStar {
  double eps_star = 0.0;
  double lambda_star = 0.0;
};

inline double lambda_star_from(double eta, double eps_star) { return std::sqrt(1.0 / (8.0 * eta + eps_star * eps_star)); }

inline LambdaStar lambda_star(double eta, std::size_t n, double d_proxy, double delta) {
  if (!(eta >= 0.0 && eta < 1.0)) fail(ErrorCode::InvalidArgument, "eta must lie in [0,1)");
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  const double nn = static_cast<double>(n);
  LambdaStar r;
  r.eps_star = 4.0 * std::sqrt((d_proxy * std::log(2.0 * nn) + std::log(48.0 / delta)) / nn);
  r.lambda_star = lambda_star_from(eta, r.eps_star);
  return r;
}

// ---- URejectron ----

struct FinitePoolPairs {
  std::vector<LinearModel> pool;
};

struct UrejectronResult {
  SelectionSet S;
  std::vector<RejectronIteration> iterations;
  double final_score = 0.0;
};

inline UrejectronResult urejectron_pairs(const std::vector<Vector>& train, const std::vector<Vector>& test,
                                         const RedactConfig& cfg, const FinitePoolPairs& backend,
                                         const LinearModel& h) {
  if (backend.pool.empty()) fail(ErrorCode::EmptyPool, "URejectron pair search needs a non-empty pool");
  const std::size_t n = train.size(), m = test.size();
  if (n == 0 || m == 0) fail(ErrorCode::EmptyDataset, "URejectron needs train and test points");
  validate(cfg, n);
  const double lambda = cfg.resolved_lambda(n);
  const std::size_t K = backend.pool.size();
  std::vector<std::vector<int>> ptr(K, std::vector<int>(n)), pte(K, std::vector<int>(m));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) ptr[k][i] = backend.pool[k].predict(train[i]);
    for (std::size_t j = 0; j < m; ++j) pte[k][j] = backend.pool[k].predict(test[j]);
  }
  UrejectronResult r;
  r.S.h = h;
  r.S.mode = SelectionMode::URejectron;
  std::vector<bool> selected(m, true);
  const int max_iter = static_cast<int>(std::floor(1.0 / cfg.eps)) + 1;
  for (int t = 0; t < max_iter; ++t) {
    double best = -kInf;
    std::size_t ba = 0, bb = 0;
    int best_dtest = 0;
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = a + 1; b < K; ++b) {
        int dtest = 0, dtrain = 0;
        for (std::size_t j = 0; j < m; ++j) dtest += selected[j] && pte[a][j] != pte[b][j] ? 1 : 0;
        for (std::size_t i = 0; i < n; ++i) dtrain += ptr[a][i] != ptr[b][i] ? 1 : 0;
        const double s = rejectron_score(dtest, m, dtrain, n, lambda);
        if (s > best) {
          best = s;
          ba = a;
          bb = b;
          best_dtest = dtest;
        }
      }
    if (K < 2) best = 0.0;
    r.final_score = best;
    if (best <= cfg.eps) break;
    for (std::size_t j = 0; j < m; ++j)
      if (selected[j] && pte[ba][j] != pte[bb][j]) selected[j] = false;
    r.iterations.push_back({best, static_cast<std::size_t>(best_dtest)});
    r.S.pairs.emplace_back(backend.pool[ba], backend.pool[bb]);
  }
  return r;
}

struct TradeoffRow {
  double threshold = 0.0;
  double rej_p = 0.0;
  double rej_q = 0.0;
  double err_q = 0.0;
};

struct DistinguisherResult {
  LinearModel distinguisher;
  SelectionSet S;  // at the chosen threshold
  double chosen_threshold = 0.0;
  std::vector<TradeoffRow> table;
};

// Single-pair selection set that rejects x iff score(x) ≥ τ.
inline SelectionSet threshold_selection(const LinearModel& h, const LinearModel& dist, double tau) {
  SelectionSet S;
  S.h = h;
  S.mode = SelectionMode::URejectron;
  S.pairs.emplace_back(LinearModel(dist.w, dist.bias - tau), LinearModel(Vector::Zero(dist.dim()), -1.0));
  return S;
}

// The T=1 mode: one classifier separates train (class −1) from test (class +1);
// the sweep reports rejection on P and error on the selected part of Q.
// `p_eval` scores rejection on P (pass the training set if no holdout exists).
inline DistinguisherResult urejectron_t1(const LinearModel& h, const std::vector<Vector>& train,
                                         const Dataset& test, const std::vector<Vector>& p_eval,
                                         const RedactConfig& cfg, const ErmConfig& erm_cfg = {}) {
  if (train.empty() || test.empty() || p_eval.empty())
    fail(ErrorCode::EmptyDataset, "distinguisher mode needs train, test and evaluation points");
  const std::size_t n = train.size(), m = test.size();
  Dataset art(test.dim());
  std::vector<double> wts;
  for (const auto& x : train) {
    art.add(x, -1);
    wts.push_back(1.0 / static_cast<double>(n));
  }
  for (const auto& s : test) {
    art.add(s.x, 1);
    wts.push_back(1.0 / static_cast<double>(m));
  }
  DistinguisherResult r;
  r.distinguisher = erm_linear(WeightedDataset(std::move(art), std::move(wts)), erm_cfg);
  std::vector<double> sp, sq;
  for (const auto& x : p_eval) sp.push_back(r.distinguisher.score(x));
  for (const auto& s : test) sq.push_back(r.distinguisher.score(s.x));
  std::vector<double> taus = sp;
  taus.insert(taus.end(), sq.begin(), sq.end());
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  taus.push_back(taus.empty() ? 0.0 : std::nextafter(taus.back(), kInf));
  for (double tau : taus) {
    TradeoffRow row;
    row.threshold = tau;
    long rp = 0, rq = 0, eq = 0;
    for (double v : sp) rp += v >= tau ? 1 : 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (sq[j] >= tau) ++rq;
      else eq += h.predict(test[j].x) != test[j].y ? 1 : 0;
    }
    row.rej_p = static_cast<double>(rp) / static_cast<double>(sp.size());
    row.rej_q = static_cast<double>(rq) / static_cast<double>(m);
    const long sel = static_cast<long>(m) - rq;
    row.err_q = sel > 0 ? static_cast<double>(eq) / static_cast<double>(sel) : 0.0;
    r.table.push_back(row);
  }
  // Smallest threshold whose rejection rate on P is within ε.
  r.chosen_threshold = r.table.back().threshold;
  for (const auto& row : r.table)
    if (row.rej_p <= cfg.eps) {
      r.chosen_threshold = row.threshold;
      break;
    }
  r.S = threshold_selection(h, r.distinguisher, r.chosen_threshold);
  return r;
}

// ---- finite-pool transductive learner ----

enum class PoolMode { Realizable, Agnostic };

struct PoolScore {
  double train_loss = 0.0;
  double test_loss = 0.0;
  double score() const { return std::max(train_loss, test_loss); }
};

// Mean over (z, y) of 1[some preimage of z is labelled ≠ y], and mean over z̃ of
// 1[the preimages of z̃ disagree].
inline PoolScore transductive_score(const LinearModel& h, const Dataset& train, const std::vector<Vector>& test,
                                    const PerturbationSpec& U) {
  PoolScore sc;
  long bad_train = 0, bad_test = 0;
  if (const auto* b = std::get_if<LpBall>(&U)) {
    for (const auto& s : train)
      bad_train += h.is_constant() ? (h.predict(s.x) != s.y) : (s.y * margin(h, s.x, b->p) <= b->gamma);
    for (const auto& z : test) bad_test += h.is_constant() ? 0 : (std::abs(margin(h, z, b->p)) <= b->gamma);
  } else if (const auto* o = std::get_if<FiniteOffsets>(&U)) {
    SelectiveClassifier sc_h{h, *o};
    for (const auto& s : train) {
      bool bad = false;
      for (const auto& off : o->offsets) bad = bad || h.predict(s.x - off) != s.y;
      bad_train += bad;
    }
    for (const auto& z : test) bad_test += selective_predict(sc_h, z) == SelectiveLabel::Abstain;
  } else {
    fail(ErrorCode::Unsupported, "transductive_pool needs a ball or a shared offset list");
  }
  sc.train_loss = train.empty() ? 0.0 : static_cast<double>(bad_train) / static_cast<double>(train.size());
  sc.test_loss = test.empty() ? 0.0 : static_cast<double>(bad_test) / static_cast<double>(test.size());
  return sc;
}

struct TransductiveResult {
  std::size_t index = 0;
  LinearModel model;
  std::vector<int> labels;
  PoolScore score;
};

inline TransductiveResult transductive_pool(const std::vector<LinearModel>& pool, const Dataset& train,
                                            const std::vector<Vector>& test, const PerturbationSpec& U,
                                            PoolMode mode) {
  if (pool.empty()) fail(ErrorCode::EmptyPool, "transductive_pool needs a non-empty pool");
  validate(U);
  std::optional<std::size_t> pick;
  PoolScore best;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const PoolScore sc = transductive_score(pool[k], train, test, U);
    if (mode == PoolMode::Realizable) {
      if (sc.train_loss == 0.0 && sc.test_loss == 0.0) {
        pick = k;
        best = sc;
        break;
      }
    } else if (!pick || sc.score() < best.score()) {
      pick = k;
      best = sc;
    }
  }
  if (!pick) fail(ErrorCode::NoRealizableMember, "no pool member is robustly consistent on train and test");
  TransductiveResult r;
  r.index = *pick;
  r.model = pool[*pick];
  r.score = best;
  for (const auto& z : test) r.labels.push_back(r.model.predict(z));
  return r;
}

}  // namespace roblearn
