#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "roblearn/roblearn.hpp"

using namespace roblearn;

namespace {

struct RunConfig {
  std::string command;
  std::string input, test_input, model_path, pool_path, output;
  std::string gen;  // empty: per-command default
  std::size_t n = 0, test_n = 0;
  int dim = 2;
  double sigma = 0.5, noise = 0.1, margin_lo = -1.0, margin_hi = 1.0;
  double gamma = 0.5;
  std::string p = "2";
  std::string offsets;
  double eps = 0.1, delta = 0.1, beta = 0.5, eta = 0.0, eta_mw = 0.0;
  double lambda_weight = 0.0;
  int rounds = 0;
  std::uint64_t seed = 0;
  std::string mode, method = "md", backend = "t1", loss = "robust", certifier = "closed";
  bool multi_granularity = false;
  std::size_t pool_size = 20, per_round_m = 0, m_learner = 500, labeled = 50;
  long mistake_cap = 0;
  int epochs = 200;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidNorm:
    case ErrorCode::Unsupported:
    case ErrorCode::UnsupportedGeometry:
    case ErrorCode::EmptyPool:
      return 2;
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
    case ErrorCode::EmptyDataset:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MissingPerturbations:
    case ErrorCode::SizeLimit:
    case ErrorCode::ZeroWeight:
      return 3;
    case ErrorCode::NotSeparable:
    case ErrorCode::MistakeCapExceeded:
    case ErrorCode::NoRealizableMember:
    case ErrorCode::WeakLearnerFailed:
      return 4;
    case ErrorCode::OracleViolation:
    case ErrorCode::AllZeroWeights:
    case ErrorCode::RetryLimit:
    case ErrorCode::SourceExhausted:
    case ErrorCode::StreamExhausted:
      return 5;
  }
  return 5;
}

double parse_norm(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "infinity") return kInf;
  auto v = detail::parse_real(s);
  if (!v) fail(ErrorCode::ConfigError, "--p must be a number >= 1 or 'inf'");
  check_norm(*v);
  return *v;
}

Json echo(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["test_input"] = c.test_input;
  j["model"] = c.model_path;
  j["pool"] = c.pool_path;
  j["gen"] = c.gen;
  j["n"] = c.n;
  j["test_n"] = c.test_n;
  j["dim"] = c.dim;
  j["sigma"] = c.sigma;
  j["noise"] = c.noise;
  j["margin_lo"] = c.margin_lo;
  j["margin_hi"] = c.margin_hi;
  j["gamma"] = c.gamma;
  j["p"] = c.p;
  j["offsets"] = c.offsets;
  j["eps"] = c.eps;
  j["delta"] = c.delta;
  j["beta"] = c.beta;
  j["eta"] = c.eta;
  j["eta_mw"] = c.eta_mw;
  j["lambda_weight"] = c.lambda_weight;
  j["rounds"] = c.rounds;
  j["seed"] = c.seed;
  j["mode"] = c.mode;
  j["method"] = c.method;
  j["backend"] = c.backend;
  j["loss"] = c.loss;
  j["certifier"] = c.certifier;
  j["multi_granularity"] = c.multi_granularity;
  j["pool_size"] = c.pool_size;
  j["per_round_m"] = c.per_round_m;
  j["m_learner"] = c.m_learner;
  j["labeled"] = c.labeled;
  j["mistake_cap"] = c.mistake_cap;
  j["epochs"] = c.epochs;
  return j;
}

std::string default_gen(const std::string& cmd) {
  if (cmd == "roboost" || cmd == "uroboost") return "union";
  if (cmd == "rcn-train" || cmd == "cycle-robust" || cmd == "one-pass" || cmd == "rerm-ellipsoid") return "planted";
  return "gaussian";
}

std::size_t default_n(const std::string& cmd) {
  if (cmd == "roboost" || cmd == "uroboost") return 4000;
  if (cmd == "rcn-train") return 20000;
  if (cmd == "robustify" || cmd == "fms" || cmd == "rerm-ellipsoid") return 40;
  return 200;
}

GenSpec gen_spec(const RunConfig& c, std::size_t n, std::uint64_t seed) {
  const std::string kind = c.gen.empty() ? default_gen(c.command) : c.gen;
  if (c.dim < 1) fail(ErrorCode::ConfigError, "--dim must be >= 1");
  const Index d = c.dim;
  GenSpec s;
  s.n = n;
  s.rng_seed = seed;
  if (kind == "gaussian") {
    Vector mu = Vector::Zero(d);
    mu[0] = 2.0;
    s.kind = GaussianPair{mu, -mu, c.sigma};
  } else if (kind == "moons") {
    s.kind = TwoMoons{c.noise};
  } else if (kind == "union") {
    s.kind = two_direction_union(c.gamma);
  } else if (kind == "planted") {
    const double lo = c.margin_lo >= 0.0 ? c.margin_lo : std::min(c.gamma, 0.99);
    const double hi = c.margin_hi;
    s.kind = PlantedMargin{Vector::Ones(d) / std::sqrt(static_cast<double>(d)), lo, hi};
  } else {
    fail(ErrorCode::ConfigError, "unknown generator '" + kind + "' (gaussian|moons|union|planted)");
  }
  return s;
}

struct Inputs {
  Dataset train, test;
};

Inputs load_inputs(const RunConfig& c) {
  Inputs in;
  const std::size_t n = c.n > 0 ? c.n : default_n(c.command);
  const std::size_t tn = c.test_n > 0 ? c.test_n : (c.command == "roboost" || c.command == "uroboost" ? 2000 : n);
  SeedStream ss(c.seed);
  if (!c.input.empty()) {
    in.train = load_csv(c.input);
  } else {
    in.train = generate(gen_spec(c, n, ss.child("train").seed()));
    if (c.eta > 0.0) in.train = apply_rcn(in.train, c.eta, ss.child("rcn").seed());
  }
  if (!c.test_input.empty()) {
    in.test = load_csv(c.test_input);
  } else if (!c.input.empty()) {
    in.test = in.train;
  } else {
    in.test = generate(gen_spec(c, tn, ss.child("test").seed()));
  }
  if (in.test.dim() != in.train.dim()) fail(ErrorCode::DimensionMismatch, "train and test dimensions differ");
  return in;
}

std::optional<FiniteOffsets> parse_offsets(const std::string& text, Index d) {
  if (text.empty()) return std::nullopt;
  FiniteOffsets o;
  std::stringstream rows(text);
  std::string row;
  while (std::getline(rows, row, ';')) {
    const auto fields = detail::split_csv(row);
    if (static_cast<Index>(fields.size()) != d)
      fail(ErrorCode::ConfigError, "offset '" + row + "' does not have " + std::to_string(d) + " entries");
    Vector v(d);
    for (Index k = 0; k < d; ++k) {
      auto x = detail::parse_real(fields[static_cast<std::size_t>(k)]);
      if (!x) fail(ErrorCode::ConfigError, "bad offset entry '" + fields[static_cast<std::size_t>(k)] + "'");
      v[k] = *x;
    }
    o.offsets.push_back(std::move(v));
  }
  return o;
}

PerturbationSpec perturbation(const RunConfig& c, Index d) {
  if (!(c.gamma >= 0.0)) fail(ErrorCode::ConfigError, "--gamma must be >= 0");
  if (auto o = parse_offsets(c.offsets, d)) {
    PerturbationSpec U = *o;
    validate(U);
    return U;
  }
  return LpBall{parse_norm(c.p), c.gamma};
}

PerturbationSpec require_finite(const RunConfig& c, Index d) {
  PerturbationSpec U = perturbation(c, d);
  if (!is_finite_spec(U)) fail(ErrorCode::ConfigError, c.command + " needs a finite perturbation set (--offsets)");
  return U;
}

ErmConfig erm_config(const RunConfig& c, const std::string& label) {
  ErmConfig e;
  e.epochs = c.epochs;
  e.rng_seed = SeedStream(c.seed).child(label).seed();
  return e;
}

LinearModel load_model(const RunConfig& c) {
  if (c.model_path.empty()) fail(ErrorCode::ConfigError, c.command + " needs --model");
  Json j = load_json(c.model_path);
  if (j.contains("model")) j = j["model"];
  return model_from_json(j);
}

std::vector<LinearModel> pool_for(const RunConfig& c, Index d) {
  std::vector<LinearModel> pool;
  if (!c.pool_path.empty()) {
    Json j = load_json(c.pool_path);
    const Json& arr = j.contains("models") ? j["models"] : j;
    if (!arr.is_array()) fail(ErrorCode::ParseError, "pool document needs a 'models' array");
    for (const auto& m : arr) pool.push_back(model_from_json(m));
  } else {
    Rng g = SeedStream(c.seed).rng("pool");
    for (std::size_t k = 0; k < c.pool_size; ++k) {
      Vector w(d);
      for (Index i = 0; i < d; ++i) w[i] = gaussian(g);
      if (w.norm() == 0.0) w[0] = 1.0;
      pool.emplace_back(w / w.norm(), 0.0);
    }
  }
  if (pool.empty()) fail(ErrorCode::EmptyPool, "pool is empty");
  for (const auto& m : pool)
    if (m.dim() != d) fail(ErrorCode::DimensionMismatch, "pool model dimension mismatch");
  return pool;
}

template <class P>
double accuracy(const P& h, const Dataset& d) {
  return 1.0 - zero_one_error(h, d);
}

template <class P>
double robust_accuracy(const P& h, const Dataset& d, const PerturbationSpec& U) {
  long bad = 0;
  for (std::size_t i = 0; i < d.size(); ++i) bad += robust_loss(h, d[i], U, i);
  return 1.0 - static_cast<double>(bad) / static_cast<double>(d.size());
}

std::vector<Vector> points(const Dataset& d) { return points_of(d); }

long default_cap(const RunConfig& c) { return c.mistake_cap > 0 ? c.mistake_cap : 10000; }

// ---- subcommands ----

Json cmd_certify(const RunConfig& c) {
  Inputs in = load_inputs(c);
  LinearModel h = load_model(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  Json m;
  m["accuracy"] = accuracy(h, in.train);
  m["robust_accuracy"] = robust_accuracy(h, in.train, U);
  if (c.certifier == "ellipsoid") {
    const auto* b = std::get_if<LpBall>(&U);
    if (!b) fail(ErrorCode::ConfigError, "ellipsoid certifier needs a ball");
    EllipsoidConfig ec = default_ellipsoid_config(in.train.dim(), b->gamma);
    auto sep = separation_for(*b);
    long robust = 0;
    for (const auto& s : in.train) robust += ellipsoid_certify(h, s, sep, ec).robust ? 1 : 0;
    m["robust_accuracy_ellipsoid"] = static_cast<double>(robust) / static_cast<double>(in.train.size());
  } else if (c.certifier != "closed") {
    fail(ErrorCode::ConfigError, "--certifier must be closed|ellipsoid");
  }
  return Json{{"metrics", m}, {"model", to_json(h)}};
}

Json cmd_attack(const RunConfig& c) {
  Inputs in = load_inputs(c);
  LinearModel h = load_model(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  Json wit = Json::array();
  long hits = 0;
  for (std::size_t i = 0; i < in.train.size(); ++i) {
    if (auto z = attack(h, in.train[i], U, i)) {
      ++hits;
      wit.push_back(Json{{"index", i}, {"z", vector_to_json(*z)}});
    }
  }
  Json m{{"attack_rate", static_cast<double>(hits) / static_cast<double>(in.train.size())}, {"attacked", hits}};
  return Json{{"metrics", m}, {"witnesses", wit}};
}

Json cmd_rerm(const RunConfig& c) {
  Inputs in = load_inputs(c);
  const double p = parse_norm(c.p);
  LpBall ball{p, c.gamma};
  EllipsoidConfig ec = default_ellipsoid_config(in.train.dim(), c.gamma);
  RermStats st;
  LinearModel w = rerm_ellipsoid(in.train, RegionDescriptor(ball), ec, &st);
  Json m{{"robust_accuracy_train", robust_accuracy(w, in.train, ball)},
         {"robust_accuracy_test", robust_accuracy(w, in.test, ball)},
         {"outer_iterations", st.outer_iterations},
         {"certify_calls", st.certify_calls},
         {"tau", ec.feas_slack}};
  return Json{{"metrics", m}, {"model", to_json(w)}};
}

Json round_json(const std::vector<RoundDiagnostics>& rs) {
  Json a = Json::array();
  for (const auto& r : rs)
    a.push_back(Json{{"round", r.round}, {"gamma", r.gamma}, {"sample_size", r.sample_size}, {"draws", r.draws},
                     {"beta_hat", r.beta_hat}});
  return a;
}

Json cascade_metrics(const Cascade& cas, const Dataset& test, const PerturbationSpec& U) {
  Json m;
  m["single_robust_accuracy"] = robust_accuracy(cas.stages.front().model, test, U);
  m["single_accuracy"] = accuracy(cas.stages.front().model, test);
  m["cascade_robust_accuracy"] = robust_accuracy(cas, test, U);
  m["cascade_accuracy"] = accuracy(cas, test);
  Json nr = Json::array();
  std::vector<SelectiveClassifier> prefix;
  for (const auto& st : cas.stages) {
    prefix.push_back(st);
    long k = 0;
    for (const auto& s : test) k += in_nonrobust_region(prefix, s.x) ? 1 : 0;
    nr.push_back(static_cast<double>(k) / static_cast<double>(test.size()));
  }
  m["nonrobust_mass"] = nr;
  return m;
}

BoostConfig boost_config(const RunConfig& c) {
  BoostConfig b;
  b.beta = c.beta;
  b.eps = c.eps;
  b.delta = c.delta;
  b.rounds = c.rounds;
  b.per_round_m = c.per_round_m;
  b.m_learner = c.m_learner;
  b.multi_granularity = c.multi_granularity;
  b.rng_seed = c.seed;
  return b;
}

Json cmd_roboost(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  const double p = parse_norm(c.p);
  ResamplingSource src(in.train, SeedStream(c.seed).rng("source"));
  const ErmConfig ec = erm_config(c, "svm");
  auto learner = [&](const Dataset& d, const PerturbationSpec& Ut) { return svm_margin(d, spec_radius(Ut), ec, p).model; };
  RoboostResult r = beta_roboost(src, learner, boost_config(c), U);
  return Json{{"rounds", round_json(r.rounds)},
              {"stopped_early", r.stopped_early},
              {"metrics", cascade_metrics(r.cascade, in.test, U)},
              {"cascade", to_json(r.cascade)}};
}

Json cmd_uroboost(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  const double p = parse_norm(c.p);
  const std::size_t k = std::min(c.labeled, in.train.size());
  if (k == 0) fail(ErrorCode::ConfigError, "--labeled must be >= 1");
  Dataset labeled(in.train.dim()), pool(in.train.dim());
  for (std::size_t i = 0; i < in.train.size(); ++i) (i < k ? labeled : pool).add(in.train[i]);
  const ErmConfig ec = erm_config(c, "svm");
  auto learner = [&](const Dataset& d, const PerturbationSpec& Ut) { return svm_margin(d, spec_radius(Ut), ec, p).model; };
  std::optional<ResamplingSource> rs;
  DatasetSource empty(pool);
  SampleSource* src = &empty;
  if (!pool.empty()) {
    rs.emplace(pool, SeedStream(c.seed).rng("source"));
    src = &*rs;
  }
  UroboostResult r = beta_uroboost(labeled, *src, learner, boost_config(c), U);
  Json m = cascade_metrics(r.boost.cascade, in.test, U);
  m["h_hat_accuracy"] = accuracy(r.h_hat, in.test);
  return Json{{"rounds", round_json(r.boost.rounds)},
              {"stopped_early", r.boost.stopped_early},
              {"metrics", m},
              {"h_hat", to_json(r.h_hat)},
              {"cascade", to_json(r.boost.cascade)}};
}

AlphaBoostConfig alpha_config(const RunConfig& c, const std::string& label) {
  AlphaBoostConfig a;
  a.rounds = c.rounds;
  if (c.mode == "agreement") a.mode = AlphaMode::Agreement;
  else if (!c.mode.empty() && c.mode != "default") fail(ErrorCode::ConfigError, "--mode must be default|agreement");
  a.rng_seed = SeedStream(c.seed).child(label).seed();
  return a;
}

LossKind loss_kind(const RunConfig& c) {
  if (c.loss == "robust") return LossKind::Robust;
  if (c.loss == "zero-one") return LossKind::ZeroOne;
  fail(ErrorCode::ConfigError, "--loss must be robust|zero-one");
}

Json cmd_alpha_boost(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  const LossKind loss = loss_kind(c);
  const ErmConfig ec = erm_config(c, "erm");
  auto weak = [&](const WeightedDataset& wd) { return erm_linear(wd, ec); };
  auto r = alpha_boost(in.train, weak, alpha_config(c, "alpha"), loss, U);
  double min_agree = 1.0;
  for (double a : r.agreement) min_agree = std::min(min_agree, a);
  Json m{{"rounds", r.rounds},
         {"alpha", r.alpha},
         {"retries", r.retries},
         {"min_agreement", min_agree},
         {"train_accuracy", accuracy(r.majority, in.train)},
         {"test_accuracy", accuracy(r.majority, in.test)}};
  if (is_finite_spec(U)) m["train_robust_accuracy"] = robust_accuracy(r.majority, in.train, U);
  Json errs = Json::array();
  for (double e : r.round_errors) errs.push_back(e);
  return Json{{"metrics", m}, {"round_errors", errs}, {"majority", to_json(r.majority)}};
}

Json cmd_robustify(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = require_finite(c, in.train.dim());
  RobustifyConfig rc;
  rc.outer = alpha_config(c, "outer");
  rc.inner = alpha_config(c, "inner");
  rc.rng_seed = c.seed;
  const ErmConfig ec = erm_config(c, "erm");
  auto base = [&](const WeightedDataset& wd) { return erm_linear(wd, ec); };
  RobustifyResult r = robustify_nonrobust(in.train, U, base, rc);
  Json m{{"outer_rounds", r.outer_rounds},
         {"outer_alpha", r.outer_alpha},
         {"inflated_size", r.inflated_size},
         {"train_robust_accuracy", robust_accuracy(r.predictor, in.train, U)},
         {"test_robust_accuracy", robust_accuracy(r.predictor, in.test, U)}};
  Json members = Json::array();
  for (const auto& v : r.predictor.members) members.push_back(to_json(v));
  return Json{{"metrics", m}, {"predictor", Json{{"members", members}}}};
}

Json cmd_fms(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = require_finite(c, in.train.dim());
  FmsResult r;
  if (!c.pool_path.empty() || c.mode == "pool") {
    PoolErm erm{pool_for(c, in.train.dim())};
    r = fms_agnostic(in.train, U, erm, c.eta_mw, c.rounds, c.eps);
  } else {
    const ErmConfig ec = erm_config(c, "erm");
    r = fms_agnostic(in.train, U, [&](const WeightedDataset& wd) { return erm_linear(wd, ec); }, c.eta_mw, c.rounds,
                     c.eps);
  }
  Json m{{"rounds", r.rounds},
         {"eta_mw", r.eta},
         {"train_robust_accuracy", robust_accuracy(r.majority, in.train, U)},
         {"test_robust_accuracy", robust_accuracy(r.majority, in.test, U)}};
  return Json{{"metrics", m}, {"majority", to_json(r.majority)}};
}

Json cmd_cycle(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  Perceptron learner(in.train.dim());
  CycleResult r = cycle_robust(in.train, learner, closed_form_attack(U), default_cap(c));
  Json m{{"oracle_calls", r.oracle_calls},
         {"mistakes", r.mistakes},
         {"passes", r.passes},
         {"train_robust_accuracy", robust_accuracy(r.model, in.train, U)},
         {"test_robust_accuracy", robust_accuracy(r.model, in.test, U)}};
  return Json{{"metrics", m}, {"model", to_json(r.model)}};
}

Json cmd_one_pass(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  Perceptron learner(in.train.dim());
  ResamplingSource src(in.train, SeedStream(c.seed).rng("stream"));
  OnePassResult r = one_pass_robust(src, learner, closed_form_attack(U), c.eps, c.delta, default_cap(c));
  Json m{{"updates", r.updates},
         {"consumed", r.consumed},
         {"run_length", r.run_length},
         {"test_robust_accuracy", robust_accuracy(r.model, in.test, U)}};
  return Json{{"metrics", m}, {"model", to_json(r.model)}};
}

Json cmd_wm(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = require_finite(c, in.train.dim());
  const auto pool = pool_for(c, in.train.dim());
  const double eta = c.eta_mw > 0.0 ? c.eta_mw : 0.5;
  WmResult r = weighted_majority_robust(pool, in.train.samples(), enumeration_attack(U), eta);
  long opt = -1;
  for (const auto& h : pool) {
    long k = 0;
    for (const auto& s : in.train) k += robust_loss(h, s, U);
    opt = opt < 0 ? k : std::min(opt, k);
  }
  const WmConstants wc = wm_constants(eta);
  const double bound = wc.a * static_cast<double>(opt) + wc.b * std::log(static_cast<double>(pool.size()));
  Json w = Json::array();
  for (double v : r.vote.weights.p) w.push_back(v);
  Json m{{"mistakes", r.mistakes}, {"opt", opt}, {"bound", bound}, {"a_eta", wc.a}, {"b_eta", wc.b}};
  return Json{{"metrics", m}, {"weights", w}};
}

Json cmd_rcn(const RunConfig& c) {
  Inputs in = load_inputs(c);
  const double p = parse_norm(c.p);
  RcnConfig rc;
  rc.gamma = c.gamma;
  rc.eta = c.eta;
  rc.eps = c.eps;
  rc.q = dual_exponent(p);
  rc.rng_seed = c.seed;
  DatasetSource src(in.train);
  LinearModel w;
  if (c.method == "md") w = rcn_train_md(src, rc);
  else if (c.method == "glm") w = glm_train(src, rc);
  else fail(ErrorCode::ConfigError, "--method must be md|glm");
  long bad = 0;
  for (const auto& s : in.test) bad += s.y * margin(w, s.x, p) <= c.gamma / 2.0 ? 1 : 0;
  Json m{{"margin_error_half_gamma", static_cast<double>(bad) / static_cast<double>(in.test.size())},
         {"test_accuracy", accuracy(w, in.test)}};
  if (c.method == "md") m["lambda"] = rc.resolved_lambda();
  return Json{{"metrics", m}, {"model", to_json(w)}};
}

RedactConfig redact_config(const RunConfig& c) {
  RedactConfig r;
  r.eps = c.eps;
  if (c.lambda_weight > 0.0) r.lambda = c.lambda_weight;
  r.eta = c.eta;
  r.rng_seed = c.seed;
  return r;
}

Json selection_metrics(const SelectionSet& S, const Dataset& train, const Dataset& test) {
  long rtr = 0, rte = 0, err = 0;
  for (const auto& s : train) rtr += select_member(S, s.x) ? 0 : 1;
  for (const auto& s : test) {
    if (!select_member(S, s.x)) ++rte;
    else err += S.h.predict(s.x) != s.y ? 1 : 0;
  }
  const long sel = static_cast<long>(test.size()) - rte;
  return Json{{"train_rejection", static_cast<double>(rtr) / static_cast<double>(train.size())},
              {"test_rejection", static_cast<double>(rte) / static_cast<double>(test.size())},
              {"selective_test_error", sel > 0 ? static_cast<double>(err) / static_cast<double>(sel) : 0.0},
              {"T", S.size()}};
}

Json cmd_rejectron(const RunConfig& c) {
  Inputs in = load_inputs(c);
  const ErmConfig ec = erm_config(c, "erm");
  auto erm = [&](const WeightedDataset& wd) { return erm_linear(wd, ec); };
  RejectronResult r = rejectron(in.train, points(in.test), redact_config(c), erm);
  Json it = Json::array();
  for (const auto& x : r.iterations) it.push_back(Json{{"score", x.score}, {"removed", x.removed}});
  return Json{{"metrics", selection_metrics(r.S, in.train, in.test)},
              {"iterations", it},
              {"final_score", r.final_score},
              {"selection", to_json(r.S)}};
}

Json cmd_urejectron(const RunConfig& c) {
  Inputs in = load_inputs(c);
  const ErmConfig ec = erm_config(c, "erm");
  LinearModel h = erm_linear(WeightedDataset::uniform(in.train), ec);
  const RedactConfig rc = redact_config(c);
  if (c.backend == "pairs") {
    UrejectronResult r = urejectron_pairs(points(in.train), points(in.test), rc,
                                          FinitePoolPairs{pool_for(c, in.train.dim())}, h);
    Json it = Json::array();
    for (const auto& x : r.iterations) it.push_back(Json{{"score", x.score}, {"removed", x.removed}});
    return Json{{"metrics", selection_metrics(r.S, in.train, in.test)},
                {"iterations", it},
                {"final_score", r.final_score},
                {"selection", to_json(r.S)}};
  }
  if (c.backend != "t1") fail(ErrorCode::ConfigError, "--backend must be t1|pairs");
  DistinguisherResult r = urejectron_t1(h, points(in.train), in.test, points(in.train), rc, erm_config(c, "dist"));
  Json rows = Json::array();
  for (const auto& t : r.table)
    rows.push_back(Json{{"threshold", t.threshold}, {"rej_p", t.rej_p}, {"rej_q", t.rej_q}, {"err_q", t.err_q}});
  return Json{{"metrics", selection_metrics(r.S, in.train, in.test)},
              {"chosen_threshold", r.chosen_threshold},
              {"tradeoff", rows},
              {"selection", to_json(r.S)}};
}

Json cmd_transductive(const RunConfig& c) {
  Inputs in = load_inputs(c);
  PerturbationSpec U = perturbation(c, in.train.dim());
  PoolMode mode = PoolMode::Agnostic;
  if (c.mode == "realizable") mode = PoolMode::Realizable;
  else if (!c.mode.empty() && c.mode != "agnostic") fail(ErrorCode::ConfigError, "--mode must be realizable|agnostic");
  const auto pool = pool_for(c, in.train.dim());
  TransductiveResult r = transductive_pool(pool, in.train, points(in.test), U, mode);
  long correct = 0;
  for (std::size_t j = 0; j < in.test.size(); ++j) correct += r.labels[j] == in.test[j].y ? 1 : 0;
  Json m{{"index", r.index},
         {"train_loss", r.score.train_loss},
         {"test_loss", r.score.test_loss},
         {"test_accuracy", static_cast<double>(correct) / static_cast<double>(in.test.size())}};
  return Json{{"metrics", m}, {"labels", r.labels}, {"model", to_json(r.model)}};
}

void write_text(const RunConfig& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + c.output + "'");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write to '" + c.output + "' failed");
}

int run(const RunConfig& c) {
  if (c.command == "gen-data") {
    const std::size_t n = c.n > 0 ? c.n : default_n(c.command);
    Dataset d = generate(gen_spec(c, n, SeedStream(c.seed).child("train").seed()));
    if (c.eta > 0.0) d = apply_rcn(d, c.eta, SeedStream(c.seed).child("rcn").seed());
    std::ostringstream os;
    write_csv(os, d);
    write_text(c, os.str());
    return 0;
  }
  Json body;
  if (c.command == "certify") body = cmd_certify(c);
  else if (c.command == "attack") body = cmd_attack(c);
  else if (c.command == "rerm-ellipsoid") body = cmd_rerm(c);
  else if (c.command == "roboost") body = cmd_roboost(c);
  else if (c.command == "uroboost") body = cmd_uroboost(c);
  else if (c.command == "alpha-boost") body = cmd_alpha_boost(c);
  else if (c.command == "robustify") body = cmd_robustify(c);
  else if (c.command == "fms") body = cmd_fms(c);
  else if (c.command == "cycle-robust") body = cmd_cycle(c);
  else if (c.command == "one-pass") body = cmd_one_pass(c);
  else if (c.command == "wm") body = cmd_wm(c);
  else if (c.command == "rcn-train") body = cmd_rcn(c);
  else if (c.command == "rejectron") body = cmd_rejectron(c);
  else if (c.command == "urejectron") body = cmd_urejectron(c);
  else if (c.command == "transductive-pool") body = cmd_transductive(c);
  else fail(ErrorCode::ConfigError, "unknown subcommand '" + c.command + "'");
  body["config"] = echo(c);
  write_text(c, dump_document(body));
  return 0;
}

void add_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--input", c.input, "training CSV (x..., y)");
  sub->add_option("--test-input", c.test_input, "test CSV");
  sub->add_option("--model", c.model_path, "model JSON for certify/attack");
  sub->add_option("--pool", c.pool_path, "JSON list of candidate models");
  sub->add_option("--pool-size", c.pool_size, "random pool size when --pool is absent");
  sub->add_option("--output", c.output, "results path (stdout when absent)");
  sub->add_option("--gen", c.gen, "generator: gaussian|moons|union|planted");
  sub->add_option("--n", c.n, "generated training size");
  sub->add_option("--test-n", c.test_n, "generated test size");
  sub->add_option("--dim", c.dim, "generated dimension");
  sub->add_option("--sigma", c.sigma, "gaussian spread");
  sub->add_option("--noise", c.noise, "moons noise");
  sub->add_option("--margin-lo", c.margin_lo, "planted margin lower end (default gamma)");
  sub->add_option("--margin-hi", c.margin_hi, "planted margin upper end");
  sub->add_option("--gamma", c.gamma, "perturbation radius");
  sub->add_option("--p", c.p, "perturbation norm: number >= 1 or inf");
  sub->add_option("--offsets", c.offsets, "finite offsets 'a,b;c,d' (must include zero)");
  sub->add_option("--eps", c.eps, "accuracy parameter");
  sub->add_option("--delta", c.delta, "confidence parameter");
  sub->add_option("--beta", c.beta, "barely-robust level");
  sub->add_option("--eta", c.eta, "label noise rate");
  sub->add_option("--eta-mw", c.eta_mw, "multiplicative-weights rate");
  sub->add_option("--lambda-weight", c.lambda_weight, "Rejectron train weight (default n+1)");
  sub->add_option("--rounds", c.rounds, "round count (0: default)");
  sub->add_option("--seed", c.seed, "global seed");
  sub->add_option("--mode", c.mode, "realizable|agnostic, default|agreement, pool");
  sub->add_option("--method", c.method, "rcn-train method: md|glm");
  sub->add_option("--backend", c.backend, "urejectron backend: t1|pairs");
  sub->add_option("--loss", c.loss, "alpha-boost loss: robust|zero-one");
  sub->add_option("--certifier", c.certifier, "certify method: closed|ellipsoid");
  sub->add_flag("--multi-granularity", c.multi_granularity, "halve the radius every round");
  sub->add_option("--per-round-m", c.per_round_m, "samples per boosting round");
  sub->add_option("--m-learner", c.m_learner, "learner sample size");
  sub->add_option("--labeled", c.labeled, "labeled prefix size for uroboost");
  sub->add_option("--mistake-cap", c.mistake_cap, "online mistake cap");
  sub->add_option("--epochs", c.epochs, "ERM epochs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust learning toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  const char* names[] = {"certify", "attack", "rerm-ellipsoid", "roboost", "uroboost", "alpha-boost",
                         "robustify", "fms", "cycle-robust", "one-pass", "wm", "rcn-train",
                         "rejectron", "urejectron", "transductive-pool", "gen-data"};
  for (const char* n : names) add_options(app.add_subcommand(n, std::string("run ") + n), cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  try {
    return run(cfg);
  } catch (const Error& e) {
    std::cerr << Json{{"error", error_name(e.code())}, {"message", e.what()}}.dump() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 5;
  }
}
