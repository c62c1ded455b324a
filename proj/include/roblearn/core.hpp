#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "roblearn/error.hpp"

namespace roblearn {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Sample {
  Vector x;
  int y = 1;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Index d) : d_(d) {}

  Index dim() const { return d_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  void add(Sample s) {
    if (d_ == 0) d_ = s.x.size();
    if (s.x.size() != d_ || d_ < 1)
      fail(ErrorCode::DimensionMismatch, "sample dimension " + std::to_string(s.x.size()) +
                                              " vs dataset dimension " + std::to_string(d_));
    if (!s.x.allFinite()) fail(ErrorCode::InvalidArgument, "sample has non-finite entries");
    if (s.y != 1 && s.y != -1) fail(ErrorCode::InvalidArgument, "label must be -1 or +1");
    samples_.push_back(std::move(s));
  }
  void add(Vector x, int y) { add(Sample{std::move(x), y}); }

  void reserve(std::size_t n) { samples_.reserve(n); }

  bool operator==(const Dataset& o) const {
    if (d_ != o.d_ || samples_.size() != o.samples_.size()) return false;
    for (std::size_t i = 0; i < samples_.size(); ++i)
      if (samples_[i].y != o.samples_[i].y || samples_[i].x != o.samples_[i].x) return false;
    return true;
  }

 private:
  Index d_ = 0;
  std::vector<Sample> samples_;
};

inline int sign_of(double v) { return v >= 0.0 ? 1 : -1; }

// A zero w is allowed only as a constant predictor sign(bias), which is what
// online learners start from. margin() rejects it.
struct LinearModel {
  Vector w;
  double bias = 0.0;

  LinearModel() = default;
  explicit LinearModel(Vector w_, double b = 0.0) : w(std::move(w_)), bias(b) {}

  Index dim() const { return w.size(); }
  double score(const Vector& x) const { return w.dot(x) + bias; }
  int predict(const Vector& x) const { return sign_of(score(x)); }
  bool is_constant() const { return (w.array() == 0.0).all(); }

  bool operator==(const LinearModel& o) const { return bias == o.bias && w == o.w; }
};

template <class P>
concept Predictor = requires(const P& p, const Vector& x) {
  { p.predict(x) } -> std::convertible_to<int>;
};

// ---- norms ----

inline void check_norm(double p) {
  if (!(p >= 1.0)) fail(ErrorCode::InvalidNorm, "norm exponent must be >= 1, got " + std::to_string(p));
}

inline double dual_exponent(double p) {
  check_norm(p);
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

inline double lp_norm(const Vector& v, double p) {
  check_norm(p);
  if (std::isinf(p)) return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

// Unit-ℓp vector v maximizing ⟨w,v⟩, so ⟨w,v⟩ = ‖w‖_q.
inline Vector dual_maximizer(const Vector& w, double p) {
  check_norm(p);
  const Index d = w.size();
  Vector v = Vector::Zero(d);
  if (d == 0) return v;
  if (std::isinf(p)) {
    for (Index i = 0; i < d; ++i) v[i] = w[i] >= 0.0 ? 1.0 : -1.0;
    return v;
  }
  if (p == 1.0) {
    Index j = 0;
    for (Index i = 1; i < d; ++i)
      if (std::abs(w[i]) > std::abs(w[j])) j = i;
    v[j] = w[j] >= 0.0 ? 1.0 : -1.0;
    return v;
  }
  const double q = dual_exponent(p);
  const double nq = lp_norm(w, q);
  if (nq == 0.0) {
    v[0] = 1.0;
    return v;
  }
  if (p == 2.0) return w / nq;
  for (Index i = 0; i < d; ++i) {
    const double a = std::pow(std::abs(w[i]) / nq, q - 1.0);
    v[i] = w[i] >= 0.0 ? a : -a;
  }
  return v;
}

// ---- perturbation sets ----

struct LpBall {
  double p = 2.0;
  double gamma = 0.0;
};

struct FiniteOffsets {
  std::vector<Vector> offsets;
};

struct FinitePerExample {
  std::map<std::size_t, std::vector<Vector>> points;
};

using PerturbationSpec = std::variant<LpBall, FiniteOffsets, FinitePerExample>;

inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

inline void validate(const PerturbationSpec& U) {
  if (const auto* b = std::get_if<LpBall>(&U)) {
    check_norm(b->p);
    if (!(b->gamma >= 0.0) || std::isinf(b->gamma))
      fail(ErrorCode::InvalidArgument, "ball radius must be finite and >= 0");
  } else if (const auto* o = std::get_if<FiniteOffsets>(&U)) {
    if (o->offsets.empty()) fail(ErrorCode::InvalidArgument, "offset list is empty");
    bool zero = false;
    for (const auto& v : o->offsets) zero = zero || (v.array() == 0.0).all();
    if (!zero) fail(ErrorCode::InvalidArgument, "offset list must contain the zero offset");
  } else {
    for (const auto& [i, pts] : std::get<FinitePerExample>(U).points)
      if (pts.empty())
        fail(ErrorCode::InvalidArgument, "perturbation list for example " + std::to_string(i) + " is empty");
  }
}

inline bool is_finite_spec(const PerturbationSpec& U) { return !std::holds_alternative<LpBall>(U); }

// Explicit U(x) for the finite variants.
inline std::vector<Vector> perturbations(const PerturbationSpec& U, const Vector& x,
                                         std::size_t index = kNoIndex) {
  if (const auto* o = std::get_if<FiniteOffsets>(&U)) {
    std::vector<Vector> out;
    out.reserve(o->offsets.size());
    for (const auto& off : o->offsets) {
      if (off.size() != x.size()) fail(ErrorCode::DimensionMismatch, "offset dimension mismatch");
      out.push_back(x + off);
    }
    return out;
  }
  if (const auto* f = std::get_if<FinitePerExample>(&U)) {
    auto it = f->points.find(index);
    if (index == kNoIndex || it == f->points.end())
      fail(ErrorCode::MissingPerturbations, "no perturbation list for example " +
                                                 (index == kNoIndex ? std::string("<unindexed>") : std::to_string(index)));
    for (const auto& z : it->second)
      if (z.size() != x.size()) fail(ErrorCode::DimensionMismatch, "perturbation dimension mismatch");
    return it->second;
  }
  fail(ErrorCode::Unsupported, "perturbations() needs a finite perturbation set");
}

inline std::size_t perturbation_count(const PerturbationSpec& U, std::size_t index = kNoIndex) {
  if (const auto* o = std::get_if<FiniteOffsets>(&U)) return o->offsets.size();
  if (const auto* f = std::get_if<FinitePerExample>(&U)) {
    auto it = f->points.find(index);
    if (it == f->points.end()) fail(ErrorCode::MissingPerturbations, "no perturbation list for example");
    return it->second.size();
  }
  fail(ErrorCode::Unsupported, "perturbation_count() needs a finite perturbation set");
}

// ---- parallel helpers ----

inline unsigned thread_count() {
  if (const char* s = std::getenv("ROBLEARN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end != s && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return 1;
}

// Sums f(i) over [0, n). Integer-valued f keeps the result independent of the
// thread count.
template <class F>
long parallel_count(std::size_t n, F&& f) {
  const unsigned t = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n / 64, 1));
  if (t <= 1) {
    long s = 0;
    for (std::size_t i = 0; i < n; ++i) s += f(i);
    return s;
  }
  std::vector<long> part(t, 0);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(t);
  for (unsigned k = 0; k < t; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < n; i += t) part[k] += f(i);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  long s = 0;
  for (long v : part) s += v;
  return s;
}

// ---- margin and robust loss ----

inline double margin(const LinearModel& model, const Vector& x, double p) {
  if (x.size() != model.dim()) fail(ErrorCode::DimensionMismatch, "model/point dimension mismatch");
  const double nq = lp_norm(model.w, dual_exponent(p));
  if (nq == 0.0) fail(ErrorCode::ZeroWeight, "weight vector has zero dual norm");
  return model.score(x) / nq;
}

inline double margin(const LinearModel& model, const Vector& x, const LpBall& b) { return margin(model, x, b.p); }

// Worst-case point of the γ-ball for (x, y): x − γ·y·v.
inline Vector worst_case_point(const LinearModel& model, const Sample& s, const LpBall& b) {
  return s.x - b.gamma * s.y * dual_maximizer(model.w, b.p);
}

template <Predictor P>
int robust_loss(const P& model, const Sample& s, const PerturbationSpec& U, std::size_t index = kNoIndex) {
  if (std::holds_alternative<LpBall>(U)) {
    if constexpr (std::same_as<P, LinearModel>) {
      const auto& b = std::get<LpBall>(U);
      if (model.is_constant()) return model.predict(s.x) != s.y ? 1 : 0;
      return s.y * margin(model, s.x, b.p) <= b.gamma ? 1 : 0;
    } else {
      fail(ErrorCode::Unsupported, "ball robust loss is only closed-form for linear models");
    }
  }
  for (const auto& z : perturbations(U, s.x, index))
    if (model.predict(z) != s.y) return 1;
  return 0;
}

template <class P>
double robust_risk(const P& model, const Dataset& data, const PerturbationSpec& U) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "robust_risk on empty dataset");
  const long bad = parallel_count(data.size(), [&](std::size_t i) { return robust_loss(model, data[i], U, i); });
  return static_cast<double>(bad) / static_cast<double>(data.size());
}

template <Predictor P>
double zero_one_error(const P& model, const Dataset& data) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "zero_one_error on empty dataset");
  const long bad = parallel_count(data.size(), [&](std::size_t i) { return model.predict(data[i].x) != data[i].y ? 1 : 0; });
  return static_cast<double>(bad) / static_cast<double>(data.size());
}

// ---- inverse blow-up and inflation ----

inline PerturbationSpec inverse_blowup(const PerturbationSpec& U) {
  validate(U);
  if (const auto* b = std::get_if<LpBall>(&U)) return LpBall{b->p, 2.0 * b->gamma};
  if (const auto* o = std::get_if<FiniteOffsets>(&U)) {
    std::vector<Vector> out;
    for (const auto& a : o->offsets)
      for (const auto& c : o->offsets) {
        Vector v = a - c;
        bool dup = false;
        for (const auto& e : out) dup = dup || e == v;
        if (!dup) out.push_back(std::move(v));
      }
    std::sort(out.begin(), out.end(), [](const Vector& a, const Vector& b) {
      return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    });
    return FiniteOffsets{std::move(out)};
  }
  fail(ErrorCode::Unsupported, "inverse_blowup has no closed form for per-example perturbation lists");
}

struct InflatedDataset {
  Dataset data;
  std::vector<std::size_t> origin;
};

inline InflatedDataset inflate(const Dataset& data, const PerturbationSpec& U,
                               std::size_t size_cap = 10'000'000) {
  validate(U);
  if (!is_finite_spec(U)) fail(ErrorCode::Unsupported, "inflate needs a finite perturbation set");
  std::size_t total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) total += perturbation_count(U, i);
  if (total > size_cap)
    fail(ErrorCode::SizeLimit, "inflated size " + std::to_string(total) + " exceeds cap " + std::to_string(size_cap));
  InflatedDataset out{Dataset(data.dim()), {}};
  out.data.reserve(total);
  out.origin.reserve(total);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (auto& z : perturbations(U, data[i].x, i)) {
      out.data.add(std::move(z), data[i].y);
      out.origin.push_back(i);
    }
  return out;
}

}  // namespace roblearn
