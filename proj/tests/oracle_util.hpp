#pragma once

// Reference computations written independently of the library, used as test
// oracles.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;

inline double pnorm(const Vec& v, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
    return m;
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

inline double dual(double p) {
  if (p == 1.0) return INFINITY;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

// Point of the radius-r p-ball around the origin that minimizes ⟨w, ·⟩.
inline Vec minimizer(const Vec& w, double p, double r) {
  const Eigen::Index d = w.size();
  Vec v = Vec::Zero(d);
  if (std::isinf(p)) {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = w[i] >= 0 ? -r : r;
  } else if (p == 1.0) {
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      if (std::abs(w[i]) > std::abs(w[j])) j = i;
    v[j] = w[j] >= 0 ? -r : r;
  } else {
    const double q = dual(p);
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) s += std::pow(std::abs(w[i]), q);
    const double nq = std::pow(s, 1.0 / q);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double a = r * std::pow(std::abs(w[i]) / nq, q - 1.0);
      v[i] = w[i] >= 0 ? -a : a;
    }
  }
  return v;
}

// Random point of the radius-r p-ball for p ∈ {1, 2, ∞}; every fourth draw is
// pushed onto the sphere.
inline Vec ball_point(std::mt19937_64& g, Eigen::Index d, double p, double r) {
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> U(0, 1);
  Vec v(d);
  if (std::isinf(p)) {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = 2 * U(g) - 1;
  } else if (p == 1.0) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      v[i] = -std::log(1.0 - U(g));
      s += v[i];
    }
    for (Eigen::Index i = 0; i < d; ++i) v[i] = (U(g) < 0.5 ? -1 : 1) * v[i] / s;
  } else {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = N(g);
    v /= v.norm();
  }
  double scale = std::pow(U(g), 1.0 / static_cast<double>(d));
  if (g() % 4 == 0) scale = 1.0;
  if (std::isinf(p) && scale == 1.0) {
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      if (std::abs(v[i]) > std::abs(v[j])) j = i;
    v[j] = v[j] >= 0 ? 1.0 : -1.0;
  }
  return v * (r * scale);
}

inline int sgn(double s) { return s >= 0 ? 1 : -1; }

}  // namespace oracle
