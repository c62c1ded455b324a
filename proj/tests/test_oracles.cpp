#include <gtest/gtest.h>

#include "oracle_util.hpp"
#include "roblearn/oracles.hpp"

using namespace roblearn;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector randn(std::mt19937_64& g, Index d) {
  std::normal_distribution<double> N(0, 1);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = N(g);
  return v;
}

}  // namespace

TEST(Attack, Examples) {
  auto z = attack(LinearModel(v2(1, 0)), Sample{v2(0.5, 0), 1}, LpBall{2, 1.0});
  ASSERT_TRUE(z.has_value());
  EXPECT_TRUE(z->isApprox(v2(-0.5, 0)));
  EXPECT_FALSE(attack(LinearModel(v2(1, 0)), Sample{v2(2, 0), 1}, LpBall{2, 1.0}).has_value());
  auto f = attack(LinearModel(v2(1, 0)), Sample{v2(1, 0), 1}, FiniteOffsets{{v2(0, 0), v2(-2, 0)}});
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(*f, v2(-1, 0));
}

TEST(Attack, AgreesWithRobustLossAndWitnessIsValid) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 400; ++t) {
    const Index d = 1 + static_cast<Index>(g() % 4);
    const double p = std::vector<double>{1.0, 2.0, kInf}[g() % 3];
    const LpBall ball{p, 1.5 * U(g)};
    const LinearModel h(randn(g, d), U(g) - 0.5);
    const Sample s{randn(g, d), U(g) < 0.5 ? 1 : -1};
    auto z = attack(h, s, ball);
    EXPECT_EQ(z.has_value(), robust_loss(h, s, ball) == 1);
    if (z) {
      EXPECT_LE(oracle::pnorm(*z - s.x, p), ball.gamma * (1 + 1e-12));
      EXPECT_LE(s.y * (h.w.dot(*z) + h.bias), 1e-12);
    }
  }
}

TEST(Separation, Examples) {
  EXPECT_TRUE(is_inside(separation_oracle(LpBall{2, 1.0}, v2(0, 0), v2(0.5, 0))));
  auto a = separation_oracle(LpBall{2, 1.0}, v2(0, 0), v2(2, 0));
  ASSERT_FALSE(is_inside(a));
  const auto& h = std::get<Hyperplane>(a);
  EXPECT_TRUE(h.normal.isApprox(v2(1, 0)));
  EXPECT_DOUBLE_EQ(h.offset, 1.0);
  auto b = separation_oracle(LpBall{kInf, 1.0}, v2(0, 0), v2(0.5, -3));
  ASSERT_FALSE(is_inside(b));
  EXPECT_EQ(std::get<Hyperplane>(b).normal, v2(0, -1));
}

TEST(Separation, UnsupportedGeometry) {
  try {
    separation_oracle(LpBall{3, 1.0}, v2(0, 0), v2(2, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedGeometry);
  }
}

// Every returned hyperplane cuts the query off and keeps sampled members.
TEST(Separation, HyperplanesSeparate) {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> U(0, 1);
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 1, 1;
  Vector b(4);
  b << 1, 1, 1, 1.5;
  for (int t = 0; t < 300; ++t) {
    const Vector x = randn(g, 2);
    const Vector z = x + 3.0 * randn(g, 2);
    const int kind = static_cast<int>(g() % 4);
    RegionDescriptor R = kind == 3 ? RegionDescriptor(Polytope{A, b})
                                   : RegionDescriptor(LpBall{std::vector<double>{1.0, 2.0, kInf}[kind], 1.0});
    auto ans = separation_oracle(R, x, z);
    auto member = [&](const Vector& q) {
      if (kind == 3) return ((A * (q - x) - b).array() <= 1e-12).all();
      return oracle::pnorm(q - x, std::get<LpBall>(R).p) <= 1.0 + 1e-12;
    };
    EXPECT_EQ(is_inside(ans), member(z));
    if (is_inside(ans)) continue;
    const auto& h = std::get<Hyperplane>(ans);
    EXPECT_GT(h.normal.dot(z), h.offset);
    for (int k = 0; k < 200; ++k) {
      Vector q = x + 3.0 * Vector(randn(g, 2) * U(g));
      if (member(q)) {
        EXPECT_LE(h.normal.dot(q), h.offset + 1e-9);
      }
    }
  }
}

TEST(Ellipsoid, Examples) {
  EllipsoidConfig cfg = default_ellipsoid_config(2, 0.5);
  auto inside = ellipsoid_feasible([](const Vector& w) { return separation_oracle(LpBall{kInf, 0.5}, Vector::Zero(2), w); },
                                   2, cfg);
  ASSERT_TRUE(inside.has_value());
  EXPECT_LE(inside->cwiseAbs().maxCoeff(), 0.5);

  // w1 ≥ 1 and w1 ≤ −1
  SeparationFn empty = [](const Vector& w) -> SeparationAnswer {
    if (w[0] < 1.0) return Hyperplane{v2(-1, 0), -1.0};
    return Hyperplane{v2(1, 0), -1.0};
  };
  EXPECT_FALSE(ellipsoid_feasible(empty, 2, cfg).has_value());

  SeparationFn cone = [](const Vector& w) -> SeparationAnswer {
    if (w[0] < 0.1) return Hyperplane{v2(-1, 0), -0.1};
    if (w.norm() > 1.0) return Hyperplane{w / w.norm(), 1.0};
    return Inside{};
  };
  auto c = ellipsoid_feasible(cone, 2, cfg);
  ASSERT_TRUE(c.has_value());
  EXPECT_GE((*c)[0], 0.1);
  EXPECT_LE(c->norm(), 1.0);
}

TEST(Ellipsoid, OracleViolation) {
  SeparationFn bad = [](const Vector& w) -> SeparationAnswer { return Hyperplane{v2(1, 0), w[0] + 1.0}; };
  try {
    ellipsoid_feasible(bad, 2, default_ellipsoid_config(2, 0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OracleViolation);
  }
}

TEST(Certify, Examples) {
  const EllipsoidConfig cfg = default_ellipsoid_config(2, 0.5);
  const auto sep = separation_for(LpBall{2, 0.5});
  EXPECT_TRUE(ellipsoid_certify(LinearModel(v2(1, 0)), Sample{v2(2, 0), 1}, sep, cfg).robust);
  auto c = ellipsoid_certify(LinearModel(v2(1, 0)), Sample{v2(0.3, 0), 1}, sep, cfg);
  ASSERT_FALSE(c.robust);
  EXPECT_LE(c.counterexample[0], 0.0);
  EXPECT_LE((c.counterexample - v2(0.3, 0)).norm(), 0.5);
  // the intersection is the single point (0, 0)
  EXPECT_TRUE(ellipsoid_certify(LinearModel(v2(1, 0)), Sample{v2(1, 0), 1}, separation_for(LpBall{2, 1.0}),
                                default_ellipsoid_config(2, 1.0))
                  .robust);
}

TEST(Certify, AgreesWithClosedFormAwayFromBoundary) {
  std::mt19937_64 g(23);
  std::uniform_real_distribution<double> U(0, 1);
  int n = 0;
  while (n < 200) {
    const Index d = 2 + static_cast<Index>(g() % 2);
    const double p = g() % 2 ? 2.0 : kInf;
    const double gamma = 0.2 + U(g);
    const LinearModel h(randn(g, d));
    const Sample s{randn(g, d), U(g) < 0.5 ? 1 : -1};
    EllipsoidConfig cfg = default_ellipsoid_config(d, gamma);
    const double m = s.y * margin(h, s.x, p);
    if (std::abs(m - gamma) < 10 * cfg.volume_eps) continue;
    const bool closed = robust_loss(h, s, LpBall{p, gamma}) == 0;
    EXPECT_EQ(ellipsoid_certify(h, s, separation_for(LpBall{p, gamma}), cfg).robust, closed)
        << "margin " << m << " gamma " << gamma << " p " << p;
    ++n;
  }
}

TEST(Rerm, Examples) {
  Dataset d(2);
  d.add(v2(2, 0), 1);
  d.add(v2(-2, 0), -1);
  EllipsoidConfig cfg = default_ellipsoid_config(2, 1.0);
  cfg.feas_slack = 0.5;
  LinearModel w = rerm_ellipsoid(d, LpBall{2, 1.0}, cfg);
  EXPECT_GT(w.w[0], 0.0);
  for (const auto& s : d) EXPECT_EQ(robust_loss(w, s, LpBall{2, 1.0}), 0);
  try {
    rerm_ellipsoid(d, LpBall{2, 3.0}, default_ellipsoid_config(2, 3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSeparable);
  }
}

TEST(Rerm, SinglePointHalfSlack) {
  Dataset d(2);
  d.add(v2(1, 1), 1);
  EllipsoidConfig cfg = default_ellipsoid_config(2, 0.0);
  cfg.feas_slack = 0.2;
  LinearModel w = rerm_ellipsoid(d, LpBall{2, 0.0}, cfg);
  EXPECT_GE(w.w.dot(v2(1, 1)), 0.1);
}

TEST(Rerm, PlantedInstancesCertified) {
  std::mt19937_64 g(31);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int t = 0; t < 8; ++t) {
    const double p = std::vector<double>{1.0, 2.0, kInf}[t % 3];
    const double gamma = 0.1;
    Vector ws = randn(g, 2);
    ws /= ws.norm();
    Dataset d(2);
    while (d.size() < 10) {
      Vector x(2);
      x << U(g), U(g);
      const double m = margin(LinearModel(ws), x, p);
      if (std::abs(m) < gamma + 0.2) continue;
      d.add(x, m > 0 ? 1 : -1);
    }
    EllipsoidConfig cfg = default_ellipsoid_config(2, gamma);
    LinearModel w = rerm_ellipsoid(d, LpBall{p, gamma}, cfg);
    for (const auto& s : d) {
      EXPECT_TRUE(ellipsoid_certify(w, s, separation_for(LpBall{p, gamma}), cfg).robust);
      EXPECT_EQ(robust_loss(w, s, LpBall{p, gamma}), 0);
    }
  }
}

TEST(Rerm, PolytopeRegion) {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Vector b = Vector::Constant(4, 0.5);
  Dataset d(2);
  d.add(v2(1.5, 0.2), 1);
  d.add(v2(-1.5, -0.3), -1);
  LinearModel w = rerm_ellipsoid(d, Polytope{A, b}, default_ellipsoid_config(2, 0.5));
  // independent check over the box corners
  for (const auto& s : d)
    for (double a : {-0.5, 0.5})
      for (double c : {-0.5, 0.5}) EXPECT_GT(s.y * w.w.dot(s.x + v2(a, c)), 0.0);
}
