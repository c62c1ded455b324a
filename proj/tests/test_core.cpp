#include <gtest/gtest.h>

#include <cstdlib>

#include "oracle_util.hpp"
#include "roblearn/core.hpp"

using namespace roblearn;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Sample smp(Vector x, int y) { return Sample{std::move(x), y}; }

}  // namespace

TEST(Margin, Examples) {
  EXPECT_DOUBLE_EQ(margin(LinearModel(v2(3, 4)), v2(1, 0), 2.0), 0.6);
  for (double p : {1.0, 2.0, 3.0, kInf}) EXPECT_DOUBLE_EQ(margin(LinearModel(v2(1, 0)), v2(0, 5), p), 0.0);
  EXPECT_DOUBLE_EQ(margin(LinearModel(v2(1, 1)), v2(1, 1), kInf), 1.0);
}

TEST(Margin, BiasEntersTheNumerator) {
  EXPECT_DOUBLE_EQ(margin(LinearModel(v2(3, 4), 2.0), v2(1, 0), 2.0), 1.0);
}

TEST(Margin, ZeroWeightRejected) {
  try {
    margin(LinearModel(v2(0, 0)), v2(1, 0), 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroWeight);
  }
}

TEST(Margin, InvalidNorm) {
  EXPECT_THROW(margin(LinearModel(v2(1, 0)), v2(1, 0), 0.5), Error);
}

TEST(RobustLoss, Examples) {
  const LinearModel w(v2(3, 4));
  EXPECT_EQ(robust_loss(w, smp(v2(1, 0), 1), LpBall{2, 0.5}), 0);
  EXPECT_EQ(robust_loss(w, smp(v2(1, 0), 1), LpBall{2, 0.7}), 1);
  EXPECT_EQ(robust_loss(LinearModel(v2(1, 0)), smp(v2(1, 0), 1), LpBall{2, 0.0}), 0);
}

TEST(RobustLoss, MarginExactlyGammaCountsAsLoss) {
  EXPECT_EQ(robust_loss(LinearModel(v2(1, 0)), smp(v2(0.5, 0), 1), LpBall{2, 0.5}), 1);
  Dataset d(2);
  d.add(v2(0.5, 0), 1);
  EXPECT_DOUBLE_EQ(robust_risk(LinearModel(v2(1, 0)), d, LpBall{2, 0.5}), 1.0);
}

TEST(RobustLoss, SignZeroIsPlus) {
  EXPECT_EQ(LinearModel(v2(1, 0)).predict(v2(0, 3)), 1);
  EXPECT_EQ(zero_one_error(LinearModel(v2(1, 0)), [] {
              Dataset d(2);
              d.add(v2(0, 3), 1);
              return d;
            }()),
            0.0);
  // closed ball: a boundary point is lost even at radius 0
  EXPECT_EQ(robust_loss(LinearModel(v2(1, 0)), smp(v2(0, 3), 1), LpBall{2, 0.0}), 1);
}

TEST(RobustLoss, FiniteVariants) {
  const LinearModel w(v2(1, 0));
  FiniteOffsets o{{v2(0, 0), v2(-2, 0)}};
  EXPECT_EQ(robust_loss(w, smp(v2(1, 0), 1), o), 1);
  EXPECT_EQ(robust_loss(w, smp(v2(3, 0), 1), o), 0);
  FinitePerExample f;
  f.points[0] = {v2(1, 0), v2(-1, 0)};
  EXPECT_EQ(robust_loss(w, smp(v2(1, 0), 1), f, 0), 1);
  try {
    robust_loss(w, smp(v2(1, 0), 1), f, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPerturbations);
  }
}

TEST(RobustRisk, Averaging) {
  const LinearModel w(v2(1, 0));
  Dataset d(2);
  d.add(v2(3, 0), 1);
  d.add(v2(0.2, 0), 1);
  d.add(v2(-3, 0), -1);
  d.add(v2(-0.2, 0), -1);
  EXPECT_DOUBLE_EQ(robust_risk(w, d, LpBall{2, 1.0}), 0.5);
  EXPECT_DOUBLE_EQ(robust_risk(w, d, LpBall{2, 0.1}), 0.0);
}

TEST(RobustRisk, EmptyDataset) {
  try {
    robust_risk(LinearModel(v2(1, 0)), Dataset(2), LpBall{2, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(InverseBlowup, Examples) {
  auto b = std::get<LpBall>(inverse_blowup(LpBall{2, 1.0}));
  EXPECT_EQ(b.gamma, 2.0);
  EXPECT_EQ(b.p, 2.0);
  auto o = std::get<FiniteOffsets>(inverse_blowup(FiniteOffsets{{v2(0, 0), v2(1, 0)}}));
  ASSERT_EQ(o.offsets.size(), 3u);
  EXPECT_EQ(o.offsets[0], v2(-1, 0));
  EXPECT_EQ(o.offsets[1], v2(0, 0));
  EXPECT_EQ(o.offsets[2], v2(1, 0));
  auto z = std::get<FiniteOffsets>(inverse_blowup(FiniteOffsets{{v2(0, 0)}}));
  ASSERT_EQ(z.offsets.size(), 1u);
  EXPECT_EQ(z.offsets[0], v2(0, 0));
}

TEST(InverseBlowup, ComposesToFourGamma) {
  auto b = std::get<LpBall>(inverse_blowup(inverse_blowup(LpBall{kInf, 0.3})));
  EXPECT_DOUBLE_EQ(b.gamma, 1.2);
}

TEST(InverseBlowup, PerExampleUnsupported) {
  FinitePerExample f;
  f.points[0] = {v2(0, 0)};
  try {
    inverse_blowup(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsupported);
  }
}

TEST(Inflate, Counting) {
  Dataset d(2);
  d.add(v2(0, 0), 1);
  d.add(v2(1, 1), -1);
  d.add(v2(2, 2), 1);
  auto inf = inflate(d, FiniteOffsets{{v2(0, 0), v2(1, 0)}});
  EXPECT_EQ(inf.data.size(), 6u);
  EXPECT_EQ(inf.origin, (std::vector<std::size_t>{0, 0, 1, 1, 2, 2}));
  EXPECT_EQ(inf.data[0].x, v2(0, 0));
  EXPECT_EQ(inf.data[1].x, v2(1, 0));
  EXPECT_EQ(inf.data[1].y, 1);
  EXPECT_EQ(inf.data[3].y, -1);
}

TEST(Inflate, IdentityForZeroOffset) {
  Dataset d(2);
  d.add(v2(0.5, -1), 1);
  d.add(v2(1, 1), -1);
  auto inf = inflate(d, FiniteOffsets{{v2(0, 0)}});
  EXPECT_EQ(inf.data, d);
}

TEST(Inflate, SizeLimit) {
  Dataset d(2);
  for (int i = 0; i < 10; ++i) d.add(v2(i, 0), 1);
  try {
    inflate(d, FiniteOffsets{{v2(0, 0), v2(1, 0)}}, 19);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeLimit);
  }
  EXPECT_EQ(inflate(d, FiniteOffsets{{v2(0, 0), v2(1, 0)}}, 20).data.size(), 20u);
}

TEST(Inflate, PerExampleLists) {
  Dataset d(2);
  d.add(v2(0, 0), 1);
  d.add(v2(5, 5), -1);
  FinitePerExample f;
  f.points[0] = {v2(0, 0)};
  f.points[1] = {v2(5, 5), v2(6, 5), v2(5, 6)};
  auto inf = inflate(d, f);
  EXPECT_EQ(inf.data.size(), 4u);
  EXPECT_EQ(inf.origin.back(), 1u);
}

TEST(Spec, Validation) {
  EXPECT_THROW(validate(FiniteOffsets{{v2(1, 0)}}), Error);
  EXPECT_THROW(validate(LpBall{2, -1.0}), Error);
  EXPECT_THROW(validate(LpBall{0.5, 1.0}), Error);
  FinitePerExample f;
  f.points[0] = {};
  EXPECT_THROW(validate(f), Error);
  EXPECT_NO_THROW(validate(FiniteOffsets{{v2(1, 0), v2(0, 0)}}));
}

TEST(DualMaximizer, TieBreaks) {
  EXPECT_EQ(dual_maximizer(v2(0, -2), kInf), v2(1, -1));
  EXPECT_EQ(dual_maximizer(v2(-3, 3), 1.0), v2(-1, 0));
  EXPECT_TRUE(dual_maximizer(v2(3, 4), 2.0).isApprox(v2(0.6, 0.8)));
}

TEST(DualMaximizer, AttainsDualNorm) {
  std::mt19937_64 g(11);
  std::normal_distribution<double> N(0, 1);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    for (int t = 0; t < 50; ++t) {
      Vector w(4);
      for (int i = 0; i < 4; ++i) w[i] = N(g);
      Vector v = dual_maximizer(w, p);
      EXPECT_NEAR(oracle::pnorm(v, p), 1.0, 1e-9);
      EXPECT_NEAR(w.dot(v), oracle::pnorm(w, oracle::dual(p)), 1e-9);
    }
  }
}

TEST(Dataset, Validation) {
  Dataset d(2);
  EXPECT_THROW(d.add(Vector::Zero(3), 1), Error);
  EXPECT_THROW(d.add(v2(0, 0), 0), Error);
  EXPECT_THROW(d.add(v2(NAN, 0), 1), Error);
  d.add(v2(1, 2), -1);
  EXPECT_EQ(d.size(), 1u);
}

// The closed form against a sampling oracle, both directions.
TEST(RobustLossProperty, ClosedFormMatchesSampling) {
  std::mt19937_64 g(2024);
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> U(0, 1);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const Index d = 1 + static_cast<Index>(g() % 5);
    const double p = std::vector<double>{1.0, 2.0, kInf}[g() % 3];
    Vector w(d), x(d);
    for (Index i = 0; i < d; ++i) {
      w[i] = N(g);
      x[i] = N(g);
    }
    const double gamma = 2.0 * U(g);
    const int y = U(g) < 0.5 ? 1 : -1;
    const LinearModel h(w);
    const int loss = robust_loss(h, smp(x, y), LpBall{p, gamma});
    if (loss == 0) {
      for (int k = 0; k < 2000; ++k) {
        const Vector z = x + oracle::ball_point(g, d, p, gamma);
        ASSERT_EQ(oracle::sgn(w.dot(z)), y);
      }
    } else {
      const Vector z = x + oracle::minimizer(Vector(y * w), p, gamma);
      EXPECT_LE(oracle::pnorm(z - x, p), gamma * (1 + 1e-12));
      EXPECT_LE(y * w.dot(z), 1e-12);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 300);
}

TEST(RobustLossProperty, MonotoneInGamma) {
  std::mt19937_64 g(7);
  std::normal_distribution<double> N(0, 1);
  for (int t = 0; t < 200; ++t) {
    Vector w(3), x(3);
    for (int i = 0; i < 3; ++i) {
      w[i] = N(g);
      x[i] = N(g);
    }
    int prev = 0;
    for (double gamma = 0.0; gamma < 3.0; gamma += 0.05) {
      const int l = robust_loss(LinearModel(w), smp(x, 1), LpBall{2, gamma});
      EXPECT_GE(l, prev);
      prev = l;
    }
  }
}

TEST(RobustLossProperty, GammaZeroIsZeroOne) {
  std::mt19937_64 g(9);
  std::normal_distribution<double> N(0, 1);
  Dataset d(3);
  for (int i = 0; i < 500; ++i) {
    Vector x(3);
    for (int k = 0; k < 3; ++k) x[k] = N(g);
    d.add(x, N(g) > 0 ? 1 : -1);
  }
  Vector w(3);
  w << 0.3, -1.0, 0.2;
  const LinearModel h(w, 0.1);
  for (double p : {1.0, 2.0, kInf}) EXPECT_EQ(robust_risk(h, d, LpBall{p, 0.0}), zero_one_error(h, d));
}

TEST(Parallel, CountIndependentOfThreads) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> N(0, 1);
  Dataset d(2);
  for (int i = 0; i < 5000; ++i) d.add(v2(N(g), N(g)), N(g) > 0 ? 1 : -1);
  const LinearModel h(v2(1, 0.5));
  ::setenv("ROBLEARN_THREADS", "1", 1);
  const double r1 = robust_risk(h, d, LpBall{2, 0.3});
  ::setenv("ROBLEARN_THREADS", "4", 1);
  EXPECT_EQ(thread_count(), 4u);
  const double r4 = robust_risk(h, d, LpBall{2, 0.3});
  ::unsetenv("ROBLEARN_THREADS");
  EXPECT_EQ(r1, r4);
  EXPECT_EQ(thread_count(), 1u);
}

TEST(ConstantModel, ActsAsSignOfBias) {
  const LinearModel c(Vector::Zero(2), -1.0);
  EXPECT_TRUE(c.is_constant());
  EXPECT_EQ(robust_loss(c, smp(v2(5, 5), -1), LpBall{2, 3.0}), 0);
  EXPECT_EQ(robust_loss(c, smp(v2(5, 5), 1), LpBall{2, 3.0}), 1);
}
