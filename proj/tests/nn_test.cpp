#include <gtest/gtest.h>

#include <cmath>

#include "s2r/nn.hpp"
#include "s2r/rng.hpp"

using namespace s2r;

TEST(Mlp, InitShapesAndGlorotBounds) {
  RngStream rng(1);
  const std::vector<int> sizes = {5, 16, 8, 3};
  Mlp m = init_mlp(sizes, rng);
  ASSERT_EQ(m.layers(), 3);
  EXPECT_EQ(m.in_dim(), 5);
  EXPECT_EQ(m.out_dim(), 3);
  EXPECT_EQ(m.param_count(), 5 * 16 + 16 + 16 * 8 + 8 + 8 * 3 + 3);
  for (int i = 0; i < m.layers(); ++i) {
    EXPECT_EQ(m.W[i].rows(), sizes[i + 1]);
    EXPECT_EQ(m.W[i].cols(), sizes[i]);
    EXPECT_TRUE(m.b[i].isZero(0.0));
    const double limit = std::sqrt(6.0 / (sizes[i] + sizes[i + 1]));
    EXPECT_LE(m.W[i].maxCoeff(), limit);
    EXPECT_GE(m.W[i].minCoeff(), -limit);
    EXPECT_GT(m.W[i].cwiseAbs().maxCoeff(), 0.0);
  }

  RngStream r2(1);
  Mlp m2 = init_mlp(sizes, r2);
  for (int i = 0; i < m.layers(); ++i) EXPECT_EQ(m.W[i], m2.W[i]);

  EXPECT_THROW(init_mlp({4}, rng), std::invalid_argument);
  EXPECT_THROW(init_mlp({4, 0, 2}, rng), std::invalid_argument);
}

TEST(Mlp, ForwardMatchesManualComputation) {
  // 2 -> 2 -> 1 with hand-picked weights; one hidden unit is driven negative
  // so the ReLU actually participates.
  Mlp m = zero_mlp({2, 2, 1});
  m.W[0] << 1.0, -2.0, 0.5, 0.25;
  m.b[0] << 0.1, -3.0;
  m.W[1] << 2.0, 4.0;
  m.b[1] << 0.5;
  Vec x(2);
  x << 1.0, 0.5;
  // Pre-activations: [1 - 1 + 0.1, 0.5 + 0.125 - 3] = [0.1, -2.375] -> ReLU [0.1, 0].
  // Output: 2 * 0.1 + 4 * 0 + 0.5 = 0.7.
  Vec y = mlp_forward(m, x);
  ASSERT_EQ(y.size(), 1);
  EXPECT_NEAR(y[0], 0.7, 1e-15);

  Mat X(2, 3);
  X << 1.0, 0.0, -1.0, 0.5, 0.0, 2.0;
  Mat Y = mlp_forward_batch(m, X);
  ASSERT_EQ(Y.rows(), 1);
  ASSERT_EQ(Y.cols(), 3);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(Y(0, c), mlp_forward(m, X.col(c))[0]);

  EXPECT_THROW(mlp_forward(m, Vec::Zero(3)), std::invalid_argument);
}

TEST(Mlp, ZeroNetworkOutputsZero) {
  Mlp m = zero_mlp({4, 8, 2});
  EXPECT_TRUE(mlp_forward(m, Vec::Constant(4, 3.7)).isZero(0.0));
}

namespace {

// Smallest |pre-activation| over all hidden units and batch columns. A batch
// that puts some unit at its ReLU kink makes finite differences meaningless,
// so the gradient check resamples until there is a safe margin.
double min_kink_margin(const Mlp& m, const Mat& X) {
  double margin = std::numeric_limits<double>::infinity();
  Mat h = X;
  for (int i = 0; i + 1 < m.layers(); ++i) {
    Mat z = (m.W[i] * h).colwise() + m.b[i];
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return margin;
}

}  // namespace

// Backprop against central finite differences on every parameter, across
// several random nets and batches. This is the correctness anchor for all
// training code above it.
TEST(Mlp, GradientsMatchFiniteDifferences) {
  RngStream rng(7);
  const double h = 1e-5;
  const std::vector<std::vector<int>> shapes = {
      {3, 5, 2}, {2, 4, 4, 1}, {1, 3, 1}, {4, 6, 3}, {5, 2, 2, 2}};
  int nets_checked = 0;
  for (int rep = 0; rep < 2; ++rep) {
    for (const auto& sizes : shapes) {
      Mlp m = init_mlp(sizes, rng);
      const int B = 7;
      Mat X(sizes.front(), B), Y(sizes.back(), B);
      bool safe = false;
      for (int tries = 0; tries < 100 && !safe; ++tries) {
        for (int c = 0; c < B; ++c) {
          X.col(c) = rng.normal_vector(sizes.front());
          Y.col(c) = rng.normal_vector(sizes.back());
        }
        safe = min_kink_margin(m, X) > 1e-3;
      }
      ASSERT_TRUE(safe);
      MlpGrads g = zero_grads(m);
      mlp_loss_grad(m, X, Y, g);

      double max_rel = 0.0;
      auto check_param = [&](double& w, double analytic) {
        const double orig = w;
        w = orig + h;
        const double lp = mlp_loss(m, X, Y);
        w = orig - h;
        const double lm = mlp_loss(m, X, Y);
        w = orig;
        const double fd = (lp - lm) / (2 * h);
        // The 1e-6 floor keeps central-difference roundoff (about 1e-11 here)
        // from dominating parameters whose true gradient is essentially zero.
        const double rel = std::abs(fd - analytic) /
                           std::max({std::abs(fd), std::abs(analytic), 1e-6});
        max_rel = std::max(max_rel, rel);
      };
      for (int i = 0; i < m.layers(); ++i) {
        for (int r = 0; r < m.W[i].rows(); ++r)
          for (int c = 0; c < m.W[i].cols(); ++c) check_param(m.W[i](r, c), g.W[i](r, c));
        for (int r = 0; r < m.b[i].size(); ++r) check_param(m.b[i][r], g.b[i][r]);
      }
      EXPECT_LE(max_rel, 1e-4) << "net with " << sizes.size() << " layers, rep " << rep;
      ++nets_checked;
    }
  }
  EXPECT_GE(nets_checked, 10);
}

TEST(Mlp, GradLossAgreesWithLoss) {
  RngStream rng(3);
  Mlp m = init_mlp({4, 6, 2}, rng);
  Mat X(4, 9), Y(2, 9);
  for (int c = 0; c < 9; ++c) {
    X.col(c) = rng.normal_vector(4);
    Y.col(c) = rng.normal_vector(2);
  }
  MlpGrads g = zero_grads(m);
  EXPECT_DOUBLE_EQ(mlp_loss_grad(m, X, Y, g), mlp_loss(m, X, Y));
}

TEST(Adam, FirstStepMovesByLrTimesSign) {
  // With fresh moments the bias-corrected update is exactly
  // lr * g / (|g| + eps) regardless of the gradient's magnitude.
  Mlp m = zero_mlp({1, 1});
  m.W[0](0, 0) = 2.0;
  m.b[0][0] = -1.0;
  MlpGrads g = zero_grads(m);
  g.W[0](0, 0) = 0.3;
  g.b[0][0] = -40.0;
  AdamState s = AdamState::init(m);
  AdamConfig c;
  adam_step(m, g, s, c);
  EXPECT_EQ(s.t, 1);
  EXPECT_NEAR(m.W[0](0, 0), 2.0 - c.lr * 0.3 / (0.3 + c.eps), 1e-12);
  EXPECT_NEAR(m.b[0][0], -1.0 + c.lr * 40.0 / (40.0 + c.eps), 1e-12);
}

TEST(Adam, DescendsQuadratic) {
  // Minimize 0.5 (w x - y)^2 with a single linear unit: loss must fall and
  // the weight must approach y / x.
  Mlp m = zero_mlp({1, 1});
  m.W[0](0, 0) = 5.0;
  Mat X(1, 1), Y(1, 1);
  X(0, 0) = 1.0;
  Y(0, 0) = 2.0;
  AdamState s = AdamState::init(m);
  AdamConfig c;
  c.lr = 0.05;
  MlpGrads g = zero_grads(m);
  const double l0 = mlp_loss(m, X, Y);
  double best = l0;
  for (int i = 0; i < 400; ++i) {
    mlp_loss_grad(m, X, Y, g);
    adam_step(m, g, s, c);
    best = std::min(best, mlp_loss(m, X, Y));
  }
  // Fixed-step Adam settles into a small limit cycle around the optimum, so
  // check the best point visited plus a loose band on where it ends up.
  EXPECT_LT(best, 2e-3);
  EXPECT_LT(mlp_loss(m, X, Y), 0.05 * l0);
  EXPECT_NEAR(m.W[0](0, 0) * 1.0 + m.b[0][0], 2.0, 0.2);
}

TEST(Normalizer, PopulationMomentsAndFloor) {
  Mat X(2, 4);
  X << 1.0, 2.0, 3.0, 4.0,
       5.0, 5.0, 5.0, 5.0;  // constant row exercises the floor
  Normalizer n = Normalizer::fit(X);
  EXPECT_DOUBLE_EQ(n.mu[0], 2.5);
  EXPECT_DOUBLE_EQ(n.mu[1], 5.0);
  EXPECT_DOUBLE_EQ(n.sigma[0], std::sqrt(1.25));  // population, not sample
  EXPECT_DOUBLE_EQ(n.sigma[1], Normalizer::kSigmaFloor);

  Vec x(2);
  x << 4.0, 5.0;
  Vec z = n.apply(x);
  EXPECT_DOUBLE_EQ(z[0], 1.5 / std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(z[1], 0.0);

  Mat Z = n.apply_batch(X);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(Z.col(c), n.apply(X.col(c)));
  // Standardized rows have zero mean and unit variance (where not floored).
  EXPECT_NEAR(Z.row(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR(Z.row(0).array().square().mean(), 1.0, 1e-12);

  EXPECT_THROW(Normalizer::fit(Mat(3, 0)), std::invalid_argument);
}

TEST(MlpJson, BitwiseRoundTrip) {
  RngStream rng(17);
  Mlp m = init_mlp({6, 11, 4}, rng);
  m.b[0] = rng.normal_vector(11);
  Mlp m2 = mlp_from_json(mlp_to_json(m));
  ASSERT_EQ(m2.sizes, m.sizes);
  for (int i = 0; i < m.layers(); ++i) {
    EXPECT_EQ(m2.W[i], m.W[i]);
    EXPECT_EQ(m2.b[i], m.b[i]);
  }

  json j = mlp_to_json(m);
  j["sizes"] = std::vector<int>{6, 4};
  EXPECT_THROW(mlp_from_json(j), std::invalid_argument);
}
