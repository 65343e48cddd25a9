#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "mflm/errors.hpp"
#include "mflm/simulate.hpp"

using namespace mflm;

TEST(Simulate, ShapesAndSupport) {
  const auto s1 = simulate(SimConfig{1, 50, 0.01, 40, 7, false});
  EXPECT_EQ(s1.data.p(), 7u);
  EXPECT_EQ(s1.data.n(), 50);
  EXPECT_EQ(s1.data.block(0).cols(), 40);
  EXPECT_EQ(s1.data.block(3).cols(), 4);
  EXPECT_EQ(s1.data.block(6).cols(), 1);
  EXPECT_EQ(s1.support, (std::vector<std::size_t>{0}));

  const auto s2 = simulate(SimConfig{2, 50, 0.01, 40, 7, false});
  EXPECT_EQ(s2.support, (std::vector<std::size_t>{0, 3, 6}));
  const auto s0 = simulate(SimConfig{2, 50, 0.01, 40, 7, true});
  EXPECT_TRUE(s0.support.empty());
}

TEST(Simulate, SameSeedSameData) {
  const auto a = simulate(SimConfig{2, 30, 0.1, 20, 42, false});
  const auto b = simulate(SimConfig{2, 30, 0.1, 20, 42, false});
  const auto c = simulate(SimConfig{2, 30, 0.1, 20, 43, false});
  EXPECT_EQ(a.data.y(), b.data.y());
  for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(a.data.block(j), b.data.block(j));
  EXPECT_NE(a.data.y(), c.data.y());
}

TEST(Simulate, CovariateStructure) {
  const auto s = simulate(SimConfig{1, 200, 0.01, 30, 3, false});
  const auto& d = s.data;
  EXPECT_EQ(d.block(0).col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((d.block(2) - d.block(1).array().square().matrix()).cwiseAbs().maxCoeff(), 0.0);

  Eigen::Matrix4d A;
  A << -1, 0, 1, 2, 3, -1, 0, 1, 2, 3, -1, 0, 1, 2, 3, -1;
  const Eigen::MatrixXd Z = A.inverse() * d.block(3).transpose();
  EXPECT_LE(Z.cwiseAbs().maxCoeff(), 0.5 + 1e-12);

  EXPECT_NEAR(d.block(5).mean(), 0.0, 1e-10);
  EXPECT_NEAR(d.block(6).mean(), 0.0, 1e-10);
}

TEST(Simulate, BrownianIncrementVariance) {
  const auto s = simulate(SimConfig{1, 4000, 0.01, 11, 5, false});
  const Eigen::VectorXd end = s.data.block(0).col(10);
  const double var = end.squaredNorm() / 4000.0;
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(Simulate, NoiseLevelAndTruth) {
  const auto quiet = simulate(SimConfig{2, 300, 0.0, 30, 9, false});
  EXPECT_LE((quiet.data.y() - quiet.data.predict(quiet.beta_star)).cwiseAbs().maxCoeff(), 0.0);

  const auto noisy = simulate(SimConfig{2, 5000, 0.5, 30, 9, false});
  const Eigen::VectorXd e = noisy.data.y() - noisy.data.predict(noisy.beta_star);
  EXPECT_NEAR(std::sqrt(e.squaredNorm() / 5000.0), 0.5, 0.03);

  const auto& t = (*noisy.beta_star.space())[0].grid();
  EXPECT_NEAR(noisy.beta_star.block(0)[0], 10.0, 1e-12);
  EXPECT_NEAR(noisy.beta_star.block(0)[t.size() - 1], 10.0 * std::cos(2.0 * std::numbers::pi), 1e-12);
  EXPECT_EQ(noisy.beta_star.block(3), Eigen::Vector4d(1.0, -1.0, 0.0, 3.0));
}

TEST(Simulate, RejectsBadConfig) {
  EXPECT_THROW(simulate(SimConfig{3, 50, 0.01, 40, 1, false}), InvalidArgument);
  EXPECT_THROW(simulate(SimConfig{1, 1, 0.01, 40, 1, false}), InvalidArgument);
  EXPECT_THROW(simulate(SimConfig{1, 50, -1.0, 40, 1, false}), InvalidArgument);
  EXPECT_THROW(simulate(SimConfig{1, 50, 0.01, 1, 1, false}), InvalidArgument);
}
