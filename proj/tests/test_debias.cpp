#include <gtest/gtest.h>

#include <random>

#include "mflm/debias.hpp"
#include "mflm/errors.hpp"
#include "mflm/selection.hpp"
#include "oracles.hpp"

using namespace mflm;

namespace {

Dataset instance(std::uint64_t seed, Index n = 30) {
  std::mt19937_64 rng(seed);
  const auto space = oracle::random_space(rng, 4, true);
  return prepare(oracle::random_dataset(rng, space, n));
}

std::vector<std::size_t> all_blocks(const Dataset& d) {
  std::vector<std::size_t> s(d.p());
  for (std::size_t j = 0; j < d.p(); ++j) s[j] = j;
  return s;
}

}  // namespace

TEST(TikhonovDirect, MatchesAugmentedLeastSquares) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Dataset data = instance(seed);
    const auto J = all_blocks(data);
    for (double rho : {1e-3, 0.1, 2.0}) {
      const Coefficient a = tikhonov_direct(data, J, rho);
      const Coefficient b = oracle::ridge(data, J, rho);
      EXPECT_LE(norm(a - b), 1e-9 * (1.0 + norm(b))) << "seed " << seed << " rho " << rho;
    }
  }
}

TEST(TikhonovDirect, IgnoresBlocksOutsideSupport) {
  const Dataset data = instance(7);
  const std::vector<std::size_t> J{0};
  const Coefficient a = tikhonov_direct(data, J, 0.5);
  EXPECT_LE(a.support().size(), 1u);
  EXPECT_LE(norm(a - oracle::ridge(data, J, 0.5)), 1e-10 * (1.0 + norm(a)));
}

TEST(TikhonovFit, ConvergesToDirectSolution) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Dataset data = instance(seed);
    const auto J = all_blocks(data);
    // Harmonic steps reach 1e-4 within the step budget once rho is on the scale of Gamma_J.
    const auto wz = oracle::whiten(data);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wz.Z.transpose() * wz.Z / static_cast<double>(data.n()),
                                                      Eigen::EigenvaluesOnly);
    const double rho = es.eigenvalues().maxCoeff();
    // The error decays like 1/k here, so the gradient tolerance has to match the step budget.
    TikhonovOptions o;
    o.grad_tol_rel = 1e-4;
    const auto gd = tikhonov_fit(data, J, rho, Coefficient(data.space()), o);
    EXPECT_TRUE(gd.converged) << gd.gradient_norm;
    EXPECT_LE(norm(gd.beta_tilde - tikhonov_direct(data, J, rho)), 1e-4);
  }
}

TEST(TikhonovFit, ObjectiveNonIncreasingWithSpectralStep) {
  const Dataset data = instance(20);
  const auto J = all_blocks(data);
  double prev = ridge_objective(data, J, 0.2, Coefficient(data.space()));
  TikhonovOptions o;
  o.max_steps = 2000;
  o.on_step = [&](int, double f) {
    EXPECT_LE(f, prev + 1e-12 * (1.0 + prev));
    prev = f;
  };
  tikhonov_fit(data, J, 0.2, Coefficient(data.space()), o);
}

TEST(TikhonovFit, TraceBoundStepIsSmaller) {
  const Dataset data = instance(21);
  const auto J = all_blocks(data);
  TikhonovOptions spectral;
  TikhonovOptions trace;
  trace.step_rule = StepRule::TraceBound;
  trace.max_steps = 10;
  spectral.max_steps = 10;
  const auto a = tikhonov_fit(data, J, 0.3, Coefficient(data.space()), spectral);
  const auto b = tikhonov_fit(data, J, 0.3, Coefficient(data.space()), trace);
  EXPECT_LT(b.alpha1, a.alpha1);
}

TEST(TikhonovFit, EmptySupportAndBadRho) {
  const Dataset data = instance(22);
  const auto r = tikhonov_fit(data, {}, 1.0, Coefficient(data.space()));
  EXPECT_TRUE(r.beta_tilde.support().empty());
  EXPECT_TRUE(r.converged);
  EXPECT_THROW(tikhonov_fit(data, {0}, 0.0, Coefficient(data.space())), InvalidArgument);
  EXPECT_THROW(tikhonov_direct(data, {data.p()}, 1.0), InvalidArgument);
}

TEST(RhoGrid, DefaultEndpoints) {
  const auto g = default_rho_grid();
  ASSERT_EQ(g.size(), 20u);
  EXPECT_EQ(g.front(), 1e-6);
  EXPECT_EQ(g.back(), 10.0);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_GT(g[k], g[k - 1]);
}

TEST(RhoCv, ScoresMatchIndependentFolds) {
  const Dataset data = instance(23, 40);
  const auto J = all_blocks(data);
  const std::vector<double> grid{0.01, 0.1, 1.0};
  const auto res = select_rho_cv(data, J, grid, RhoCvOptions{4, RhoCvSolver::Direct, {}});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double total = 0.0;
    for (const auto& [b, e] : contiguous_folds(data.n(), 4)) {
      std::vector<Index> train, test;
      for (Index i = 0; i < data.n(); ++i) (i >= b && i < e ? test : train).push_back(i);
      const Dataset tr = data.subset(train);
      const Dataset te = data.subset(test);
      const auto beta = oracle::ridge(tr, J, grid[k]);
      total += (te.y() - te.predict(beta)).squaredNorm();
    }
    EXPECT_NEAR(res.scores[k], total / static_cast<double>(data.n()), 1e-9 * (1.0 + total));
  }
  const auto best = std::min_element(res.scores.begin(), res.scores.end()) - res.scores.begin();
  EXPECT_EQ(res.rho, grid[static_cast<std::size_t>(best)]);
}

TEST(RhoCv, EmptySupportPicksLargest) {
  const Dataset data = instance(24);
  EXPECT_EQ(select_rho_cv(data, {}, {0.1, 5.0, 1.0}).rho, 5.0);
}
