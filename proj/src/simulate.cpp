#include "mflm/simulate.hpp"

#include <cmath>
#include <numbers>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "mflm/errors.hpp"

namespace mflm {

namespace {

constexpr double kLogFloor = 1e-12;

// Rows of the mixing matrix A; X4 = A Z.
constexpr double kMix[4][4] = {{-1, 0, 1, 2}, {3, -1, 0, 1}, {2, 3, -1, 0}, {1, 2, 3, -1}};

}  // namespace

SpacePtr simulation_space(Index grid_size) {
  if (grid_size < 2) throw InvalidArgument("simulation grid needs at least 2 points");
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_size, 0.0, 1.0);
  return make_space({BlockSpec::curve(grid), BlockSpec::curve(grid), BlockSpec::curve(grid), BlockSpec::vector(4),
                     BlockSpec::scalar(), BlockSpec::scalar(), BlockSpec::scalar()});
}

Coefficient true_coefficient(const SpacePtr& space, int example) {
  if (example != 1 && example != 2) throw InvalidArgument("example must be 1 or 2");
  Coefficient beta(space);
  const Eigen::VectorXd& t = (*space)[0].grid();
  beta.set_block(0, (10.0 * (2.0 * std::numbers::pi * t.array()).cos()).matrix());
  if (example == 2) {
    beta.set_block(3, Eigen::Vector4d(1.0, -1.0, 0.0, 3.0));
    beta.set_block(6, Eigen::VectorXd::Constant(1, 1.0));
  }
  return beta;
}

Simulation simulate(const SimConfig& config) {
  if (config.n < 2) throw InvalidArgument("simulation needs n >= 2");
  if (!(config.sigma >= 0.0)) throw InvalidArgument("simulation needs sigma >= 0");
  const SpacePtr space = simulation_space(config.grid_size);
  const Index n = config.n;
  const Index G = config.grid_size;
  const Eigen::VectorXd& t = (*space)[0].grid();
  const Eigen::VectorXd& w = (*space)[0].weights();

  boost::random::mt19937_64 rng(config.seed);
  boost::random::normal_distribution<double> gauss(0.0, 1.0);
  boost::random::uniform_real_distribution<double> unit(-0.5, 0.5);
  auto uniform = [&](double half_width) { return 2.0 * half_width * unit(rng); };

  Eigen::MatrixXd X1(n, G), X2(n, G), X3(n, G), X4(n, 4), X5(n, 1), X6(n, 1), X7(n, 1);
  for (Index i = 0; i < n; ++i) {
    X1(i, 0) = 0.0;
    for (Index k = 1; k < G; ++k) X1(i, k) = X1(i, k - 1) + std::sqrt(t[k] - t[k - 1]) * gauss(rng);

    const double a = uniform(50.0);
    const double b = uniform(30.0);
    const double c = uniform(5.0);
    const double d = uniform(1.0);
    for (Index k = 0; k < G; ++k) X2(i, k) = a + b * t[k] + c * std::exp(t[k]) + std::sin(d * t[k]);

    double z[4];
    for (double& zk : z) zk = unit(rng);
    for (int r = 0; r < 4; ++r) {
      X4(i, r) = kMix[r][0] * z[0] + kMix[r][1] * z[1] + kMix[r][2] * z[2] + kMix[r][3] * z[3];
    }

    X5(i, 0) = gauss(rng);
  }
  X3 = X2.array().square();

  for (Index i = 0; i < n; ++i) {
    X6(i, 0) = weighted_norm(w, X2.row(i).transpose());
    const Eigen::VectorXd logs = X1.row(i).transpose().array().abs().max(kLogFloor).log();
    X7(i, 0) = weighted_norm(w, logs);
  }
  X6.array() -= X6.mean();
  X7.array() -= X7.mean();

  Coefficient beta = config.null_model ? Coefficient(space) : true_coefficient(space, config.example);
  std::vector<Eigen::MatrixXd> blocks = {X1, X2, X3, X4, X5, X6, X7};
  Dataset noiseless(space, blocks, Eigen::VectorXd::Zero(n));
  Eigen::VectorXd y = noiseless.predict(beta);
  if (config.sigma > 0.0) {
    for (Index i = 0; i < n; ++i) y[i] += config.sigma * gauss(rng);
  }

  auto support = beta.support();
  return Simulation{Dataset(space, std::move(blocks), std::move(y)), std::move(beta), std::move(support)};
}

}  // namespace mflm
