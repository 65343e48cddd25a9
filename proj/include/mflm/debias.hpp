#pragma once

// Ridge refit on the support of a Lasso estimate:
//
//   minimize (1/n) sum_i (Y_i - <beta, X_i>)^2 + rho ||beta||^2  over H_J
//
// solved by gradient descent with harmonic steps alpha_k = alpha_1 / k, plus
// a direct linear solve of (Gamma_J + rho I) beta = Delta and V-fold CV for rho.

#include <cstddef>
#include <functional>
#include <vector>

#include "mflm/hilbert.hpp"

namespace mflm {

enum class StepRule {
  /// alpha_1 = 1 / (rho + lambda_max(Gamma_J)): largest first step that
  /// cannot increase the objective.
  SpectralBound,
  /// alpha_1 = 1 / (2 (rho + sum_{j in J} N_j)): a cruder bound that needs
  /// no eigenvalue computation.
  TraceBound,
};

struct TikhonovOptions {
  /// Stop when ||gradient|| <= grad_tol_rel * (1 + ||Delta||).
  double grad_tol_rel = 1e-8;
  int max_steps = 100000;
  StepRule step_rule = StepRule::SpectralBound;
  /// Called after every step with the ridge objective; slow, for tests.
  std::function<void(int, double)> on_step;
};

struct DebiasResult {
  Coefficient beta_tilde;
  double rho = 0.0;
  int n_steps = 0;
  double gradient_norm = 0.0;
  double alpha1 = 0.0;
  bool converged = false;
};

/// Ridge objective restricted to `support` (blocks outside are ignored).
double ridge_objective(const Dataset& data, const std::vector<std::size_t>& support, double rho,
                       const Coefficient& beta);

/// Gradient descent from `init` (its blocks outside `support` are dropped).
DebiasResult tikhonov_fit(const Dataset& data, const std::vector<std::size_t>& support, double rho,
                          const Coefficient& init, const TikhonovOptions& opts = {});

/// (Gamma_J + rho I)^{-1} Delta by a dense symmetric solve.
Coefficient tikhonov_direct(const Dataset& data, const std::vector<std::size_t>& support, double rho);

/// 20 log-spaced values in [1e-6, 10], increasing.
std::vector<double> default_rho_grid();

enum class RhoCvSolver {
  /// Fold fits by the direct solve (the exact ridge minimizer).
  Direct,
  /// Fold fits by tikhonov_fit from zero.
  Gradient,
};

struct RhoCvOptions {
  int V = 5;
  RhoCvSolver solver = RhoCvSolver::Direct;
  TikhonovOptions tikhonov;
};

struct RhoCvResult {
  double rho = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;  // mean held-out squared error per grid value
};

/// Same contiguous folds as select_r_cv; ties toward larger rho. An empty
/// support returns the grid maximum.
RhoCvResult select_rho_cv(const Dataset& data, const std::vector<std::size_t>& support,
                          const std::vector<double>& rho_grid, const RhoCvOptions& opts = {});

}  // namespace mflm
