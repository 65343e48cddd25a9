#pragma once

// Group-Lasso estimation in H by groupwise-majorization descent (GPD):
//
//   minimize (1/n) sum_i (Y_i - <beta, X_i>)^2 + 2 sum_j lambda_j ||beta_j||_j
//
// over H (plain estimator) or over H^(m) spanned by the first m PCA basis
// elements (projected estimator), plus the pathwise scheme over a
// log-spaced grid of r and a KKT optimality certificate.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mflm/covariance.hpp"
#include "mflm/hilbert.hpp"

namespace mflm {

/// lambda_j = r * sqrt(N_j) with N_j = (1/n) sum_i ||X_i^j||_j^2.
struct PenaltyWeights {
  double r = 0.0;
  Eigen::VectorXd lambda;
  Eigen::VectorXd n_weights;
};

PenaltyWeights penalty_weights(const Dataset& data, double r);

/// Smallest r whose fit is the zero coefficient:
/// max_j ||(1/n) sum_i Y_i X_i^j||_j / sqrt(N_j) over blocks with N_j > 0.
/// The value is rounded up by a relative 1e-12 so that the zero solution
/// survives floating-point evaluation of the same quantities in the solver.
double r_max(const Dataset& data);

/// Reported after each block update when SolverOptions::on_update is set.
struct BlockUpdateEvent {
  int cycle = 0;
  std::size_t block = 0;
  double objective = 0.0;
};

/// How the solver tracks partial gradients. Gram keeps (1/n) X^T X in
/// memory and updates gradients in O(D d_j) per changed block; Residual keeps
/// the n residuals and pays O(n d_j) per block visit. Auto picks Gram when
/// the total coordinate count D is at most n. Both give the same iterates up
/// to rounding.
enum class GramMode { Auto, Always, Never };

struct SolverOptions {
  /// Stop once max_j N_j ||delta beta_j||^2 over a full cycle is <= tol and
  /// the KKT gap is <= kkt_tol.
  double tol = 1e-8;
  int max_iter = 10000;
  /// Absolute KKT tolerance; defaults to 1e-6 * r_max(data).
  std::optional<double> kkt_tol;
  /// Residuals are recomputed from scratch every this many cycles.
  int refresh_every = 100;
  GramMode gram = GramMode::Auto;
  /// Called after every block update with the exact objective; slow, for
  /// diagnostics and tests.
  std::function<void(const BlockUpdateEvent&)> on_update;
};

struct FitResult {
  Coefficient beta;
  std::vector<std::size_t> support;
  double objective = 0.0;
  int n_iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;
};

/// Penalized criterion at beta.
double objective(const Dataset& data, const PenaltyWeights& weights, const Coefficient& beta);

/// Max KKT violation of beta for the plain criterion.
double kkt_check(const Dataset& data, const PenaltyWeights& weights, const Coefficient& beta);

/// Plain estimator. Throws NumericError on non-finite iterates; returns
/// converged = false when max_iter cycles are exhausted.
FitResult gpd_fit(const Dataset& data, const PenaltyWeights& weights, const Coefficient& init,
                  const SolverOptions& opts = {});

namespace detail {
struct GramForm;
}

/// Plain criterion on fixed data with cached design quantities (N_j, r_max
/// and, when used, the covariance form), reusable across many r.
class PlainProblem {
 public:
  explicit PlainProblem(const Dataset& data, GramMode gram = GramMode::Auto);

  const Dataset& data() const noexcept { return data_; }
  double r_max() const noexcept { return r_max_; }
  PenaltyWeights weights(double r) const;

  FitResult fit(const PenaltyWeights& weights, const Coefficient& init, const SolverOptions& opts = {}) const;

 private:
  Dataset data_;
  Eigen::VectorXd n_weights_;
  double r_max_ = 0.0;
  std::shared_ptr<const detail::GramForm> cov_;
};

/// The data expressed in the PCA coordinates, reusable across dimensions m.
class ProjectedProblem {
 public:
  ProjectedProblem(const Dataset& data, const PcaBasis& basis);

  std::size_t max_dimension() const noexcept { return basis_.size(); }
  const PcaBasis& basis() const noexcept { return basis_; }

  /// Projected estimator over H^(m). `init` (optional) is projected onto H^(m).
  FitResult fit(std::size_t m, const PenaltyWeights& weights, const SolverOptions& opts = {},
                const Coefficient* init = nullptr) const;

 private:
  PcaBasis basis_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd scores_;  // n x size(), column k = <phi^(k), X_i>
  double r_max_ = 0.0;
};

FitResult gpd_fit_projected(const Dataset& data, const PcaBasis& basis, std::size_t m,
                            const PenaltyWeights& weights, const SolverOptions& opts = {});

struct PathOptions {
  double delta = 1e-3;
  int n_r = 100;
  SolverOptions solver;
  /// KKT tolerance relative to r_max, used unless solver.kkt_tol is set.
  double kkt_rel_tol = 1e-6;
  /// When set, fits the projected estimator in H^(m) with this basis.
  const PcaBasis* basis = nullptr;
  std::size_t m = 0;
};

struct PathResult {
  /// r_1 = r_max > r_2 > ... > r_{n_r} = delta * r_max.
  std::vector<double> grid;
  /// One fit per grid entry, aligned with `grid`.
  std::vector<FitResult> fits;
  /// n_r x p table of ||beta_j||_j.
  Eigen::MatrixXd block_norms;
  /// Smallest grid r whose fit converged.
  std::optional<double> r_min_feasible;
  /// Grid index of the first non-converged fit; later fits are flagged.
  std::optional<std::size_t> first_failure;

  std::optional<std::size_t> index_of(double r) const;
};

/// Pathwise fit from r_max downwards with warm starts.
PathResult fit_path(const Dataset& data, const PathOptions& opts = {});

/// Log-spaced decreasing grid from r_max to delta * r_max with exact endpoints.
std::vector<double> log_grid(double r_max, double delta, int n_r);

}  // namespace mflm
