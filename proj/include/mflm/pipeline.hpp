#pragma once

// End-to-end estimation runs: path, r selection, optional projection with a
// selected dimension, optional ridge refit, and seeded Monte-Carlo
// replications of the simulated designs.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflm/covariance.hpp"
#include "mflm/debias.hpp"
#include "mflm/selection.hpp"
#include "mflm/simulate.hpp"
#include "mflm/solver.hpp"

namespace mflm {

struct PipelineOptions {
  RuleMethod rule = RuleMethod::SigmaHat;
  double alpha = 0.05;
  int folds = 5;
  PathOptions path;

  bool project = false;
  /// Fixed projection dimension; selected by penalized least squares when unset.
  std::optional<std::size_t> project_m;
  double kappa = 2.0;
  DimensionCap cap = DimensionCap::MnOnly;

  bool debias = false;
  std::vector<double> rho_grid = default_rho_grid();
  RhoCvSolver rho_solver = RhoCvSolver::Direct;
  TikhonovOptions tikhonov;
};

struct PipelineResult {
  PathResult path;
  SelectionReport selection;
  /// Plain estimator at selection.refit_r.
  FitResult lasso;
  std::optional<DimensionReport> dimension;
  std::optional<FitResult> projected;
  std::optional<RhoCvResult> rho_cv;
  std::optional<DebiasResult> debiased;
  std::map<std::string, double> seconds;

  /// The projected fit when present, else the plain one.
  const FitResult& estimate() const { return projected ? *projected : lasso; }
};

/// `data` must be prepared (centered).
PipelineResult run_pipeline(const Dataset& data, const PipelineOptions& opts);

struct MonteCarloOptions {
  SimConfig sim;  // sim.seed is the base seed; replication k uses seed + k
  int reps = 20;
  PipelineOptions pipeline;
};

struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<std::size_t> support_plain;
  std::vector<std::size_t> support_projected;
  bool exact_plain = false;
  bool exact_projected = false;
  double sigma_hat2 = 0.0;
  double chosen_r = 0.0;
  double refit_r = 0.0;
  std::size_t chosen_m = 0;
  /// ||beta_hat_1 - beta*_1|| for the estimate and, with debias, the ridge refit.
  double error_block1 = 0.0;
  double error_block1_debiased = 0.0;
};

struct MonteCarloSummary {
  std::vector<ReplicationRecord> records;
  double recovery_plain = 0.0;      // percent of all reps
  double recovery_projected = 0.0;  // percent of all reps, when projecting
  double debias_improved = 0.0;     // percent of all reps, when debiasing
  int failures = 0;
};

/// Replications run concurrently; records are ordered by replication index.
MonteCarloSummary run_montecarlo(const MonteCarloOptions& opts);

}  // namespace mflm
