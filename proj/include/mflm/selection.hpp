#pragma once

// Choice of the penalty level r (V-fold CV, sigma-hat plug-in, BIC) and of
// the projection dimension m (penalized least squares over m).

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mflm/covariance.hpp"
#include "mflm/hilbert.hpp"
#include "mflm/solver.hpp"

namespace mflm {

enum class RuleMethod { CV, SigmaHat, BIC };

const char* to_string(RuleMethod method) noexcept;
/// Parses "cv", "sigma" or "bic".
RuleMethod parse_rule(const std::string& name);

struct ScoreRow {
  double r = 0.0;
  double score = 0.0;
};

struct SelectionReport {
  RuleMethod method = RuleMethod::SigmaHat;
  /// Grid value for CV and BIC; the plug-in formula value for SigmaHat.
  double chosen_r = 0.0;
  /// Grid value whose fit is used downstream (equals chosen_r for CV and BIC).
  double refit_r = 0.0;
  std::vector<ScoreRow> score_table;
  std::optional<double> sigma_hat2;
  std::optional<std::size_t> chosen_m;
  double kappa_pen = 2.0;
};

/// Mean squared residual of the fit at the smallest converged grid value.
/// Throws SelectionError when no fit converged.
double estimate_sigma2(const PathResult& path, const Dataset& data);

/// r = 4 sqrt(2) sigma sqrt(q ln(p) / n) with q = 1 - ln(alpha) / ln(p).
double sigma_rule_r(double sigma2, std::size_t p, Index n, double alpha = 0.05);

/// Plug-in rule; refit_r is the smallest grid value >= the formula value,
/// or r_max when the formula exceeds it.
SelectionReport select_r_sigma(const Dataset& data, const PathResult& path, double alpha = 0.05);

/// BIC over converged grid points, ties toward larger r.
SelectionReport select_r_bic(const Dataset& data, const PathResult& path);

/// Contiguous folds I_v = floor((v-1)n/V)+1 .. floor(vn/V) (one-based) as
/// zero-based index ranges [begin, end).
std::vector<std::pair<Index, Index>> contiguous_folds(Index n, int V);

struct CvOptions {
  int V = 5;
  SolverOptions solver;
  double kkt_rel_tol = 1e-6;
};

/// V-fold CV over a decreasing grid; each fold fits the grid from the top
/// with warm starts on the training complement. Ties toward larger r.
SelectionReport select_r_cv(const Dataset& data, const std::vector<double>& grid, const CvOptions& opts = {});

/// Fit at r, taken from the path when r is a grid value, otherwise solved
/// warm-started from the nearest larger grid fit.
FitResult refit_at(const Dataset& data, const PathResult& path, double r, const SolverOptions& opts = {});

enum class DimensionCap {
  /// m ranges over 1..min(N_n_emp, M_n), N_n_emp counting merged empirical
  /// eigenvalues >= sqrt(log(n)^3 / n).
  EmpiricalNn,
  /// m ranges over 1..M_n.
  MnOnly,
};

struct DimensionOptions {
  SolverOptions solver;
  DimensionCap cap = DimensionCap::MnOnly;
  double tol_rank = kDefaultRankTol;
};

struct DimensionRow {
  std::size_t m = 0;
  double rss = 0.0;  // (1/n) sum of squared residuals
  double score = 0.0;
  bool converged = false;
};

struct DimensionReport {
  std::size_t chosen_m = 0;
  std::vector<DimensionRow> table;
  std::size_t n_n_emp = 0;
  std::size_t m_n = 0;
  std::size_t upper = 0;
  /// Projected fit at chosen_m.
  std::optional<FitResult> fit;
};

/// score(m) = rss(m) + kappa_pen * sigma2 * m * log(n) / n, minimized over the
/// capped range, smallest m on ties. Throws DegenerateDesign when M_n = 0.
DimensionReport select_dimension(const Dataset& data, const PcaBasis& basis, const PenaltyWeights& weights,
                                 double kappa_pen, double sigma2, const DimensionOptions& opts = {});

}  // namespace mflm
