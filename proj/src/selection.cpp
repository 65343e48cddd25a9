#include "mflm/selection.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "mflm/errors.hpp"

namespace mflm {

namespace {

constexpr double kBicFloor = 1e-12;

}  // namespace

const char* to_string(RuleMethod method) noexcept {
  switch (method) {
    case RuleMethod::CV:
      return "cv";
    case RuleMethod::SigmaHat:
      return "sigma";
    case RuleMethod::BIC:
      return "bic";
  }
  return "?";
}

RuleMethod parse_rule(const std::string& name) {
  if (name == "cv") return RuleMethod::CV;
  if (name == "sigma") return RuleMethod::SigmaHat;
  if (name == "bic") return RuleMethod::BIC;
  throw InvalidArgument("unknown selection rule '" + name + "' (expected cv, sigma or bic)");
}

double estimate_sigma2(const PathResult& path, const Dataset& data) {
  if (!path.r_min_feasible) throw SelectionError("no fit on the path converged; sigma^2 cannot be estimated");
  const auto k = path.index_of(*path.r_min_feasible);
  return data.mean_squared_residual(path.fits.at(*k).beta);
}

double sigma_rule_r(double sigma2, std::size_t p, Index n, double alpha) {
  if (p < 2) throw SelectionError("the sigma-hat rule needs p >= 2 (ln p = 0)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (!(sigma2 >= 0.0)) throw InvalidArgument("sigma^2 must be >= 0");
  const double lnp = std::log(static_cast<double>(p));
  const double q = 1.0 - std::log(alpha) / lnp;
  return 4.0 * std::sqrt(2.0) * std::sqrt(sigma2) * std::sqrt(q * lnp / static_cast<double>(n));
}

SelectionReport select_r_sigma(const Dataset& data, const PathResult& path, double alpha) {
  if (path.grid.empty()) throw SelectionError("empty path");
  SelectionReport rep;
  rep.method = RuleMethod::SigmaHat;
  rep.sigma_hat2 = estimate_sigma2(path, data);
  rep.chosen_r = sigma_rule_r(*rep.sigma_hat2, data.p(), data.n(), alpha);
  // Grid is decreasing: the last entry >= r-hat is the smallest one.
  rep.refit_r = path.grid.front();
  for (double r : path.grid) {
    if (r >= rep.chosen_r) rep.refit_r = r;
  }
  return rep;
}

SelectionReport select_r_bic(const Dataset& data, const PathResult& path) {
  SelectionReport rep;
  rep.method = RuleMethod::BIC;
  const double pen = std::log(static_cast<double>(data.n())) / static_cast<double>(data.n());
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    const FitResult& fit = path.fits[k];
    if (!fit.converged) continue;
    const double s2 = std::max(data.mean_squared_residual(fit.beta), kBicFloor);
    const double score = std::log(s2) + static_cast<double>(fit.support.size()) * pen;
    rep.score_table.push_back({path.grid[k], score});
    if (score < best) {
      best = score;
      rep.chosen_r = path.grid[k];
      any = true;
    }
  }
  if (!any) throw SelectionError("no converged fit on the path for BIC");
  rep.refit_r = rep.chosen_r;
  return rep;
}

std::vector<std::pair<Index, Index>> contiguous_folds(Index n, int V) {
  if (V < 2) throw InvalidArgument("cross-validation needs V >= 2");
  if (V > n) throw InvalidArgument("cross-validation needs V <= n");
  std::vector<std::pair<Index, Index>> folds;
  for (int v = 1; v <= V; ++v) {
    const Index begin = (static_cast<Index>(v) - 1) * n / V;
    const Index end = static_cast<Index>(v) * n / V;
    if (end <= begin) throw InvalidArgument("cross-validation fold " + std::to_string(v) + " is empty");
    folds.emplace_back(begin, end);
  }
  return folds;
}

SelectionReport select_r_cv(const Dataset& data, const std::vector<double>& grid, const CvOptions& opts) {
  if (grid.empty()) throw InvalidArgument("cross-validation needs a nonempty grid");
  const auto folds = contiguous_folds(data.n(), opts.V);
  const Index V = static_cast<Index>(folds.size());
  const Index K = static_cast<Index>(grid.size());
  // sse(v, k): held-out sum of squared errors of fold v at grid entry k.
  Eigen::MatrixXd sse = Eigen::MatrixXd::Zero(V, K);
  std::vector<std::exception_ptr> errors(folds.size());

#pragma omp parallel for schedule(dynamic)
  for (Index v = 0; v < V; ++v) {
    try {
      const auto [begin, end] = folds[static_cast<std::size_t>(v)];
      std::vector<Index> train;
      std::vector<Index> test;
      for (Index i = 0; i < data.n(); ++i) (i >= begin && i < end ? test : train).push_back(i);
      const Dataset tr = data.subset(train);
      const Dataset te = data.subset(test);
      const PlainProblem problem(tr, opts.solver.gram);
      SolverOptions solver = opts.solver;
      if (!solver.kkt_tol) solver.kkt_tol = opts.kkt_rel_tol * problem.r_max();
      Coefficient warm(data.space());
      for (Index k = 0; k < K; ++k) {
        const FitResult fit = problem.fit(problem.weights(grid[static_cast<std::size_t>(k)]), warm, solver);
        sse(v, k) = (te.y() - te.predict(fit.beta)).squaredNorm();
        warm = fit.beta;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(v)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SelectionReport rep;
  rep.method = RuleMethod::CV;
  double best = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < K; ++k) {
    const double score = sse.col(k).sum() / static_cast<double>(data.n());
    const double r = grid[static_cast<std::size_t>(k)];
    rep.score_table.push_back({r, score});
    // Strict comparison keeps the larger r on ties when the grid decreases.
    const bool better = score < best || (score == best && r > rep.chosen_r);
    if (better) {
      best = score;
      rep.chosen_r = r;
    }
  }
  rep.refit_r = rep.chosen_r;
  return rep;
}

FitResult refit_at(const Dataset& data, const PathResult& path, double r, const SolverOptions& opts) {
  if (const auto k = path.index_of(r)) return path.fits[*k];
  const PlainProblem problem(data, opts.gram);
  Coefficient warm(data.space());
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    if (path.grid[k] >= r) warm = path.fits[k].beta;
  }
  return problem.fit(problem.weights(r), warm, opts);
}

DimensionReport select_dimension(const Dataset& data, const PcaBasis& basis, const PenaltyWeights& weights,
                                 double kappa_pen, double sigma2, const DimensionOptions& opts) {
  if (!(kappa_pen > 0.0)) throw InvalidArgument("kappa must be > 0");
  if (!(sigma2 > 0.0)) throw InvalidArgument("sigma^2 must be > 0 for dimension selection");
  DimensionReport rep;
  rep.m_n = m_max(data, basis, opts.tol_rank);
  if (rep.m_n == 0) throw DegenerateDesign("M_n = 0: no basis dimension gives a nonsingular restriction");
  rep.n_n_emp = n_n_empirical(basis, data.n());
  rep.upper = opts.cap == DimensionCap::EmpiricalNn ? std::min(rep.n_n_emp, rep.m_n) : rep.m_n;
  if (rep.upper == 0) throw SelectionError("N_n (empirical) = 0: no admissible dimension");

  const ProjectedProblem problem(data, basis);
  const double n = static_cast<double>(data.n());
  const double unit = kappa_pen * sigma2 * std::log(n) / n;
  double best = std::numeric_limits<double>::infinity();
  Coefficient warm(data.space());
  for (std::size_t m = 1; m <= rep.upper; ++m) {
    FitResult fit = problem.fit(m, weights, opts.solver, &warm);
    const double rss = data.mean_squared_residual(fit.beta);
    const double score = rss + unit * static_cast<double>(m);
    rep.table.push_back({m, rss, score, fit.converged});
    warm = fit.beta;
    if (score < best) {
      best = score;
      rep.chosen_m = m;
      rep.fit = std::move(fit);
    }
  }
  return rep;
}

}  // namespace mflm
