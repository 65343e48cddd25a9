#include "mflm/pipeline.hpp"

#include <chrono>
#include <exception>

#include "mflm/errors.hpp"

namespace mflm {

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

PipelineResult run_pipeline(const Dataset& data, const PipelineOptions& opts) {
  Stopwatch clock;
  std::map<std::string, double> seconds;
  PathResult path = fit_path(data, opts.path);
  seconds["path"] = clock.lap();

  SelectionReport sel;
  switch (opts.rule) {
    case RuleMethod::SigmaHat:
      sel = select_r_sigma(data, path, opts.alpha);
      break;
    case RuleMethod::BIC:
      sel = select_r_bic(data, path);
      break;
    case RuleMethod::CV: {
      CvOptions cv;
      cv.V = opts.folds;
      cv.solver = opts.path.solver;
      cv.kkt_rel_tol = opts.path.kkt_rel_tol;
      sel = select_r_cv(data, path.grid, cv);
      break;
    }
  }
  if (!sel.sigma_hat2 && path.r_min_feasible) sel.sigma_hat2 = estimate_sigma2(path, data);
  sel.kappa_pen = opts.kappa;
  seconds["select_r"] = clock.lap();

  FitResult lasso = refit_at(data, path, sel.refit_r, opts.path.solver);
  PipelineResult out{std::move(path), sel, std::move(lasso), {}, {}, {}, {}, {}};

  if (opts.project) {
    const PcaBasis basis = pca_basis(data);
    const PenaltyWeights w = penalty_weights(data, sel.refit_r);
    if (opts.project_m) {
      const std::size_t m = *opts.project_m;
      if (m < 1 || m > basis.size()) throw InvalidArgument("projection dimension out of range");
      out.projected = ProjectedProblem(data, basis).fit(m, w, opts.path.solver);
      out.selection.chosen_m = m;
    } else {
      if (!sel.sigma_hat2) throw SelectionError("dimension selection needs sigma^2, but no path fit converged");
      DimensionOptions dopt;
      dopt.solver = opts.path.solver;
      dopt.cap = opts.cap;
      out.dimension = select_dimension(data, basis, w, opts.kappa, *sel.sigma_hat2, dopt);
      out.projected = out.dimension->fit;
      out.selection.chosen_m = out.dimension->chosen_m;
    }
    out.seconds["project"] = clock.lap();
  }

  if (opts.debias) {
    const FitResult& est = out.estimate();
    RhoCvOptions ropt;
    ropt.V = opts.folds;
    ropt.solver = opts.rho_solver;
    ropt.tikhonov = opts.tikhonov;
    out.rho_cv = select_rho_cv(data, est.support, opts.rho_grid, ropt);
    out.debiased = tikhonov_fit(data, est.support, out.rho_cv->rho, est.beta, opts.tikhonov);
    out.seconds["debias"] = clock.lap();
  }
  for (const auto& [k, v] : seconds) out.seconds[k] = v;
  return out;
}

MonteCarloSummary run_montecarlo(const MonteCarloOptions& opts) {
  if (opts.reps < 1) throw InvalidArgument("Monte-Carlo needs at least one replication");
  MonteCarloSummary out;
  out.records.resize(static_cast<std::size_t>(opts.reps));

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < opts.reps; ++k) {
    ReplicationRecord& rec = out.records[static_cast<std::size_t>(k)];
    rec.rep = k;
    rec.seed = opts.sim.seed + static_cast<std::uint64_t>(k);
    try {
      SimConfig cfg = opts.sim;
      cfg.seed = rec.seed;
      const Simulation sim = simulate(cfg);
      const Dataset data = prepare(sim.data);
      const PipelineResult res = run_pipeline(data, opts.pipeline);
      rec.support_plain = res.lasso.support;
      rec.exact_plain = rec.support_plain == sim.support;
      if (res.projected) {
        rec.support_projected = res.projected->support;
        rec.exact_projected = rec.support_projected == sim.support;
        rec.chosen_m = res.selection.chosen_m.value_or(0);
      }
      rec.sigma_hat2 = res.selection.sigma_hat2.value_or(0.0);
      rec.chosen_r = res.selection.chosen_r;
      rec.refit_r = res.selection.refit_r;
      const Eigen::VectorXd& w = (*sim.beta_star.space())[0].weights();
      rec.error_block1 = weighted_norm(w, res.estimate().beta.block(0) - sim.beta_star.block(0));
      if (res.debiased) {
        rec.error_block1_debiased = weighted_norm(w, res.debiased->beta_tilde.block(0) - sim.beta_star.block(0));
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  }

  int plain = 0, projected = 0, improved = 0;
  for (const auto& rec : out.records) {
    if (!rec.ok) {
      ++out.failures;
      continue;
    }
    plain += rec.exact_plain;
    projected += rec.exact_projected;
    improved += opts.pipeline.debias && rec.error_block1_debiased < rec.error_block1;
  }
  const double R = static_cast<double>(opts.reps);
  out.recovery_plain = 100.0 * plain / R;
  out.recovery_projected = 100.0 * projected / R;
  out.debias_improved = 100.0 * improved / R;
  return out;
}

}  // namespace mflm
