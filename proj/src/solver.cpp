#include "mflm/solver.hpp"

#include <cmath>
#include <limits>

#include "gpd_engine.hpp"
#include "mflm/errors.hpp"
#include "mflm/kernels.hpp"

namespace mflm {

namespace {

detail::GroupDesign plain_design(const Dataset& data) {
  detail::GroupDesign d;
  d.y = &data.y();
  for (std::size_t j = 0; j < data.p(); ++j) {
    d.X.push_back(&data.block(j));
    d.w.push_back((*data.space())[j].weights());
  }
  d.curvature = detail::block_means_sq_norm(d);
  return d;
}

void require_weights(const PenaltyWeights& weights, std::size_t p) {
  if (static_cast<std::size_t>(weights.lambda.size()) != p) {
    throw SpecMismatch("penalty weights have " + std::to_string(weights.lambda.size()) + " entries, expected " +
                       std::to_string(p));
  }
}

FitResult to_fit_result(Coefficient beta, const detail::EngineResult& r) {
  auto support = beta.support();
  return FitResult{std::move(beta), std::move(support), r.objective, r.iterations, r.converged, r.kkt_gap};
}

}  // namespace

PenaltyWeights penalty_weights(const Dataset& data, double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("penalty_weights: r must be finite and >= 0");
  PenaltyWeights out;
  out.r = r;
  out.n_weights = detail::block_means_sq_norm(plain_design(data));
  out.lambda = r * out.n_weights.cwiseSqrt();
  return out;
}

double r_max(const Dataset& data) {
  const auto design = plain_design(data);
  const double inv_n = 1.0 / static_cast<double>(data.n());
  double best = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < data.p(); ++j) {
    const double N = design.curvature[static_cast<Index>(j)];
    if (N <= 0.0) continue;
    any = true;
    Eigen::VectorXd g(data.block(j).cols());
    kernels::transpose_apply(data.block(j), data.y(), g);
    g *= inv_n;
    best = std::max(best, weighted_norm(design.w[j], g) / std::sqrt(N));
  }
  if (!any) throw DegenerateDesign("every covariate block is identically zero");
  return best * (1.0 + 1e-12);
}

double objective(const Dataset& data, const PenaltyWeights& weights, const Coefficient& beta) {
  require_conforming(beta, data);
  require_weights(weights, data.p());
  const auto design = plain_design(data);
  return detail::design_objective(design, weights.lambda, beta.blocks(), detail::residual(design, beta.blocks()));
}

double kkt_check(const Dataset& data, const PenaltyWeights& weights, const Coefficient& beta) {
  require_conforming(beta, data);
  require_weights(weights, data.p());
  const auto design = plain_design(data);
  return detail::design_kkt(design, weights.lambda, beta.blocks(), detail::residual(design, beta.blocks()));
}

PlainProblem::PlainProblem(const Dataset& data, GramMode gram) : data_(data) {
  const auto design = plain_design(data_);
  n_weights_ = design.curvature;
  r_max_ = mflm::r_max(data_);
  if (detail::prefer_gram(design, gram)) cov_ = detail::build_gram(design);
}

PenaltyWeights PlainProblem::weights(double r) const {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("penalty_weights: r must be finite and >= 0");
  return PenaltyWeights{r, r * n_weights_.cwiseSqrt(), n_weights_};
}

FitResult PlainProblem::fit(const PenaltyWeights& weights, const Coefficient& init, const SolverOptions& opts) const {
  require_conforming(init, data_);
  require_weights(weights, data_.p());
  auto design = plain_design(data_);
  design.cov = cov_;
  const double kkt_tol = opts.kkt_tol ? *opts.kkt_tol : 1e-6 * r_max_;
  auto r = detail::run_gpd(design, weights.lambda, init.blocks(), opts, kkt_tol);
  Coefficient beta(data_.space(), r.beta);
  return to_fit_result(std::move(beta), r);
}

FitResult gpd_fit(const Dataset& data, const PenaltyWeights& weights, const Coefficient& init,
                  const SolverOptions& opts) {
  require_conforming(init, data);
  return PlainProblem(data, opts.gram).fit(weights, init, opts);
}

ProjectedProblem::ProjectedProblem(const Dataset& data, const PcaBasis& basis)
    : basis_(basis), y_(data.y()), scores_(basis_scores(data, basis, basis.size())), r_max_(r_max(data)) {}

FitResult ProjectedProblem::fit(std::size_t m, const PenaltyWeights& weights, const SolverOptions& opts,
                                const Coefficient* init) const {
  const std::size_t p = basis_.space()->size();
  if (m > basis_.size()) throw InvalidArgument("projected fit: m exceeds the basis size");
  require_weights(weights, p);

  // Column positions of each block's coordinates among the first m elements.
  std::vector<std::vector<Index>> columns(p);
  for (std::size_t k = 0; k < m; ++k) columns[basis_.index(k).block].push_back(static_cast<Index>(k));

  std::vector<Eigen::MatrixXd> blocks(p);
  detail::GroupDesign design;
  design.y = &y_;
  for (std::size_t j = 0; j < p; ++j) {
    blocks[j].resize(scores_.rows(), static_cast<Index>(columns[j].size()));
    for (std::size_t c = 0; c < columns[j].size(); ++c) blocks[j].col(static_cast<Index>(c)) = scores_.col(columns[j][c]);
    design.w.push_back(Eigen::VectorXd::Ones(blocks[j].cols()));
  }
  for (const auto& B : blocks) design.X.push_back(&B);
  design.curvature = detail::block_means_sq_norm(design);
  if (detail::prefer_gram(design, opts.gram)) design.cov = detail::build_gram(design);

  std::vector<Eigen::VectorXd> coords(p);
  for (std::size_t j = 0; j < p; ++j) {
    coords[j] = Eigen::VectorXd::Zero(blocks[j].cols());
    if (init == nullptr) continue;
    const Eigen::VectorXd& w = (*basis_.space())[j].weights();
    for (std::size_t c = 0; c < columns[j].size(); ++c) {
      const Index comp = basis_.index(static_cast<std::size_t>(columns[j][c])).component;
      coords[j][static_cast<Index>(c)] = weighted_dot(w, init->block(j), basis_.block(j).vectors.col(comp));
    }
  }

  const double kkt_tol = opts.kkt_tol ? *opts.kkt_tol : 1e-6 * r_max_;
  auto r = detail::run_gpd(design, weights.lambda, std::move(coords), opts, kkt_tol);

  Coefficient beta(basis_.space());
  for (std::size_t j = 0; j < p; ++j) {
    Eigen::VectorXd values = Eigen::VectorXd::Zero((*basis_.space())[j].size());
    for (std::size_t c = 0; c < columns[j].size(); ++c) {
      const double a = r.beta[j][static_cast<Index>(c)];
      if (a == 0.0) continue;
      const Index comp = basis_.index(static_cast<std::size_t>(columns[j][c])).component;
      values += a * basis_.block(j).vectors.col(comp);
    }
    beta.set_block(j, std::move(values));
  }
  // Zero coordinates map to an exactly zero block, so the support of the
  // coefficient equals the support in coordinates.
  return to_fit_result(std::move(beta), r);
}

FitResult gpd_fit_projected(const Dataset& data, const PcaBasis& basis, std::size_t m,
                            const PenaltyWeights& weights, const SolverOptions& opts) {
  if (!same_space(data.space(), basis.space())) throw SpecMismatch("projected fit: basis built for another space");
  return ProjectedProblem(data, basis).fit(m, weights, opts);
}

std::vector<double> log_grid(double r_max, double delta, int n_r) {
  if (n_r < 1) throw InvalidArgument("grid needs n_r >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("grid needs delta in (0, 1]");
  std::vector<double> grid(static_cast<std::size_t>(n_r), r_max);
  if (n_r == 1 || r_max <= 0.0) return grid;
  const double r_min = delta * r_max;
  const double lo = std::log(r_min);
  const double hi = std::log(r_max);
  for (int k = 1; k < n_r - 1; ++k) {
    // Entry k is r_{n_r - k} in increasing-order indexing.
    const int inc = n_r - 1 - k;
    grid[static_cast<std::size_t>(k)] = std::exp(lo + inc * (hi - lo) / (n_r - 1));
  }
  grid.back() = r_min;
  return grid;
}

std::optional<std::size_t> PathResult::index_of(double r) const {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] == r) return k;
  }
  return std::nullopt;
}

PathResult fit_path(const Dataset& data, const PathOptions& opts) {
  const PlainProblem plain(data, opts.solver.gram);
  const double rmax = plain.r_max();
  PathResult out;
  out.grid = log_grid(rmax, opts.delta, opts.n_r);
  out.block_norms = Eigen::MatrixXd::Zero(static_cast<Index>(out.grid.size()), static_cast<Index>(data.p()));

  SolverOptions solver = opts.solver;
  if (!solver.kkt_tol) solver.kkt_tol = opts.kkt_rel_tol * rmax;

  std::optional<ProjectedProblem> projected;
  if (opts.basis != nullptr) {
    if (opts.m > opts.basis->size()) throw InvalidArgument("path: projection dimension exceeds the basis size");
    projected.emplace(data, *opts.basis);
  }

  Coefficient warm(data.space());
  for (std::size_t k = 0; k < out.grid.size(); ++k) {
    const PenaltyWeights w = plain.weights(out.grid[k]);
    std::optional<FitResult> fit;
    try {
      fit = projected ? projected->fit(opts.m, w, solver, &warm) : plain.fit(w, warm, solver);
    } catch (const NumericError&) {
      fit = FitResult{warm, warm.support(), std::numeric_limits<double>::quiet_NaN(), solver.max_iter, false,
                      std::numeric_limits<double>::infinity()};
    }
    if (!fit->converged && !out.first_failure) out.first_failure = k;
    if (fit->converged) out.r_min_feasible = out.grid[k];
    for (std::size_t j = 0; j < data.p(); ++j) {
      out.block_norms(static_cast<Index>(k), static_cast<Index>(j)) = fit->beta.block_norm(j);
    }
    warm = fit->beta;
    out.fits.push_back(std::move(*fit));
  }
  return out;
}

}  // namespace mflm
