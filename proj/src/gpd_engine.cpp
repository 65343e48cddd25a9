#include "gpd_engine.hpp"

#include <algorithm>
#include <cmath>

#include "mflm/errors.hpp"
#include "mflm/kernels.hpp"

namespace mflm::detail {

namespace {

// Max KKT violation given a callback filling G_j = (1/n) X_j^T res.
template <class Partial>
double kkt_from(const GroupDesign& design, const Eigen::VectorXd& lambda, const std::vector<Eigen::VectorXd>& beta,
                Partial&& partial) {
  double gap = 0.0;
  Eigen::VectorXd G;
  for (std::size_t j = 0; j < design.p(); ++j) {
    const auto& w = design.w[j];
    const double lam = lambda[static_cast<Index>(j)];
    partial(j, G);
    const double bn = weighted_norm(w, beta[j]);
    double v;
    if (bn > 0.0) {
      v = weighted_norm(w, G - (lam / bn) * beta[j]);
    } else {
      v = std::max(0.0, weighted_norm(w, G) - lam);
    }
    gap = std::max(gap, v);
  }
  return gap;
}

}  // namespace

std::shared_ptr<const GramForm> build_gram(const GroupDesign& design) {
  auto form = std::make_shared<GramForm>();
  const Index n = design.n();
  Index D = 0;
  for (const auto* X : design.X) {
    form->offset.push_back(D);
    D += X->cols();
  }
  Eigen::MatrixXd all(n, D);
  for (std::size_t j = 0; j < design.p(); ++j) all.middleCols(form->offset[j], design.X[j]->cols()) = *design.X[j];
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd C = kernels::cross_product(all, all) * inv_n;
  for (std::size_t j = 0; j < design.p(); ++j) form->gram.push_back(C.middleCols(form->offset[j], design.X[j]->cols()));
  form->xty.resize(D);
  kernels::transpose_apply(all, *design.y, form->xty);
  form->xty *= inv_n;
  return form;
}

bool prefer_gram(const GroupDesign& design, GramMode mode) {
  if (mode == GramMode::Always) return true;
  if (mode == GramMode::Never) return false;
  Index D = 0;
  for (const auto* X : design.X) D += X->cols();
  return D <= design.n();
}

Eigen::VectorXd block_means_sq_norm(const GroupDesign& design) {
  Eigen::VectorXd N(static_cast<Index>(design.p()));
  for (std::size_t j = 0; j < design.p(); ++j) {
    N[static_cast<Index>(j)] = kernels::weighted_row_sq_norms(*design.X[j], design.w[j]).mean();
  }
  return N;
}

Eigen::VectorXd residual(const GroupDesign& design, const std::vector<Eigen::VectorXd>& beta) {
  Eigen::VectorXd res = *design.y;
  for (std::size_t j = 0; j < design.p(); ++j) {
    if (beta[j].squaredNorm() == 0.0) continue;
    const Eigen::VectorXd c = -design.w[j].cwiseProduct(beta[j]);
    kernels::apply_add(*design.X[j], c, res);
  }
  return res;
}

double design_objective(const GroupDesign& design, const Eigen::VectorXd& lambda,
                        const std::vector<Eigen::VectorXd>& beta, const Eigen::VectorXd& res) {
  double penalty = 0.0;
  for (std::size_t j = 0; j < design.p(); ++j) {
    penalty += lambda[static_cast<Index>(j)] * weighted_norm(design.w[j], beta[j]);
  }
  return res.squaredNorm() / static_cast<double>(design.n()) + 2.0 * penalty;
}

double design_kkt(const GroupDesign& design, const Eigen::VectorXd& lambda, const std::vector<Eigen::VectorXd>& beta,
                  const Eigen::VectorXd& res) {
  const double inv_n = 1.0 / static_cast<double>(design.n());
  return kkt_from(design, lambda, beta, [&](std::size_t j, Eigen::VectorXd& G) {
    G.resize(design.X[j]->cols());
    kernels::transpose_apply(*design.X[j], res, G);
    G *= inv_n;
  });
}

EngineResult run_gpd(const GroupDesign& design, const Eigen::VectorXd& lambda, std::vector<Eigen::VectorXd> beta,
                     const SolverOptions& opts, double kkt_tol) {
  const double inv_n = 1.0 / static_cast<double>(design.n());
  const std::size_t p = design.p();
  const bool use_gram = design.has_gram();

  // Running state: residuals, or the stacked partial gradients (1/n) X^T res.
  Eigen::VectorXd res;
  Eigen::VectorXd grad;
  auto rebuild = [&] {
    if (use_gram) {
      grad = design.cov->xty;
      for (std::size_t j = 0; j < p; ++j) {
        if (beta[j].squaredNorm() == 0.0) continue;
        const Eigen::VectorXd c = -design.w[j].cwiseProduct(beta[j]);
        kernels::apply_add(design.cov->gram[j], c, grad);
      }
    } else {
      res = residual(design, beta);
    }
  };
  auto partial = [&](std::size_t j, Eigen::VectorXd& R) {
    if (use_gram) {
      R = grad.segment(design.cov->offset[j], design.X[j]->cols());
    } else {
      R.resize(design.X[j]->cols());
      kernels::transpose_apply(*design.X[j], res, R);
      R *= inv_n;
    }
  };
  auto shift = [&](std::size_t j, const Eigen::VectorXd& c) {
    if (use_gram) {
      kernels::apply_add(design.cov->gram[j], c, grad);
    } else {
      kernels::apply_add(*design.X[j], c, res);
    }
  };
  auto state_finite = [&] { return use_gram ? grad.allFinite() : res.allFinite(); };

  rebuild();
  std::vector<double> norms(p);
  for (std::size_t j = 0; j < p; ++j) norms[j] = weighted_norm(design.w[j], beta[j]);

  // Objective reported to the observer, always from exact residuals.
  auto observed_objective = [&] {
    const Eigen::VectorXd r = use_gram ? residual(design, beta) : res;
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += lambda[static_cast<Index>(j)] * norms[j];
    return r.squaredNorm() * inv_n + 2.0 * s;
  };

  EngineResult out;
  Eigen::VectorXd R;
  Eigen::VectorXd c;
  const int refresh = std::max(1, opts.refresh_every);

  for (int cycle = 1; cycle <= opts.max_iter; ++cycle) {
    double metric = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const Eigen::VectorXd& w = design.w[j];
      const double N = design.curvature[static_cast<Index>(j)];
      const double lam = lambda[static_cast<Index>(j)];
      Eigen::VectorXd& b = beta[j];

      Eigen::VectorXd next;
      if (N <= 0.0) {
        next = Eigen::VectorXd::Zero(b.size());
      } else {
        partial(j, R);
        Eigen::VectorXd v = N * b + R;
        const double nv = weighted_norm(w, v);
        if (!std::isfinite(nv)) throw NumericError("GPD update produced a non-finite iterate");
        if (nv <= lam) {
          next = Eigen::VectorXd::Zero(b.size());
        } else {
          next = v * ((1.0 - lam / nv) / N);
        }
      }

      const Eigen::VectorXd delta = next - b;
      const double dn2 = (w.array() * delta.array().square()).sum();
      if (dn2 > 0.0) {
        c = -w.cwiseProduct(delta);
        shift(j, c);
        b = std::move(next);
        norms[j] = weighted_norm(w, b);
      }
      metric = std::max(metric, N * dn2);

      if (opts.on_update) opts.on_update({cycle, j, observed_objective()});
    }
    out.iterations = cycle;

    if (cycle % refresh == 0) rebuild();
    if (!state_finite()) throw NumericError("GPD residuals became non-finite");

    if (metric <= opts.tol) {
      rebuild();
      const double gap = use_gram ? kkt_from(design, lambda, beta, partial) : design_kkt(design, lambda, beta, res);
      if (gap <= kkt_tol) {
        out.converged = true;
        break;
      }
    }
  }

  res = residual(design, beta);
  out.objective = design_objective(design, lambda, beta, res);
  out.kkt_gap = design_kkt(design, lambda, beta, res);
  // The certificate is re-evaluated from exact residuals; keep the flag honest.
  if (out.kkt_gap > kkt_tol) out.converged = false;
  out.beta = std::move(beta);
  return out;
}

}  // namespace mflm::detail
