#include "mflm/debias.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mflm/errors.hpp"
#include "mflm/kernels.hpp"
#include "mflm/selection.hpp"

namespace mflm {

namespace {

// The support blocks stacked side by side: beta restricted to J becomes one
// raw vector b of length D_J with inner-product weights w.
struct RidgeSystem {
  std::vector<std::size_t> support;
  std::vector<Index> offset;
  Eigen::MatrixXd X;      // n x D_J
  Eigen::VectorXd w;      // D_J
  Eigen::VectorXd delta;  // (1/n) X^T y
  Eigen::MatrixXd gram;   // (1/n) X^T X when D_J <= n, else empty
  double inv_n = 0.0;

  RidgeSystem(const Dataset& data, std::vector<std::size_t> J) : support(std::move(J)) {
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    Index D = 0;
    for (std::size_t j : support) {
      if (j >= data.p()) throw InvalidArgument("support index " + std::to_string(j + 1) + " out of range");
      offset.push_back(D);
      D += data.block(j).cols();
    }
    X.resize(data.n(), D);
    w.resize(D);
    for (std::size_t s = 0; s < support.size(); ++s) {
      const auto& B = data.block(support[s]);
      X.middleCols(offset[s], B.cols()) = B;
      w.segment(offset[s], B.cols()) = (*data.space())[support[s]].weights();
    }
    inv_n = 1.0 / static_cast<double>(data.n());
    delta.resize(D);
    kernels::transpose_apply(X, data.y(), delta);
    delta *= inv_n;
    if (D <= data.n()) gram = kernels::cross_product(X, X) * inv_n;
  }

  Index dim() const { return w.size(); }

  // Gamma_J b in raw coordinates.
  Eigen::VectorXd gamma(const Eigen::VectorXd& b) const {
    const Eigen::VectorXd wb = w.cwiseProduct(b);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
    if (gram.size() > 0) {
      kernels::apply_add(gram, wb, out);
    } else {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(X.rows());
      kernels::apply_add(X, wb, s);
      kernels::transpose_apply(X, s, out);
      out *= inv_n;
    }
    return out;
  }

  // Symmetric form S = W^1/2 Gamma_J W^-1/2 = W^1/2 (X^T X / n) W^1/2.
  Eigen::MatrixXd symmetric() const {
    const Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXd G = gram.size() > 0 ? gram : Eigen::MatrixXd(kernels::cross_product(X, X) * inv_n);
    Eigen::MatrixXd S = sw.asDiagonal() * G * sw.asDiagonal();
    return 0.5 * (S + S.transpose());
  }

  double lambda_max() const {
    if (dim() == 0) return 0.0;
    // Nonzero spectrum of W^1/2 X^T X W^1/2 / n equals that of X W X^T / n.
    Eigen::MatrixXd M = dim() <= X.rows() ? symmetric() : Eigen::MatrixXd(kernels::weighted_gram(X, w) * inv_n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    return std::max(0.0, eig.eigenvalues()[eig.eigenvalues().size() - 1]);
  }

  double objective(const Dataset& data, double rho, const Eigen::VectorXd& b) const {
    Eigen::VectorXd res = data.y();
    kernels::apply_add(X, Eigen::VectorXd(-w.cwiseProduct(b)), res);
    return res.squaredNorm() * inv_n + rho * weighted_dot(w, b, b);
  }

  Eigen::VectorXd gather(const Coefficient& beta) const {
    Eigen::VectorXd b(dim());
    for (std::size_t s = 0; s < support.size(); ++s) b.segment(offset[s], beta.block(support[s]).size()) = beta.block(support[s]);
    return b;
  }

  Coefficient scatter(const SpacePtr& space, const Eigen::VectorXd& b) const {
    Coefficient out(space);
    for (std::size_t s = 0; s < support.size(); ++s) {
      out.set_block(support[s], b.segment(offset[s], (*space)[support[s]].size()));
    }
    return out;
  }
};

void require_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be finite and > 0");
}

}  // namespace

double ridge_objective(const Dataset& data, const std::vector<std::size_t>& support, double rho,
                       const Coefficient& beta) {
  require_conforming(beta, data);
  const RidgeSystem sys(data, support);
  return sys.objective(data, rho, sys.gather(beta));
}

DebiasResult tikhonov_fit(const Dataset& data, const std::vector<std::size_t>& support, double rho,
                          const Coefficient& init, const TikhonovOptions& opts) {
  require_rho(rho);
  require_conforming(init, data);
  if (support.empty()) return DebiasResult{Coefficient(data.space()), rho, 0, 0.0, 0.0, true};

  const RidgeSystem sys(data, support);
  double alpha1;
  if (opts.step_rule == StepRule::SpectralBound) {
    alpha1 = 1.0 / (rho + sys.lambda_max());
  } else {
    double trace = 0.0;
    for (std::size_t j : sys.support) {
      trace += kernels::weighted_row_sq_norms(data.block(j), (*data.space())[j].weights()).mean();
    }
    alpha1 = 1.0 / (2.0 * (rho + trace));
  }

  const double tol = opts.grad_tol_rel * (1.0 + std::sqrt(weighted_dot(sys.w, sys.delta, sys.delta)));
  Eigen::VectorXd b = sys.gather(init);
  Eigen::VectorXd g;
  auto gradient = [&] {
    g = 2.0 * (sys.gamma(b) + rho * b - sys.delta);
    return std::sqrt(weighted_dot(sys.w, g, g));
  };

  DebiasResult out{Coefficient(data.space()), rho, 0, gradient(), alpha1, false};
  for (int k = 1; k <= opts.max_steps && out.gradient_norm > tol; ++k) {
    b -= (alpha1 / k) * g;
    out.n_steps = k;
    if (opts.on_step) opts.on_step(k, sys.objective(data, rho, b));
    out.gradient_norm = gradient();
    if (!std::isfinite(out.gradient_norm)) throw NumericError("ridge gradient became non-finite");
  }
  out.converged = out.gradient_norm <= tol;
  out.beta_tilde = sys.scatter(data.space(), b);
  return out;
}

Coefficient tikhonov_direct(const Dataset& data, const std::vector<std::size_t>& support, double rho) {
  require_rho(rho);
  if (support.empty()) return Coefficient(data.space());
  const RidgeSystem sys(data, support);
  // With u = W^1/2 b the system becomes (S + rho I) u = W^1/2 Delta.
  const Eigen::VectorXd sw = sys.w.cwiseSqrt();
  Eigen::MatrixXd A = sys.symmetric();
  A.diagonal().array() += rho;
  const Eigen::VectorXd u = A.llt().solve(sw.cwiseProduct(sys.delta));
  return sys.scatter(data.space(), u.cwiseQuotient(sw));
}

std::vector<double> default_rho_grid() {
  std::vector<double> grid(20);
  const double lo = std::log(1e-6);
  const double hi = std::log(10.0);
  for (int k = 0; k < 20; ++k) grid[static_cast<std::size_t>(k)] = std::exp(lo + k * (hi - lo) / 19.0);
  grid.front() = 1e-6;
  grid.back() = 10.0;
  return grid;
}

RhoCvResult select_rho_cv(const Dataset& data, const std::vector<std::size_t>& support,
                          const std::vector<double>& rho_grid, const RhoCvOptions& opts) {
  if (rho_grid.empty()) throw InvalidArgument("rho grid is empty");
  for (double rho : rho_grid) require_rho(rho);
  RhoCvResult out;
  out.grid = rho_grid;
  out.scores.assign(rho_grid.size(), 0.0);
  if (support.empty()) {
    out.rho = *std::max_element(rho_grid.begin(), rho_grid.end());
    return out;
  }

  const auto folds = contiguous_folds(data.n(), opts.V);
  const Index V = static_cast<Index>(folds.size());
  const Index K = static_cast<Index>(rho_grid.size());
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
      for (Index k = 0; k < K; ++k) {
        const double rho = rho_grid[static_cast<std::size_t>(k)];
        const Coefficient beta = opts.solver == RhoCvSolver::Direct
                                     ? tikhonov_direct(tr, support, rho)
                                     : tikhonov_fit(tr, support, rho, Coefficient(data.space()), opts.tikhonov).beta_tilde;
        sse(v, k) = (te.y() - te.predict(beta)).squaredNorm();
      }
    } catch (...) {
      errors[static_cast<std::size_t>(v)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  double best = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < K; ++k) {
    const double score = sse.col(k).sum() / static_cast<double>(data.n());
    const double rho = rho_grid[static_cast<std::size_t>(k)];
    out.scores[static_cast<std::size_t>(k)] = score;
    if (score < best || (score == best && rho > out.rho)) {
      best = score;
      out.rho = rho;
    }
  }
  return out;
}

}  // namespace mflm
