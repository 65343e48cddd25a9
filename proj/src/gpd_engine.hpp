#pragma once

// Block coordinate majorization descent on a generic weighted group design.
// Shared by the plain estimator (blocks = grid values, quadrature weights)
// and the projected one (blocks = PCA scores, unit weights).
//
// Two equivalent ways of tracking the partial gradients R_j are supported:
// running residuals (O(n d_j) per block visit) and, when `cov` is set,
// running covariances R = c - C W beta (O(D d_j) per changed block). The
// iterates are the same up to rounding.

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "mflm/solver.hpp"

namespace mflm::detail {

// gram[j] = (1/n) X^T X_j (D x d_j) with X the column concatenation of all
// blocks; xty = (1/n) X^T y; offset[j] is the first row of block j in X^T.
struct GramForm {
  std::vector<Eigen::MatrixXd> gram;
  Eigen::VectorXd xty;
  std::vector<Index> offset;
};

struct GroupDesign {
  std::vector<const Eigen::MatrixXd*> X;  // n x d_j
  std::vector<Eigen::VectorXd> w;         // inner-product weights per block
  const Eigen::VectorXd* y = nullptr;
  Eigen::VectorXd curvature;              // N_j, majorizes the spectral radius of block j

  std::shared_ptr<const GramForm> cov;  // optional covariance form

  Index n() const { return y->size(); }
  std::size_t p() const { return X.size(); }
  bool has_gram() const { return cov != nullptr; }
};

std::shared_ptr<const GramForm> build_gram(const GroupDesign& design);

/// Whether the covariance form is worth building for this design.
bool prefer_gram(const GroupDesign& design, GramMode mode);

struct EngineResult {
  std::vector<Eigen::VectorXd> beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;
};

Eigen::VectorXd block_means_sq_norm(const GroupDesign& design);

Eigen::VectorXd residual(const GroupDesign& design, const std::vector<Eigen::VectorXd>& beta);

double design_objective(const GroupDesign& design, const Eigen::VectorXd& lambda,
                        const std::vector<Eigen::VectorXd>& beta, const Eigen::VectorXd& res);

double design_kkt(const GroupDesign& design, const Eigen::VectorXd& lambda, const std::vector<Eigen::VectorXd>& beta,
                  const Eigen::VectorXd& res);

EngineResult run_gpd(const GroupDesign& design, const Eigen::VectorXd& lambda, std::vector<Eigen::VectorXd> beta,
                     const SolverOptions& opts, double kkt_tol);

}  // namespace mflm::detail
