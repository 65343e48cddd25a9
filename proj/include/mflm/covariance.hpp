#pragma once

// Empirical covariance operator, blockwise PCA basis with a global
// decreasing-eigenvalue ordering, projections onto H^(m) and the
// restricted-eigenvalue quantities kappa_n^(m) and M_n.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "mflm/hilbert.hpp"

namespace mflm {

inline constexpr double kDefaultRankTol = 1e-10;

/// Eigenpairs of one block covariance operator Gamma_j. Columns of `vectors`
/// are orthonormal for the block inner product.
struct BlockEigen {
  Eigen::VectorXd values;   // decreasing, > tol_rank * largest
  Eigen::MatrixXd vectors;  // d_j x K_j
};

/// Position of a global basis element phi^(k): component `component` of block `block`.
struct BasisIndex {
  std::size_t block;
  Index component;
};

class PcaBasis {
 public:
  PcaBasis(SpacePtr space, std::vector<BlockEigen> blocks);

  const SpacePtr& space() const noexcept { return space_; }
  /// Total number of basis elements (sum of K_j).
  std::size_t size() const noexcept { return order_.size(); }
  const BlockEigen& block(std::size_t j) const { return blocks_.at(j); }
  /// sigma(k) for k in [0, size()).
  const BasisIndex& index(std::size_t k) const { return order_.at(k); }
  /// Merged eigenvalue of phi^(k); nonincreasing in k.
  double eigenvalue(std::size_t k) const;
  /// phi^(k) as an element of H (zero outside its block).
  Coefficient element(std::size_t k) const;
  /// Components of block j among the first m global elements, in sigma order.
  std::vector<Index> group(std::size_t j, std::size_t m) const;

 private:
  SpacePtr space_;
  std::vector<BlockEigen> blocks_;
  std::vector<BasisIndex> order_;
};

enum class PcaRoute {
  Auto,    // smaller of the two eigenproblems
  Primal,  // d_j x d_j matrix W^1/2 X^T X W^1/2 / n
  Dual,    // n x n matrix of inner products <X_i, X_i'> / n
};

/// Gamma_hat beta = (1/n) sum_i <beta, X_i> X_i.
Coefficient apply_gamma_hat(const Coefficient& beta, const Dataset& data);

PcaBasis pca_basis(const Dataset& data, double tol_rank = kDefaultRankTol, PcaRoute route = PcaRoute::Auto);

/// sum_{k < m} <beta, phi^(k)> phi^(k).
Coefficient project(const Coefficient& beta, const PcaBasis& basis, std::size_t m);

/// n x m matrix of scores <phi^(k), X_i>.
Eigen::MatrixXd basis_scores(const Dataset& data, const PcaBasis& basis, std::size_t m);

/// Gamma_hat restricted to the first m basis elements:
/// entries <Gamma_hat phi^(k), phi^(k')>.
Eigen::MatrixXd gram_restriction(const Dataset& data, const PcaBasis& basis, std::size_t m);

/// Square root of the smallest eigenvalue of the m x m restriction. Zero when
/// the restriction is singular under the same test as m_max (m > M_n).
double kappa_n(const Dataset& data, const PcaBasis& basis, std::size_t m, double tol_rank = kDefaultRankTol);

/// Largest m whose restriction has smallest eigenvalue > tol_rank * largest
/// eigenvalue; 0 if none.
std::size_t m_max(const Dataset& data, const PcaBasis& basis, double tol_rank = kDefaultRankTol);

/// Empirical stand-in for N_n: the number of merged eigenvalues
/// >= sqrt(log(n)^3 / n), capped at n.
std::size_t n_n_empirical(const PcaBasis& basis, Index n);

}  // namespace mflm
