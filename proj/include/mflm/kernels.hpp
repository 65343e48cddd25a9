#pragma once

// Dense data-parallel kernels behind the solver, the PCA basis and the ridge
// step. The default versions are OpenMP-parallel over independent output
// entries and fall back to a single thread below kParallelWork multiply-adds.
// The `reference` namespace holds plain serial loops with the same contracts;
// they exist for tests and benchmarks only.

#include <Eigen/Core>

namespace mflm::kernels {

/// Below this many multiply-adds the kernels stay on the calling thread.
inline constexpr long kParallelWork = 1L << 16;

/// out = X^T r. out must have X.cols() entries.
void transpose_apply(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, Eigen::Ref<Eigen::VectorXd> out);

/// out += X c. out must have X.rows() entries.
void apply_add(const Eigen::MatrixXd& X, const Eigen::VectorXd& c, Eigen::Ref<Eigen::VectorXd> out);

/// X diag(w) X^T, exactly symmetric.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& X, const Eigen::VectorXd& w);

/// A^T B.
Eigen::MatrixXd cross_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// sum_k w_k X(i,k)^2 for every row i.
Eigen::VectorXd weighted_row_sq_norms(const Eigen::MatrixXd& X, const Eigen::VectorXd& w);

namespace reference {

void transpose_apply(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, Eigen::Ref<Eigen::VectorXd> out);
void apply_add(const Eigen::MatrixXd& X, const Eigen::VectorXd& c, Eigen::Ref<Eigen::VectorXd> out);
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& X, const Eigen::VectorXd& w);
Eigen::MatrixXd cross_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Eigen::VectorXd weighted_row_sq_norms(const Eigen::MatrixXd& X, const Eigen::VectorXd& w);

}  // namespace reference

/// Number of OpenMP threads the kernels may use (1 without OpenMP).
int max_threads();
/// Sets the OpenMP thread count; values < 1 restore the runtime default.
void set_threads(int n);

}  // namespace mflm::kernels
