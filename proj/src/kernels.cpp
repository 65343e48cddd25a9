#include "mflm/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mflm::kernels {

namespace {

using Eigen::Index;

// Splits [0, total) into chunks of at least `grain` rows/columns.
Index chunk_count(Index total, Index grain) { return std::max<Index>(1, total / std::max<Index>(1, grain)); }

}  // namespace

void transpose_apply(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, Eigen::Ref<Eigen::VectorXd> out) {
  const Index n = X.rows();
  const Index d = X.cols();
  const bool parallel = n * d >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (Index k = 0; k < d; ++k) out[k] = X.col(k).dot(r);
}

void apply_add(const Eigen::MatrixXd& X, const Eigen::VectorXd& c, Eigen::Ref<Eigen::VectorXd> out) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (n * d < kParallelWork) {
    out.noalias() += X * c;
    return;
  }
  const Index chunks = chunk_count(n, 256);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < chunks; ++b) {
    const Index lo = b * n / chunks;
    const Index hi = (b + 1) * n / chunks;
    out.segment(lo, hi - lo).noalias() += X.middleRows(lo, hi - lo) * c;
  }
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  const Index n = X.rows();
  const Eigen::MatrixXd Xw = X * w.asDiagonal();
  Eigen::MatrixXd G(n, n);
  const Index chunks = chunk_count(n, 32);
  const bool parallel = n * n * X.cols() >= kParallelWork;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (Index b = 0; b < chunks; ++b) {
    const Index lo = b * n / chunks;
    const Index hi = (b + 1) * n / chunks;
    // Upper triangle only: columns [lo, hi) against rows [0, hi).
    G.block(0, lo, hi, hi - lo).noalias() = X.topRows(hi) * Xw.middleRows(lo, hi - lo).transpose();
  }
  G.triangularView<Eigen::StrictlyLower>() = G.transpose();
  return G;
}

Eigen::MatrixXd cross_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Index m = B.cols();
  Eigen::MatrixXd C(A.cols(), m);
  const Index chunks = chunk_count(m, 16);
  const bool parallel = A.rows() * A.cols() * m >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (Index b = 0; b < chunks; ++b) {
    const Index lo = b * m / chunks;
    const Index hi = (b + 1) * m / chunks;
    C.middleCols(lo, hi - lo).noalias() = A.transpose() * B.middleCols(lo, hi - lo);
  }
  return C;
}

Eigen::VectorXd weighted_row_sq_norms(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  const Index n = X.rows();
  Eigen::VectorXd out(n);
  const bool parallel = n * X.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (Index i = 0; i < n; ++i) out[i] = (X.row(i).array().square() * w.transpose().array()).sum();
  return out;
}

namespace reference {

void transpose_apply(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, Eigen::Ref<Eigen::VectorXd> out) {
  for (Index k = 0; k < X.cols(); ++k) {
    double s = 0.0;
    for (Index i = 0; i < X.rows(); ++i) s += X(i, k) * r[i];
    out[k] = s;
  }
}

void apply_add(const Eigen::MatrixXd& X, const Eigen::VectorXd& c, Eigen::Ref<Eigen::VectorXd> out) {
  for (Index i = 0; i < X.rows(); ++i) {
    double s = 0.0;
    for (Index k = 0; k < X.cols(); ++k) s += X(i, k) * c[k];
    out[i] += s;
  }
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  const Index n = X.rows();
  Eigen::MatrixXd G(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      double s = 0.0;
      for (Index k = 0; k < X.cols(); ++k) s += w[k] * X(i, k) * X(j, k);
      G(i, j) = s;
      G(j, i) = s;
    }
  }
  return G;
}

Eigen::MatrixXd cross_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd C(A.cols(), B.cols());
  for (Index a = 0; a < A.cols(); ++a) {
    for (Index b = 0; b < B.cols(); ++b) {
      double s = 0.0;
      for (Index i = 0; i < A.rows(); ++i) s += A(i, a) * B(i, b);
      C(a, b) = s;
    }
  }
  return C;
}

Eigen::VectorXd weighted_row_sq_norms(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  Eigen::VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    double s = 0.0;
    for (Index k = 0; k < X.cols(); ++k) s += w[k] * X(i, k) * X(i, k);
    out[i] = s;
  }
  return out;
}

}  // namespace reference

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n >= 1) {
    omp_set_num_threads(n);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
#else
  (void)n;
#endif
}

}  // namespace mflm::kernels
