#include "mflm/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "mflm/errors.hpp"
#include "mflm/kernels.hpp"

namespace mflm {

namespace {

// Largest-magnitude coordinate made positive; first index wins ties.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Index best = 0;
  for (Index k = 1; k < v.size(); ++k) {
    if (std::abs(v[k]) > std::abs(v[best])) best = k;
  }
  if (v[best] < 0.0) v = -v;
}

BlockEigen keep_leading(const Eigen::VectorXd& ascending_values, const Eigen::MatrixXd& ascending_vectors,
                        double tol_rank) {
  const Index total = ascending_values.size();
  const double largest = total > 0 ? ascending_values[total - 1] : 0.0;
  const double cutoff = tol_rank * (largest > 0.0 ? largest : 1.0);
  Index kept = 0;
  while (kept < total && ascending_values[total - 1 - kept] > cutoff) ++kept;
  BlockEigen out;
  out.values.resize(kept);
  out.vectors.resize(ascending_vectors.rows(), kept);
  for (Index k = 0; k < kept; ++k) {
    out.values[k] = ascending_values[total - 1 - k];
    out.vectors.col(k) = ascending_vectors.col(total - 1 - k);
  }
  return out;
}

BlockEigen primal_block(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, double tol_rank) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd Xs = X * sw.asDiagonal();
  Eigen::MatrixXd S = kernels::cross_product(Xs, Xs) / n;
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  BlockEigen out = keep_leading(eig.eigenvalues(), eig.eigenvectors(), tol_rank);
  // Back to grid values: e = W^{-1/2} v is orthonormal for <.,.>_w.
  out.vectors = sw.cwiseInverse().asDiagonal() * out.vectors;
  return out;
}

BlockEigen dual_block(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, double tol_rank) {
  const double n = static_cast<double>(X.rows());
  Eigen::MatrixXd K = kernels::weighted_gram(X, w) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  BlockEigen dual = keep_leading(eig.eigenvalues(), eig.eigenvectors(), tol_rank);
  BlockEigen out;
  out.values = dual.values;
  out.vectors.resize(X.cols(), dual.values.size());
  for (Index k = 0; k < dual.values.size(); ++k) {
    Eigen::VectorXd e = X.transpose() * dual.vectors.col(k);
    // Re-orthogonalize against the leading elements; the map X^T u loses
    // accuracy for eigenvalues near the cutoff.
    for (Index l = 0; l < k; ++l) e -= weighted_dot(w, e, out.vectors.col(l)) * out.vectors.col(l);
    out.vectors.col(k) = e / weighted_norm(w, e);
  }
  return out;
}

}  // namespace

PcaBasis::PcaBasis(SpacePtr space, std::vector<BlockEigen> blocks)
    : space_(std::move(space)), blocks_(std::move(blocks)) {
  if (!space_ || blocks_.size() != space_->size()) throw SpecMismatch("PCA basis needs one eigensystem per block");
  struct Entry {
    double value;
    std::size_t block;
    Index component;
  };
  std::vector<Entry> entries;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j].vectors.rows() != (*space_)[j].size() || blocks_[j].vectors.cols() != blocks_[j].values.size()) {
      throw SpecMismatch("PCA basis block " + std::to_string(j + 1) + " has inconsistent shape");
    }
    for (Index k = 0; k < blocks_[j].values.size(); ++k) entries.push_back({blocks_[j].values[k], j, k});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.block != b.block) return a.block < b.block;
    return a.component < b.component;
  });
  order_.reserve(entries.size());
  for (const auto& e : entries) order_.push_back({e.block, e.component});
}

double PcaBasis::eigenvalue(std::size_t k) const {
  const auto& idx = order_.at(k);
  return blocks_[idx.block].values[idx.component];
}

Coefficient PcaBasis::element(std::size_t k) const {
  const auto& idx = order_.at(k);
  Coefficient phi(space_);
  phi.set_block(idx.block, blocks_[idx.block].vectors.col(idx.component));
  return phi;
}

std::vector<Index> PcaBasis::group(std::size_t j, std::size_t m) const {
  if (m > order_.size()) throw InvalidArgument("basis dimension m out of range");
  std::vector<Index> comps;
  for (std::size_t k = 0; k < m; ++k) {
    if (order_[k].block == j) comps.push_back(order_[k].component);
  }
  return comps;
}

Coefficient apply_gamma_hat(const Coefficient& beta, const Dataset& data) {
  require_conforming(beta, data);
  const Eigen::VectorXd s = data.predict(beta);
  const double n = static_cast<double>(data.n());
  std::vector<Eigen::VectorXd> out;
  out.reserve(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) {
    Eigen::VectorXd g(data.block(j).cols());
    kernels::transpose_apply(data.block(j), s, g);
    out.push_back(g / n);
  }
  return Coefficient(data.space(), std::move(out));
}

PcaBasis pca_basis(const Dataset& data, double tol_rank, PcaRoute route) {
  std::vector<BlockEigen> blocks;
  blocks.reserve(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) {
    const Eigen::MatrixXd& X = data.block(j);
    const Eigen::VectorXd& w = (*data.space())[j].weights();
    BlockEigen be;
    if (X.squaredNorm() == 0.0) {
      be.values.resize(0);
      be.vectors.resize(X.cols(), 0);
    } else {
      const bool use_dual = route == PcaRoute::Dual || (route == PcaRoute::Auto && X.rows() < X.cols());
      be = use_dual ? dual_block(X, w, tol_rank) : primal_block(X, w, tol_rank);
      for (Index k = 0; k < be.vectors.cols(); ++k) fix_sign(be.vectors.col(k));
    }
    blocks.push_back(std::move(be));
  }
  return PcaBasis(data.space(), std::move(blocks));
}

Coefficient project(const Coefficient& beta, const PcaBasis& basis, std::size_t m) {
  if (!same_space(beta.space(), basis.space())) throw SpecMismatch("project: coefficient and basis spaces differ");
  if (m > basis.size()) throw InvalidArgument("project: m exceeds the basis size");
  Coefficient out(beta.space());
  for (std::size_t j = 0; j < beta.p(); ++j) {
    const auto comps = basis.group(j, m);
    if (comps.empty()) continue;
    const Eigen::VectorXd& w = (*beta.space())[j].weights();
    const Eigen::MatrixXd& E = basis.block(j).vectors;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(beta.block(j).size());
    for (Index c : comps) acc += weighted_dot(w, beta.block(j), E.col(c)) * E.col(c);
    out.set_block(j, std::move(acc));
  }
  return out;
}

Eigen::MatrixXd basis_scores(const Dataset& data, const PcaBasis& basis, std::size_t m) {
  if (!same_space(data.space(), basis.space())) throw SpecMismatch("basis_scores: dataset and basis spaces differ");
  if (m > basis.size()) throw InvalidArgument("basis_scores: m exceeds the basis size");
  Eigen::MatrixXd S(data.n(), static_cast<Index>(m));
  for (std::size_t j = 0; j < data.p(); ++j) {
    std::vector<Index> columns;
    std::vector<Index> comps;
    for (std::size_t k = 0; k < m; ++k) {
      if (basis.index(k).block == j) {
        columns.push_back(static_cast<Index>(k));
        comps.push_back(basis.index(k).component);
      }
    }
    if (comps.empty()) continue;
    const Eigen::VectorXd& w = (*data.space())[j].weights();
    Eigen::MatrixXd WE(w.size(), static_cast<Index>(comps.size()));
    for (std::size_t c = 0; c < comps.size(); ++c) {
      WE.col(static_cast<Index>(c)) = w.cwiseProduct(basis.block(j).vectors.col(comps[c]));
    }
    const Eigen::MatrixXd block_scores = data.block(j) * WE;
    for (std::size_t c = 0; c < columns.size(); ++c) S.col(columns[c]) = block_scores.col(static_cast<Index>(c));
  }
  return S;
}

Eigen::MatrixXd gram_restriction(const Dataset& data, const PcaBasis& basis, std::size_t m) {
  const Eigen::MatrixXd S = basis_scores(data, basis, m);
  Eigen::MatrixXd G = kernels::cross_product(S, S) / static_cast<double>(data.n());
  return 0.5 * (G + G.transpose());
}

double kappa_n(const Dataset& data, const PcaBasis& basis, std::size_t m, double tol_rank) {
  if (m < 1 || m > basis.size()) throw InvalidArgument("kappa_n: m out of range");
  const Eigen::MatrixXd G = gram_restriction(data, basis, m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()[0];
  const double hi = eig.eigenvalues()[static_cast<Index>(m) - 1];
  // Below the rank tolerance the smallest eigenvalue is rounding noise.
  if (!(hi > 0.0) || lo <= tol_rank * hi) return 0.0;
  return std::sqrt(lo);
}

std::size_t m_max(const Dataset& data, const PcaBasis& basis, double tol_rank) {
  const std::size_t total = basis.size();
  if (total == 0) return 0;
  const Eigen::MatrixXd G = gram_restriction(data, basis, total);
  auto nonsingular = [&](std::size_t m) {
    const Index mm = static_cast<Index>(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G.topLeftCorner(mm, mm), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()[0];
    const double hi = eig.eigenvalues()[mm - 1];
    return hi > 0.0 && lo > tol_rank * hi;
  };
  if (!nonsingular(1)) return 0;
  // lambda_min of nested leading blocks is nonincreasing and lambda_max is
  // nondecreasing, so the condition is monotone in m.
  std::size_t lo = 1;
  std::size_t hi = total;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (nonsingular(mid)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

std::size_t n_n_empirical(const PcaBasis& basis, Index n) {
  const double ln = std::log(static_cast<double>(n));
  const double threshold = std::sqrt(ln * ln * ln / static_cast<double>(n));
  std::size_t count = 0;
  while (count < basis.size() && basis.eigenvalue(count) >= threshold) ++count;
  return std::min<std::size_t>(count, static_cast<std::size_t>(n));
}

}  // namespace mflm
