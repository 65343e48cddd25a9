#pragma once

// Elements of the product space H = H_1 x ... x H_p and the observation
// container used throughout the library.
//
// Every block is stored by its values on a fixed set of coordinates: grid
// values for curves, components for vectors, one value for scalars. The
// inner product of a block is then a weighted dot product whose weights are
// the trapezoid quadrature weights of the grid (curves) or ones (vectors and
// scalars), so all linear algebra below works on plain Eigen vectors.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mflm {

using Index = Eigen::Index;

enum class BlockKind { Curve, Vector, Scalar };

const char* to_string(BlockKind kind) noexcept;

/// Shape of one block H_j.
class BlockSpec {
 public:
  /// Curve observed on a strictly increasing finite grid of at least 2 points.
  static BlockSpec curve(Eigen::VectorXd grid);
  static BlockSpec vector(Index dim);
  static BlockSpec scalar();

  BlockKind kind() const noexcept { return kind_; }
  /// Number of stored coordinates.
  Index size() const noexcept { return weights_.size(); }
  /// Time points of a curve block; empty otherwise.
  const Eigen::VectorXd& grid() const noexcept { return grid_; }
  /// Inner-product weights: <f, g>_j = sum_k w_k f_k g_k.
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

  friend bool operator==(const BlockSpec& a, const BlockSpec& b);

 private:
  BlockSpec(BlockKind kind, Eigen::VectorXd grid, Eigen::VectorXd weights)
      : kind_(kind), grid_(std::move(grid)), weights_(std::move(weights)) {}

  BlockKind kind_;
  Eigen::VectorXd grid_;
  Eigen::VectorXd weights_;
};

using SpaceSpec = std::vector<BlockSpec>;
using SpacePtr = std::shared_ptr<const SpaceSpec>;

SpacePtr make_space(SpaceSpec blocks);
bool same_space(const SpacePtr& a, const SpacePtr& b);

/// Weighted inner product and norm on raw coordinate vectors of one block.
double weighted_dot(const Eigen::VectorXd& w, const Eigen::VectorXd& f, const Eigen::VectorXd& g);
double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& f);

/// One element of H_j.
struct BlockElement {
  BlockElement(BlockSpec spec, Eigen::VectorXd values);

  BlockSpec spec;
  Eigen::VectorXd values;
};

double block_inner(const BlockElement& f, const BlockElement& g);

/// beta = (beta_1, ..., beta_p) in H.
class Coefficient {
 public:
  /// The zero element.
  explicit Coefficient(SpacePtr space);
  Coefficient(SpacePtr space, std::vector<Eigen::VectorXd> blocks);

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t p() const noexcept { return blocks_.size(); }

  const Eigen::VectorXd& block(std::size_t j) const { return blocks_.at(j); }
  const std::vector<Eigen::VectorXd>& blocks() const noexcept { return blocks_; }
  void set_block(std::size_t j, Eigen::VectorXd values);
  BlockElement element(std::size_t j) const;

  double block_norm(std::size_t j) const;
  /// J(beta) = { j : ||beta_j||_j > 0 }, ascending.
  std::vector<std::size_t> support() const;

  Coefficient& operator+=(const Coefficient& other);
  Coefficient& operator-=(const Coefficient& other);
  Coefficient& operator*=(double a);

  friend Coefficient operator+(Coefficient a, const Coefficient& b) { return a += b; }
  friend Coefficient operator-(Coefficient a, const Coefficient& b) { return a -= b; }
  friend Coefficient operator*(double a, Coefficient b) { return b *= a; }

 private:
  SpacePtr space_;
  std::vector<Eigen::VectorXd> blocks_;
};

double space_inner(const Coefficient& a, const Coefficient& b);
double norm(const Coefficient& a);

/// Empirical means removed by prepare(); zero for an unprepared dataset.
struct CenteringRecord {
  std::vector<Eigen::VectorXd> block_means;
  double response_mean = 0.0;
  bool centered = false;
};

/// n observations (Y_i, X_i^1, ..., X_i^p). Block j is held as an n x d_j
/// column-major matrix whose row i is X_i^j.
class Dataset {
 public:
  Dataset(SpacePtr space, std::vector<Eigen::MatrixXd> blocks, Eigen::VectorXd y,
          std::vector<std::string> names = {});

  Index n() const noexcept { return y_.size(); }
  std::size_t p() const noexcept { return blocks_.size(); }
  const SpacePtr& space() const noexcept { return space_; }
  const Eigen::MatrixXd& block(std::size_t j) const { return blocks_.at(j); }
  const std::vector<Eigen::MatrixXd>& blocks() const noexcept { return blocks_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const CenteringRecord& centering() const noexcept { return centering_; }

  /// X_i as an element of H.
  Coefficient observation(Index i) const;
  /// <beta, X_i> for every i.
  Eigen::VectorXd predict(const Coefficient& beta) const;
  /// Mean squared residual (1/n) sum_i (Y_i - <beta, X_i>)^2.
  double mean_squared_residual(const Coefficient& beta) const;

  Dataset subset(std::span<const Index> rows) const;
  Dataset with_response(Eigen::VectorXd y) const;

  friend Dataset prepare(const Dataset& raw);

 private:
  SpacePtr space_;
  std::vector<Eigen::MatrixXd> blocks_;
  Eigen::VectorXd y_;
  std::vector<std::string> names_;
  CenteringRecord centering_;
};

/// Subtracts each block's empirical mean element from every row and centers
/// y. Means are accumulated in the centering record.
Dataset prepare(const Dataset& raw);

/// Throws SpecMismatch unless beta lives in the dataset's space.
void require_conforming(const Coefficient& beta, const Dataset& data);

}  // namespace mflm
