#include "mflm/hilbert.hpp"

#include <cmath>
#include <sstream>

#include "mflm/errors.hpp"

namespace mflm {

const char* to_string(BlockKind kind) noexcept {
  switch (kind) {
    case BlockKind::Curve:
      return "curve";
    case BlockKind::Vector:
      return "vector";
    case BlockKind::Scalar:
      return "scalar";
  }
  return "unknown";
}

BlockSpec BlockSpec::curve(Eigen::VectorXd grid) {
  const Index g = grid.size();
  if (g < 2) throw InvalidArgument("curve grid needs at least 2 points");
  if (!grid.allFinite()) throw InvalidArgument("curve grid has non-finite values");
  for (Index k = 1; k < g; ++k) {
    if (!(grid[k] > grid[k - 1])) throw InvalidArgument("curve grid must be strictly increasing");
  }
  // Trapezoid rule applied to the product f*g.
  Eigen::VectorXd w(g);
  w[0] = 0.5 * (grid[1] - grid[0]);
  w[g - 1] = 0.5 * (grid[g - 1] - grid[g - 2]);
  for (Index k = 1; k + 1 < g; ++k) w[k] = 0.5 * (grid[k + 1] - grid[k - 1]);
  return BlockSpec(BlockKind::Curve, std::move(grid), std::move(w));
}

BlockSpec BlockSpec::vector(Index dim) {
  if (dim < 1) throw InvalidArgument("vector block dimension must be >= 1");
  return BlockSpec(BlockKind::Vector, Eigen::VectorXd(), Eigen::VectorXd::Ones(dim));
}

BlockSpec BlockSpec::scalar() {
  return BlockSpec(BlockKind::Scalar, Eigen::VectorXd(), Eigen::VectorXd::Ones(1));
}

bool operator==(const BlockSpec& a, const BlockSpec& b) {
  if (a.kind_ != b.kind_ || a.size() != b.size()) return false;
  if (a.kind_ != BlockKind::Curve) return true;
  return (a.grid_.array() == b.grid_.array()).all();
}

SpacePtr make_space(SpaceSpec blocks) {
  if (blocks.empty()) throw InvalidArgument("space needs at least one block");
  return std::make_shared<const SpaceSpec>(std::move(blocks));
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

double weighted_dot(const Eigen::VectorXd& w, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  return (w.array() * f.array() * g.array()).sum();
}

double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& f) {
  return std::sqrt((w.array() * f.array().square()).sum());
}

BlockElement::BlockElement(BlockSpec s, Eigen::VectorXd v) : spec(std::move(s)), values(std::move(v)) {
  if (values.size() != spec.size()) {
    std::ostringstream msg;
    msg << "block element has " << values.size() << " values, spec expects " << spec.size();
    throw SpecMismatch(msg.str());
  }
  if (!values.allFinite()) throw NumericError("block element has non-finite values");
}

double block_inner(const BlockElement& f, const BlockElement& g) {
  if (!(f.spec == g.spec)) throw SpecMismatch("block_inner: elements live in different spaces");
  return weighted_dot(f.spec.weights(), f.values, g.values);
}

Coefficient::Coefficient(SpacePtr space) : space_(std::move(space)) {
  if (!space_) throw InvalidArgument("coefficient needs a space");
  blocks_.reserve(space_->size());
  for (const auto& spec : *space_) blocks_.push_back(Eigen::VectorXd::Zero(spec.size()));
}

Coefficient::Coefficient(SpacePtr space, std::vector<Eigen::VectorXd> blocks)
    : space_(std::move(space)), blocks_(std::move(blocks)) {
  if (!space_) throw InvalidArgument("coefficient needs a space");
  if (blocks_.size() != space_->size()) throw SpecMismatch("coefficient block count differs from space");
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j].size() != (*space_)[j].size()) {
      throw SpecMismatch("coefficient block " + std::to_string(j + 1) + " has wrong length");
    }
  }
}

void Coefficient::set_block(std::size_t j, Eigen::VectorXd values) {
  if (values.size() != space_->at(j).size()) {
    throw SpecMismatch("set_block: block " + std::to_string(j + 1) + " has wrong length");
  }
  blocks_[j] = std::move(values);
}

BlockElement Coefficient::element(std::size_t j) const { return BlockElement(space_->at(j), blocks_.at(j)); }

double Coefficient::block_norm(std::size_t j) const {
  return weighted_norm((*space_)[j].weights(), blocks_.at(j));
}

std::vector<std::size_t> Coefficient::support() const {
  std::vector<std::size_t> s;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (block_norm(j) > 0.0) s.push_back(j);
  }
  return s;
}

Coefficient& Coefficient::operator+=(const Coefficient& other) {
  if (!same_space(space_, other.space_)) throw SpecMismatch("coefficient sum across different spaces");
  for (std::size_t j = 0; j < blocks_.size(); ++j) blocks_[j] += other.blocks_[j];
  return *this;
}

Coefficient& Coefficient::operator-=(const Coefficient& other) {
  if (!same_space(space_, other.space_)) throw SpecMismatch("coefficient difference across different spaces");
  for (std::size_t j = 0; j < blocks_.size(); ++j) blocks_[j] -= other.blocks_[j];
  return *this;
}

Coefficient& Coefficient::operator*=(double a) {
  for (auto& b : blocks_) b *= a;
  return *this;
}

double space_inner(const Coefficient& a, const Coefficient& b) {
  if (!same_space(a.space(), b.space())) throw SpecMismatch("space_inner: coefficients live in different spaces");
  double s = 0.0;
  for (std::size_t j = 0; j < a.p(); ++j) {
    s += weighted_dot((*a.space())[j].weights(), a.block(j), b.block(j));
  }
  return s;
}

double norm(const Coefficient& a) { return std::sqrt(std::max(0.0, space_inner(a, a))); }

Dataset::Dataset(SpacePtr space, std::vector<Eigen::MatrixXd> blocks, Eigen::VectorXd y,
                 std::vector<std::string> names)
    : space_(std::move(space)), blocks_(std::move(blocks)), y_(std::move(y)), names_(std::move(names)) {
  if (!space_) throw InvalidArgument("dataset needs a space");
  if (blocks_.size() != space_->size()) throw SpecMismatch("dataset block count differs from space");
  if (y_.size() < 1) throw InvalidArgument("dataset needs at least one observation");
  if (!y_.allFinite()) throw NumericError("response has non-finite values");
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& X = blocks_[j];
    if (X.rows() != y_.size() || X.cols() != (*space_)[j].size()) {
      std::ostringstream msg;
      msg << "block " << j + 1 << " is " << X.rows() << "x" << X.cols() << ", expected " << y_.size() << "x"
          << (*space_)[j].size();
      throw SpecMismatch(msg.str());
    }
    if (!X.allFinite()) throw NumericError("block " + std::to_string(j + 1) + " has non-finite values");
  }
  if (names_.empty()) {
    for (std::size_t j = 0; j < blocks_.size(); ++j) names_.push_back("X" + std::to_string(j + 1));
  } else if (names_.size() != blocks_.size()) {
    throw InvalidArgument("dataset needs one name per block");
  }
  centering_.block_means.reserve(blocks_.size());
  for (const auto& spec : *space_) centering_.block_means.push_back(Eigen::VectorXd::Zero(spec.size()));
}

Coefficient Dataset::observation(Index i) const {
  std::vector<Eigen::VectorXd> row;
  row.reserve(blocks_.size());
  for (const auto& X : blocks_) row.push_back(X.row(i).transpose());
  return Coefficient(space_, std::move(row));
}

Eigen::VectorXd Dataset::predict(const Coefficient& beta) const {
  require_conforming(beta, *this);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n());
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const Eigen::VectorXd wb = (*space_)[j].weights().cwiseProduct(beta.block(j));
    if (wb.squaredNorm() > 0.0) out.noalias() += blocks_[j] * wb;
  }
  return out;
}

double Dataset::mean_squared_residual(const Coefficient& beta) const {
  return (y_ - predict(beta)).squaredNorm() / static_cast<double>(n());
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(blocks_.size());
  for (const auto& X : blocks_) {
    Eigen::MatrixXd S(static_cast<Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) S.row(static_cast<Index>(r)) = X.row(rows[r]);
    blocks.push_back(std::move(S));
  }
  Eigen::VectorXd y(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) y[static_cast<Index>(r)] = y_[rows[r]];
  Dataset out(space_, std::move(blocks), std::move(y), names_);
  out.centering_ = centering_;
  return out;
}

Dataset Dataset::with_response(Eigen::VectorXd y) const {
  Dataset out(space_, blocks_, std::move(y), names_);
  out.centering_ = centering_;
  return out;
}

Dataset prepare(const Dataset& raw) {
  if (raw.n() < 2) throw InvalidArgument("prepare needs n >= 2");
  Dataset out = raw;
  const double n = static_cast<double>(raw.n());
  for (std::size_t j = 0; j < out.blocks_.size(); ++j) {
    Eigen::MatrixXd& X = out.blocks_[j];
    const Eigen::RowVectorXd mean = X.colwise().sum() / n;
    X.rowwise() -= mean;
    out.centering_.block_means[j] += mean.transpose();
  }
  const double ybar = out.y_.sum() / n;
  out.y_.array() -= ybar;
  out.centering_.response_mean += ybar;
  out.centering_.centered = true;
  return out;
}

void require_conforming(const Coefficient& beta, const Dataset& data) {
  if (!same_space(beta.space(), data.space())) throw SpecMismatch("coefficient does not conform to the dataset space");
}

}  // namespace mflm
