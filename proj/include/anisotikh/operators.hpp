/**
 * @file operators.hpp
 * @brief Abstract linear operators, the bidiagonal discrete gradient, and the
 *        forward maps: identity (denoising), Gaussian blur, straight-ray
 *        tomography, and the sparse Dix causal-integration operator.
 */

#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <vector>

#include "anisotikh/types.hpp"

namespace anisotikh {

/// A linear map R^in_dim -> R^out_dim with an exact adjoint.
/// Operators are immutable after construction; apply/apply_adjoint are
/// re-entrant and may be called concurrently.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index in_dim() const = 0;
  virtual Index out_dim() const = 0;
  virtual void apply(ConstVectorRef x, VectorRef y) const = 0;
  virtual void apply_adjoint(ConstVectorRef y, VectorRef x) const = 0;

  Vector apply(const Vector& x) const {
    check_in(x.size());
    Vector y(out_dim());
    apply(x, y);
    return y;
  }
  Vector apply_adjoint(const Vector& y) const {
    check_out(y.size());
    Vector x(in_dim());
    apply_adjoint(y, x);
    return x;
  }

 protected:
  void check_in(Index n) const {
    if (n != in_dim())
      throw DimensionError("operator apply: expected input length " +
                           std::to_string(in_dim()) + ", got " + std::to_string(n));
  }
  void check_out(Index n) const {
    if (n != out_dim())
      throw DimensionError("operator adjoint: expected input length " +
                           std::to_string(out_dim()) + ", got " + std::to_string(n));
  }
};

/// Assemble the dense matrix of a small operator by applying it to basis vectors.
Matrix dense_matrix(const LinearOperator& op);

/// The scaled discrete gradient [grad_x; grad_z] with Kronecker structure
/// grad_x = D_x (x) I, grad_z = I (x) D_z, each D_y bidiagonal with 1 on the
/// diagonal, -1 on the first superdiagonal, and a final zero row. Output is
/// ordered as the x-block (length N) followed by the z-block (length N).
class GradientOperator : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  explicit GradientOperator(Grid grid) : grid_(grid) {}

  Index in_dim() const override { return grid_.n(); }
  Index out_dim() const override { return 2 * grid_.n(); }
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;

  const Grid& grid() const { return grid_; }

  /// (grad_x m)_i without forming the full gradient: m_i - m_{i+n_z}, zero in
  /// the last column.
  double dx_at(ConstVectorRef m, Index i) const {
    return grid_.col(i) + 1 < grid_.n_x ? m[i] - m[i + grid_.n_z] : 0.0;
  }
  /// (grad_z m)_i: m_i - m_{i+1}, zero in the last row.
  double dz_at(ConstVectorRef m, Index i) const {
    return grid_.row(i) + 1 < grid_.n_z ? m[i] - m[i + 1] : 0.0;
  }

 private:
  Grid grid_;
};

GradientOperator make_gradient(const Grid& grid);

/// G = I, the denoising forward map.
class IdentityOperator : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  explicit IdentityOperator(Grid grid) : n_(grid.n()) {}
  Index in_dim() const override { return n_; }
  Index out_dim() const override { return n_; }
  void apply(ConstVectorRef x, VectorRef y) const override { y = x; }
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override { x = y; }

 private:
  Index n_;
};

IdentityOperator make_identity(const Grid& grid);

/// Spatially invariant Gaussian blur with zero boundary conditions. The kernel
/// is separable, truncated at +-4*psf_std per axis and renormalized to unit sum.
class GaussianBlurOperator : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  GaussianBlurOperator(Grid grid, double psf_std);

  Index in_dim() const override { return grid_.n(); }
  Index out_dim() const override { return grid_.n(); }
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;

  const Vector& kernel1d() const { return kernel_; }

 private:
  void convolve(ConstVectorRef x, VectorRef y, bool flipped) const;

  Grid grid_;
  Vector kernel_;  // odd length 2r+1, unit sum
};

GaussianBlurOperator make_gaussian_blur(const Grid& grid, double psf_std);

/// Straight-ray transmission tomography. Sources sit equally spaced on the
/// right boundary, receivers equally spaced along the left and top boundaries;
/// row (s, r) holds the exact intersection lengths of ray s->r with each unit
/// grid cell (Siddon-style traversal). Rows are ordered s*n_receivers + r.
class TomoOperator : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  TomoOperator(Grid grid, int n_sources, int n_receivers);

  Index in_dim() const override { return grid_.n(); }
  Index out_dim() const override { return rows_.rows(); }
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;

  int n_sources() const { return n_sources_; }
  int n_receivers() const { return n_receivers_; }
  /// Endpoints of ray (source s, receiver r) as (x, z) pairs.
  std::pair<Eigen::Vector2d, Eigen::Vector2d> ray_endpoints(int s, int r) const;

 private:
  Grid grid_;
  int n_sources_ = 0;
  int n_receivers_ = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> rows_;
};

TomoOperator make_tomo(const Grid& grid, int n_sources, int n_receivers);

/// Sparse Dix forward map G = (S (x) T): per-column causal integration
/// (T lower-triangular ones) composed with selection of a subset of columns
/// at approximately equispaced lateral positions.
class DixOperator : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  DixOperator(Grid grid, double keep_fraction,
              std::optional<std::uint64_t> seed = std::nullopt);

  Index in_dim() const override { return grid_.n(); }
  Index out_dim() const override {
    return grid_.n_z * static_cast<Index>(kept_columns_.size());
  }
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;

  const std::vector<Index>& kept_columns() const { return kept_columns_; }

 private:
  Grid grid_;
  std::vector<Index> kept_columns_;
};

DixOperator make_dix(const Grid& grid, double keep_fraction,
                     std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace anisotikh
