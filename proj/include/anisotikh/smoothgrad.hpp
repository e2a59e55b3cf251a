/**
 * @file smoothgrad.hpp
 * @brief Smoothed directional-derivative operators for the upper-level
 *        objective: either plain centered differences or the phase-only
 *        Hilbert (Riesz) pair that applies a pure 90-degree phase shift with
 *        unit amplitude at every nonzero frequency.
 */

#pragma once

#include <complex>
#include <memory>
#include <utility>

#include "anisotikh/operators.hpp"
#include "anisotikh/types.hpp"

namespace anisotikh {

/// Continuous 2D Hilbert-transform kernel pair evaluated at (x, z):
/// h_x = -x / (2 pi (x^2+z^2)^{3/2}), h_z likewise in z. Zero at the origin
/// (odd symmetry).
std::pair<double, double> hilbert_kernel_value(double x, double z);

/// The centered-difference filter taps [h(-1), h(0), h(+1)] = [1/2, 0, -1/2];
/// first element horizontal (x), second vertical (z).
std::pair<Eigen::Vector3d, Eigen::Vector3d> fd_kernels();

enum class GradientMode { finite_difference, hilbert_phase };

/// A LinearOperator N -> 2N producing [grad~_x m; grad~_z m].
///
/// hilbert_phase mode works in the frequency domain on a mirror-padded image
/// (padded size 2n-1 per dimension, so the frequency grid has no
/// self-conjugate bin besides DC) with the Riesz transfer pair
/// (-i w_x/|w|, -i w_z/|w|); the DC response is zero and the output is real.
/// finite_difference mode applies the stencils of fd_kernels() with zero
/// boundary values.
class SmoothedGradient : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  SmoothedGradient(Grid grid, GradientMode mode);
  ~SmoothedGradient() override;

  SmoothedGradient(const SmoothedGradient&) = delete;
  SmoothedGradient& operator=(const SmoothedGradient&) = delete;

  Index in_dim() const override { return grid_.n(); }
  Index out_dim() const override { return 2 * grid_.n(); }
  void apply(ConstVectorRef x, VectorRef y) const override;
  void apply_adjoint(ConstVectorRef y, VectorRef x) const override;

  GradientMode mode() const { return mode_; }
  const Grid& grid() const { return grid_; }

  Index padded_nx() const { return pnx_; }
  Index padded_nz() const { return pnz_; }
  /// Frequency-domain transfer values at padded-grid bin (kz, kx).
  std::complex<double> transfer_x(Index kz, Index kx) const {
    return {0.0, -wx_(kz, kx)};
  }
  std::complex<double> transfer_z(Index kz, Index kx) const {
    return {0.0, -wz_(kz, kx)};
  }

 private:
  struct FftPlans;

  void riesz_apply(ConstVectorRef x, VectorRef y) const;
  void riesz_adjoint(ConstVectorRef y, VectorRef x) const;
  void fd_apply(ConstVectorRef x, VectorRef y) const;
  void fd_adjoint(ConstVectorRef y, VectorRef x) const;

  Grid grid_;
  GradientMode mode_;
  Index pnx_ = 0, pnz_ = 0;
  Matrix wx_, wz_;  // omega / |omega| on the padded frequency grid
  std::unique_ptr<FftPlans> plans_;
};

}  // namespace anisotikh
