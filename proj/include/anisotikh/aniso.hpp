/**
 * @file aniso.hpp
 * @brief Rotation matrices, the per-pixel anisotropic penalty, the matrix-free
 *        regularizer Gram operator M(theta) and its analytic theta-derivatives.
 *
 * The per-pixel penalty is || R(theta_i) g_i ||^2_Sigma = sigma_x <p,g>^2 +
 * sigma_z <q,g>^2 with p = x'(theta) = [cos, sin], q = z'(theta) = [-sin, cos]
 * (weights enter linearly, the y^T Sigma y convention). M(theta) applied to v
 * is grad^T W(theta) grad v with W the block-diagonal field of 2x2 matrices
 * A(theta_i) = sigma_x p p^T + sigma_z q q^T.
 */

#pragma once

#include "anisotikh/operators.hpp"
#include "anisotikh/types.hpp"

namespace anisotikh {

/// R(theta) = [[cos, sin], [-sin, cos]]; rows are x'(theta) and z'(theta).
Eigen::Matrix2d rotation(double theta);

/// Entrywise derivative of rotation(theta); equals rotation(theta + pi/2).
Eigen::Matrix2d rotation_derivative(double theta);

/// sigma_x <p,g>^2 + sigma_z <q,g>^2 for a single gradient 2-vector g.
double local_penalty(const Eigen::Vector2d& g, double theta, const AnisoWeights& w);

/// Sum of local penalties over all pixels, with the gradient supplied by any
/// two-block operator (plain finite differences or a smoothed gradient).
double total_penalty(const ModelImage& m, const OrientationField& theta,
                     const AnisoWeights& w, const LinearOperator& grad);

/// d/dtheta_i of u^T M(theta) v given the precomputed gradient 2-vectors of u
/// and v at pixel i. Closed form: dA/dtheta = (sigma_x - sigma_z)(p q^T + q p^T).
inline double gram_theta_directional_local(double theta, const AnisoWeights& w,
                                           const Eigen::Vector2d& gu,
                                           const Eigen::Vector2d& gv) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double pu = c * gu.x() + s * gu.y(), qu = -s * gu.x() + c * gu.y();
  const double pv = c * gv.x() + s * gv.y(), qv = -s * gv.x() + c * gv.y();
  return (w.sigma_x - w.sigma_z) * (pu * qv + qu * pv);
}

/// d/dtheta_i of u^T M(theta) v for the finite-difference Gram; touches only
/// the local stencil entries of u and v (O(1) per pixel).
double gram_theta_directional(const OrientationField& theta, const AnisoWeights& w,
                              Index i, const Vector& u, const Vector& v);

/// The symmetric PSD Gram operator M(theta) = D^T W(theta) D for a two-block
/// gradient operator D, applied matrix-free. Acts as a LinearOperator N -> N.
class AnisoGram : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  AnisoGram(const LinearOperator& grad, OrientationField theta, AnisoWeights w);

  Index in_dim() const override { return theta_.grid.n(); }
  Index out_dim() const override { return theta_.grid.n(); }
  void apply(ConstVectorRef v, VectorRef out) const override;
  void apply_adjoint(ConstVectorRef v, VectorRef out) const override {
    apply(v, out);  // symmetric
  }

  /// Rotate-and-scale a stacked gradient field in place: t = W(theta) g.
  void weight_field(ConstVectorRef g, VectorRef t) const;

  const OrientationField& theta() const { return theta_; }
  const AnisoWeights& weights() const { return w_; }

 private:
  const LinearOperator& grad_;
  OrientationField theta_;
  AnisoWeights w_;
};

/// Convenience wrapper for the common finite-difference case.
Vector gram_apply(const OrientationField& theta, const AnisoWeights& w,
                  const Vector& v);

}  // namespace anisotikh
