// Shared test utilities: deterministic RNG draws and small dense oracles.
#pragma once

#include <random>

#include "anisotikh/aniso.hpp"
#include "anisotikh/operators.hpp"
#include "anisotikh/types.hpp"

namespace anisotikh::testing {

inline Vector random_vector(std::mt19937_64& rng, Index n, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline OrientationField random_theta(std::mt19937_64& rng, const Grid& grid) {
  return {grid, random_vector(rng, grid.n(), -kHalfPi, kHalfPi)};
}

/// Dense 2x2 directional-weight block A(theta) = sx p p^T + sz q q^T.
inline Eigen::Matrix2d weight_block(double theta, const AnisoWeights& w) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d a;
  a(0, 0) = w.sigma_x * c * c + w.sigma_z * s * s;
  a(0, 1) = (w.sigma_x - w.sigma_z) * c * s;
  a(1, 0) = a(0, 1);
  a(1, 1) = w.sigma_x * s * s + w.sigma_z * c * c;
  return a;
}

/// Dense regularizer Gram D^T W(theta) D assembled from a dense gradient.
inline Matrix dense_gram(const Matrix& dense_grad, const OrientationField& theta,
                         const AnisoWeights& w) {
  const Index n = theta.grid.n();
  Matrix wmat = Matrix::Zero(2 * n, 2 * n);
  for (Index i = 0; i < n; ++i) {
    const Eigen::Matrix2d a = weight_block(theta.theta[i], w);
    wmat(i, i) = a(0, 0);
    wmat(i, n + i) = a(0, 1);
    wmat(n + i, i) = a(1, 0);
    wmat(n + i, n + i) = a(1, 1);
  }
  return dense_grad.transpose() * wmat * dense_grad;
}

/// Relative distance with a floor for near-zero references.
inline double rel_diff(double a, double b, double floor_ = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

inline double rel_diff(const Vector& a, const Vector& b, double floor_ = 1e-12) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor_});
}

}  // namespace anisotikh::testing
