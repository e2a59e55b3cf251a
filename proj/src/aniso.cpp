#include "anisotikh/aniso.hpp"

namespace anisotikh {

Eigen::Matrix2d rotation(double theta) {
  if (!std::isfinite(theta)) throw ParameterError("rotation: non-finite angle");
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, s, -s, c;
  return r;
}

Eigen::Matrix2d rotation_derivative(double theta) {
  if (!std::isfinite(theta))
    throw ParameterError("rotation_derivative: non-finite angle");
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << -s, c, -c, -s;
  return r;
}

double local_penalty(const Eigen::Vector2d& g, double theta, const AnisoWeights& w) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double p = c * g.x() + s * g.y();   // <x'(theta), g>
  const double q = -s * g.x() + c * g.y();  // <z'(theta), g>
  return w.sigma_x * p * p + w.sigma_z * q * q;
}

double total_penalty(const ModelImage& m, const OrientationField& theta,
                     const AnisoWeights& w, const LinearOperator& grad) {
  const Index n = m.grid.n();
  if (theta.grid != m.grid)
    throw DimensionError("total_penalty: theta grid does not match image grid");
  if (grad.in_dim() != n || grad.out_dim() != 2 * n)
    throw DimensionError("total_penalty: gradient operator dimensions mismatch");
  const Vector g = grad.apply(m.values);
  double acc = 0.0;
  for (Index i = 0; i < n; ++i)
    acc += local_penalty({g[i], g[n + i]}, theta.theta[i], w);
  return acc;
}

double gram_theta_directional(const OrientationField& theta, const AnisoWeights& w,
                              Index i, const Vector& u, const Vector& v) {
  const Grid& grid = theta.grid;
  if (i < 0 || i >= grid.n())
    throw DimensionError("gram_theta_directional: pixel index out of range");
  if (u.size() != grid.n() || v.size() != grid.n())
    throw DimensionError("gram_theta_directional: vector length mismatch");
  GradientOperator grad(grid);
  const Eigen::Vector2d gu{grad.dx_at(u, i), grad.dz_at(u, i)};
  const Eigen::Vector2d gv{grad.dx_at(v, i), grad.dz_at(v, i)};
  return gram_theta_directional_local(theta.theta[i], w, gu, gv);
}

AnisoGram::AnisoGram(const LinearOperator& grad, OrientationField theta,
                     AnisoWeights w)
    : grad_(grad), theta_(std::move(theta)), w_(w) {
  if (grad_.in_dim() != theta_.grid.n() || grad_.out_dim() != 2 * theta_.grid.n())
    throw DimensionError("AnisoGram: gradient operator dimensions mismatch");
}

void AnisoGram::weight_field(ConstVectorRef g, VectorRef t) const {
  const Index n = theta_.grid.n();
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta_.theta[i]), s = std::sin(theta_.theta[i]);
    const double gx = g[i], gz = g[n + i];
    const double p = c * gx + s * gz;
    const double q = -s * gx + c * gz;
    // A(theta) g = sigma_x <p,g> p + sigma_z <q,g> q
    t[i] = w_.sigma_x * p * c - w_.sigma_z * q * s;
    t[n + i] = w_.sigma_x * p * s + w_.sigma_z * q * c;
  }
}

void AnisoGram::apply(ConstVectorRef v, VectorRef out) const {
  check_in(v.size());
  Vector g(2 * theta_.grid.n());
  grad_.apply(v, g);
  Vector t(2 * theta_.grid.n());
  weight_field(g, t);
  grad_.apply_adjoint(t, out);
}

Vector gram_apply(const OrientationField& theta, const AnisoWeights& w,
                  const Vector& v) {
  GradientOperator grad(theta.grid);
  AnisoGram gram(grad, theta, w);
  return gram.apply(v);
}

}  // namespace anisotikh
