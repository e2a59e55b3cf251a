#include "anisotikh/lower.hpp"

namespace anisotikh {

void LowerHessian::apply(ConstVectorRef v, VectorRef out) const {
  check_in(v.size());
  Vector gv(forward_.out_dim());
  forward_.apply(v, gv);
  forward_.apply_adjoint(gv, out);
  if (mu_ > 0.0) {
    Vector mv(in_dim());
    gram_.apply(v, mv);
    out += mu_ * mv;
  }
}

CgResult cg_solve(const LinearOperator& hessian, const Vector& rhs,
                  const CgOptions& opts,
                  const std::function<void(Index, const Vector&)>& observer) {
  const Index n = rhs.size();
  if (hessian.in_dim() != n || hessian.out_dim() != n)
    throw DimensionError("cg_solve: operator/rhs dimensions mismatch");
  const Index max_iter = opts.max_iterations > 0 ? opts.max_iterations : 10 * n;
  const double rhs_norm = rhs.norm();
  const double target = opts.rel_tolerance * rhs_norm;

  Vector x = opts.warm_start && opts.warm_start->size() == n ? *opts.warm_start
                                                             : Vector::Zero(n);
  Vector hx(n);
  hessian.apply(x, hx);
  Vector r = rhs - hx;
  if (rhs_norm == 0.0) return {Vector::Zero(n), 0, 0.0};

  Vector p = r;
  Vector hp(n);
  double rr = r.squaredNorm();
  if (observer) observer(0, x);

  Index it = 0;
  while (std::sqrt(rr) > target && it < max_iter) {
    hessian.apply(p, hp);
    const double php = p.dot(hp);
    if (!std::isfinite(php) || php <= 0.0) {
      // php == 0 with a nonzero residual means a genuine breakdown; tiny
      // negative values signal loss of positive definiteness
      if (std::sqrt(rr) <= target) break;
      throw SolverError("cg_solve: breakdown (non-positive curvature)", x,
                        std::sqrt(rr), static_cast<int>(it));
    }
    const double alpha = rr / php;
    x += alpha * p;
    r -= alpha * hp;
    const double rr_new = r.squaredNorm();
    if (!std::isfinite(rr_new))
      throw SolverError("cg_solve: NaN breakdown", x, std::sqrt(rr),
                        static_cast<int>(it));
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++it;
    if (observer) observer(it, x);
  }

  const double res = std::sqrt(rr);
  if (res > target)
    throw SolverError("cg_solve: no convergence after " + std::to_string(it) +
                          " iterations (residual " + std::to_string(res) +
                          ", target " + std::to_string(target) + ")",
                      x, res, static_cast<int>(it));
  return {std::move(x), it, res};
}

CgResult lower_solve(const LinearOperator& forward, const DataVector& d,
                     const OrientationField& theta, double mu,
                     const AnisoWeights& w, const CgOptions& opts) {
  if (forward.out_dim() != d.size())
    throw DimensionError("lower_solve: data length does not match operator");
  GradientOperator grad(theta.grid);
  AnisoGram gram(grad, theta, w);
  LowerHessian hessian(forward, gram, mu);
  const Vector rhs = forward.apply_adjoint(d.values);
  return cg_solve(hessian, rhs, opts);
}

CgResult hessian_solve(const LowerHessian& hessian, const Vector& rhs,
                       const CgOptions& opts) {
  return cg_solve(hessian, rhs, opts);
}

Vector lower_solve_dense(const LinearOperator& forward, const DataVector& d,
                         const OrientationField& theta, double mu,
                         const AnisoWeights& w) {
  if (forward.out_dim() != d.size())
    throw DimensionError("lower_solve_dense: data length does not match operator");
  GradientOperator grad(theta.grid);
  AnisoGram gram(grad, theta, w);
  const Matrix g = dense_matrix(forward);
  const Matrix m = dense_matrix(gram);
  const Matrix h = g.transpose() * g + mu * m;
  return Eigen::LDLT<Matrix>(h).solve(g.transpose() * d.values);
}

}  // namespace anisotikh
