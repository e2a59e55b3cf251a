#include "anisotikh/upper.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace anisotikh {

double smoothed_discrepancy(double sq_residual, double eps2, double delta) {
  if (!(delta > 0.0))
    throw ParameterError("smoothed_discrepancy: delta must be > 0");
  const double diff = sq_residual - eps2;
  return 0.5 * std::sqrt(diff * diff + delta * delta);
}

UpperProblem::UpperProblem(const LinearOperator& forward, DataVector data,
                           Grid grid, AnisoWeights weights, UpperParams params,
                           CgOptions lower_opts, GradientMode orientation_mode)
    : forward_(forward),
      data_(std::move(data)),
      grid_(grid),
      weights_(weights),
      params_(params),
      lower_opts_(std::move(lower_opts)),
      fd_grad_(grid),
      sgrad_(grid, orientation_mode) {
  if (forward_.in_dim() != grid_.n())
    throw DimensionError("UpperProblem: forward operator does not act on grid");
  if (forward_.out_dim() != data_.size())
    throw DimensionError("UpperProblem: data length does not match operator");
  rhs_ = forward_.apply_adjoint(data_.values);
}

UpperEval UpperProblem::value(const InversionVector& gamma,
                              const Vector* warm_m) const {
  return evaluate(gamma, false, warm_m, nullptr, nullptr);
}

UpperEval UpperProblem::gradient(const InversionVector& gamma, const Vector* warm_m,
                                 const Vector* warm_adjoint,
                                 Vector* adjoint_out) const {
  return evaluate(gamma, true, warm_m, warm_adjoint, adjoint_out);
}

UpperEval UpperProblem::evaluate(const InversionVector& gamma, bool with_gradient,
                                 const Vector* warm_m, const Vector* warm_adjoint,
                                 Vector* adjoint_out) const {
  if (gamma.theta.grid != grid_)
    throw DimensionError("upper evaluation: gamma grid mismatch");
  const Index n = grid_.n();
  const double alpha = params_.alpha, beta = params_.beta;
  const double eps2 = params_.noise_bound * params_.noise_bound;

  AnisoGram gram(fd_grad_, gamma.theta, weights_);
  LowerHessian hessian(forward_, gram, gamma.mu);

  CgOptions opts = lower_opts_;
  if (warm_m && warm_m->size() == n) opts.warm_start = *warm_m;
  CgResult lower = cg_solve(hessian, rhs_, opts);

  UpperEval eval;
  eval.m_star = ModelImage(grid_, lower.x);
  eval.lower_iterations = lower.iterations;
  const Vector& m = eval.m_star.values;

  const Vector residual = forward_.apply(m) - data_.values;
  eval.sq_discrepancy = residual.squaredNorm();
  const double diff = eval.sq_discrepancy - eps2;
  const double root = std::sqrt(diff * diff + params_.delta * params_.delta);
  eval.term_discrepancy = 0.5 * root;

  // orientation term on the smoothed gradient
  const Vector gs = sgrad_.apply(m);
  double orient = 0.0, dx2 = 0.0, dz2 = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(gamma.theta.theta[i]);
    const double s = std::sin(gamma.theta.theta[i]);
    const double p = c * gs[i] + s * gs[n + i];
    const double q = -s * gs[i] + c * gs[n + i];
    orient += weights_.sigma_x * p * p + weights_.sigma_z * q * q;
    dx2 += p * p;
    dz2 += q * q;
  }
  eval.term_orientation = 0.5 * alpha * orient;
  eval.dxprime_norm = std::sqrt(dx2);
  eval.dzprime_norm = std::sqrt(dz2);

  const Vector gtheta = fd_grad_.apply(gamma.theta.theta);
  eval.term_smoothness = 0.5 * beta * gtheta.squaredNorm();

  eval.value = eval.term_discrepancy + eval.term_orientation + eval.term_smoothness;
  if (!with_gradient) return eval;

  // grad_m U = s G^T (G m - d) + alpha M~(theta) m, with the smoothed Gram M~
  const double sfac = diff / root;
  AnisoGram smoothed_gram(sgrad_, gamma.theta, weights_);
  Vector weighted(2 * n);
  smoothed_gram.weight_field(gs, weighted);
  Vector grad_m = sfac * forward_.apply_adjoint(residual);
  if (alpha != 0.0) grad_m += alpha * sgrad_.apply_adjoint(weighted);

  // adjoint state: H w = grad_m U (H uses the finite-difference Gram)
  CgOptions adj_opts = lower_opts_;
  if (warm_adjoint && warm_adjoint->size() == n) adj_opts.warm_start = *warm_adjoint;
  CgResult adjoint = cg_solve(hessian, grad_m, adj_opts);
  const Vector& w = adjoint.x;
  if (adjoint_out) *adjoint_out = w;

  const Vector gm = fd_grad_.apply(m);
  const Vector gw = fd_grad_.apply(w);
  const Vector lap_theta = fd_grad_.apply_adjoint(gtheta);

  eval.gradient.resize(n + 1);
  const double dsigma = weights_.sigma_x - weights_.sigma_z;
  double mu_component = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(gamma.theta.theta[i]);
    const double s = std::sin(gamma.theta.theta[i]);
    // smoothed-gradient stencils for the explicit theta term
    const double ps = c * gs[i] + s * gs[n + i];
    const double qs = -s * gs[i] + c * gs[n + i];
    const double direct = alpha * dsigma * ps * qs + beta * lap_theta[i];
    // finite-difference stencils for the implicit (adjoint) term
    const double pm = c * gm[i] + s * gm[n + i];
    const double qm = -s * gm[i] + c * gm[n + i];
    const double pw = c * gw[i] + s * gw[n + i];
    const double qw = -s * gw[i] + c * gw[n + i];
    eval.gradient[i] = direct - gamma.mu * dsigma * (pw * qm + qw * pm);
    // accumulate w^T M(theta) m for the mu component
    mu_component += weights_.sigma_x * pw * pm + weights_.sigma_z * qw * qm;
  }
  eval.gradient[n] = -mu_component;

  if (!eval.gradient.allFinite())
    throw SolverError("upper_gradient: non-finite gradient", eval.gradient,
                      std::numeric_limits<double>::quiet_NaN(),
                      static_cast<int>(lower.iterations));
  return eval;
}

UpperEval upper_value(const InversionVector& gamma, const UpperProblem& prob) {
  return prob.value(gamma);
}

UpperEval upper_gradient(const InversionVector& gamma, const UpperProblem& prob) {
  return prob.gradient(gamma);
}

double BilevelObjective::operator()(const Vector& gamma, Vector* grad) {
  const InversionVector gv = unpack_gamma(prob_.grid(), gamma);
  const Vector* warm_m = warm_m_.size() > 0 ? &warm_m_ : nullptr;
  if (grad) {
    Vector adjoint;
    last_ = prob_.gradient(gv, warm_m,
                           warm_adjoint_.size() > 0 ? &warm_adjoint_ : nullptr,
                           &adjoint);
    warm_adjoint_ = adjoint;
    *grad = last_.gradient;
  } else {
    last_ = prob_.value(gv, warm_m);
  }
  warm_m_ = last_.m_star.values;
  return last_.value;
}

}  // namespace anisotikh
