/**
 * @file upper.hpp
 * @brief The upper-level objective U(m*(gamma), gamma) and its total gradient,
 *        computed with one lower solve plus one adjoint-state solve.
 *
 * U = 1/2 sqrt((||G m* - d||^2 - eps^2)^2 + delta^2)
 *   + alpha/2 * sum_i ||R(theta_i) (grad~ m*)_i||^2_Sigma
 *   + beta/2  * ||grad theta||^2
 *
 * where grad~ is the smoothed gradient of the orientation term (module
 * smoothgrad) and the theta-smoothness term uses the plain finite-difference
 * gradient. The lower-level regularizer always uses the finite-difference
 * gradient, so the adjoint solve runs against the finite-difference Gram.
 */

#pragma once

#include "anisotikh/lower.hpp"
#include "anisotikh/smoothgrad.hpp"
#include "anisotikh/types.hpp"

namespace anisotikh {

/// 1/2 * ((sq_residual - eps2)^2 + delta^2)^{1/2}, the smoothed discrepancy.
double smoothed_discrepancy(double sq_residual, double eps2, double delta);

/// One evaluation of the upper objective; gradient is empty unless requested.
struct UpperEval {
  double value = 0.0;
  Vector gradient;  // length N+1 when computed
  ModelImage m_star;
  double sq_discrepancy = 0.0;
  double term_discrepancy = 0.0;
  double term_orientation = 0.0;
  double term_smoothness = 0.0;
  double dxprime_norm = 0.0;  ///< ||<x'(theta_i), (grad~ m*)_i>||_2 over pixels
  double dzprime_norm = 0.0;
  Index lower_iterations = 0;
};

/// Binds the forward operator, data and parameters of one bilevel problem.
/// Immutable after construction; evaluations at distinct gamma may run
/// concurrently.
class UpperProblem {
 public:
  UpperProblem(const LinearOperator& forward, DataVector data, Grid grid,
               AnisoWeights weights, UpperParams params,
               CgOptions lower_opts = {},
               GradientMode orientation_mode = GradientMode::hilbert_phase);

  /// Lower solve + objective value (no gradient).
  UpperEval value(const InversionVector& gamma,
                  const Vector* warm_m = nullptr) const;

  /// Lower solve + adjoint-state solve + full gradient of length N+1.
  UpperEval gradient(const InversionVector& gamma, const Vector* warm_m = nullptr,
                     const Vector* warm_adjoint = nullptr,
                     Vector* adjoint_out = nullptr) const;

  const Grid& grid() const { return grid_; }
  const LinearOperator& forward() const { return forward_; }
  const DataVector& data() const { return data_; }
  const AnisoWeights& weights() const { return weights_; }
  const UpperParams& params() const { return params_; }
  const CgOptions& lower_options() const { return lower_opts_; }
  const SmoothedGradient& orientation_gradient() const { return sgrad_; }

 private:
  UpperEval evaluate(const InversionVector& gamma, bool with_gradient,
                     const Vector* warm_m, const Vector* warm_adjoint,
                     Vector* adjoint_out) const;

  const LinearOperator& forward_;
  DataVector data_;
  Grid grid_;
  AnisoWeights weights_;
  UpperParams params_;
  CgOptions lower_opts_;
  GradientOperator fd_grad_;
  SmoothedGradient sgrad_;
  Vector rhs_;  // G^T d, fixed across evaluations
};

UpperEval upper_value(const InversionVector& gamma, const UpperProblem& prob);
UpperEval upper_gradient(const InversionVector& gamma, const UpperProblem& prob);

/// Callable adapter for the box-constrained optimizer: keeps warm starts for
/// the lower and adjoint solves across evaluations and caches the last
/// evaluation for history recording.
class BilevelObjective {
 public:
  explicit BilevelObjective(const UpperProblem& prob) : prob_(prob) {}

  /// Returns U(gamma); fills *grad when non-null.
  double operator()(const Vector& gamma, Vector* grad);

  const UpperEval& last() const { return last_; }

 private:
  const UpperProblem& prob_;
  Vector warm_m_, warm_adjoint_;
  UpperEval last_;
};

}  // namespace anisotikh
