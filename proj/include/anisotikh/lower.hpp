/**
 * @file lower.hpp
 * @brief The lower-level Tikhonov solve via the normal equations
 *        (G^T G + mu M(theta)) m = G^T d, computed matrix-free by conjugate
 *        gradients, plus the Hessian-apply/solve primitives reused by the
 *        upper level and a dense direct solve for small instances.
 */

#pragma once

#include <functional>
#include <optional>

#include "anisotikh/aniso.hpp"
#include "anisotikh/operators.hpp"
#include "anisotikh/types.hpp"

namespace anisotikh {

struct CgOptions {
  double rel_tolerance = 1e-8;   ///< on ||H x - b|| / ||b||
  Index max_iterations = 0;      ///< 0 means 10 * N
  std::optional<Vector> warm_start;

  CgOptions() = default;
  CgOptions(double tol, Index maxit) : rel_tolerance(tol), max_iterations(maxit) {
    if (!(tol > 0.0) || tol >= 1.0)
      throw ParameterError("CgOptions: rel_tolerance must be in (0, 1)");
    if (maxit < 0) throw ParameterError("CgOptions: max_iterations must be >= 0");
  }
};

struct CgResult {
  Vector x;
  Index iterations = 0;
  double residual = 0.0;  ///< final ||H x - b||
};

/// The lower-level Hessian H(gamma) v = G^T G v + mu M(theta) v, symmetric and
/// positive definite whenever null(G) and null(D(theta)) intersect trivially.
class LowerHessian : public LinearOperator {
 public:
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  LowerHessian(const LinearOperator& forward, const AnisoGram& gram, double mu)
      : forward_(forward), gram_(gram), mu_(mu) {
    if (!(mu >= 0.0)) throw ParameterError("LowerHessian: mu must be >= 0");
    if (forward.in_dim() != gram.in_dim())
      throw DimensionError("LowerHessian: operator dimensions mismatch");
  }

  Index in_dim() const override { return forward_.in_dim(); }
  Index out_dim() const override { return forward_.in_dim(); }
  void apply(ConstVectorRef v, VectorRef out) const override;
  void apply_adjoint(ConstVectorRef v, VectorRef out) const override {
    apply(v, out);  // symmetric
  }

  double mu() const { return mu_; }
  const AnisoGram& gram() const { return gram_; }

 private:
  const LinearOperator& forward_;
  const AnisoGram& gram_;
  double mu_;
};

/// Conjugate gradients on a symmetric positive (semi)definite operator.
/// Throws SolverError (carrying the last iterate and residual) when the
/// tolerance is not reached within the iteration budget, and on NaN breakdown.
/// The optional observer is invoked with every iterate (test instrumentation).
CgResult cg_solve(const LinearOperator& hessian, const Vector& rhs,
                  const CgOptions& opts,
                  const std::function<void(Index, const Vector&)>& observer = {});

/// Solve the anisotropic Tikhonov normal equations for m*(gamma).
CgResult lower_solve(const LinearOperator& forward, const DataVector& d,
                     const OrientationField& theta, double mu,
                     const AnisoWeights& w, const CgOptions& opts = {});

/// Adjoint-state solve H w = rhs with the same CG machinery.
CgResult hessian_solve(const LowerHessian& hessian, const Vector& rhs,
                       const CgOptions& opts = {});

/// Dense direct-solve oracle (LDLT on the assembled Hessian); intended for
/// small instances (N <= 4096).
Vector lower_solve_dense(const LinearOperator& forward, const DataVector& d,
                         const OrientationField& theta, double mu,
                         const AnisoWeights& w);

}  // namespace anisotikh
