/**
 * @file optim.hpp
 * @brief Box-constrained limited-memory quasi-Newton minimizer: gradient
 *        projection for the active set plus an L-BFGS model on the free
 *        variables, with a projected backtracking line search.
 */

#pragma once

#include <functional>

#include "anisotikh/types.hpp"

namespace anisotikh {

/// Evaluation callback: returns f(x) and, when grad is non-null, fills *grad
/// with the gradient at x. grad == nullptr marks a value-only probe (line
/// search), which implementations may serve more cheaply.
using Objective = std::function<double(const Vector& x, Vector* grad)>;

/// Invoked once per recorded iterate (the start point and every accepted
/// step) with a record pre-filled with the iteration index and objective
/// value; the callee may fill the remaining fields before it is appended.
using IterationObserver =
    std::function<void(HistoryRecord& record, const Vector& x)>;

struct BoxQnOptions {
  int memory = 10;                    ///< stored curvature pairs
  int max_outer_iterations = 200;
  double pg_tolerance = 1e-6;         ///< on ||pg||_inf relative to the start
  double f_rel_tolerance = 1e-9;      ///< relative objective stagnation
  double sufficient_decrease = 1e-4;  ///< Armijo constant
  double curvature = 0.9;             ///< Wolfe curvature constant (see note)
  int max_line_search_trials = 25;    ///< halvings per line search
};

enum class OptimStatus { converged_pg, converged_f, max_iter, linesearch_fail };

const char* to_string(OptimStatus status);

struct OptimResult {
  Vector gamma_final;
  double value_final = 0.0;
  OptimStatus status = OptimStatus::max_iter;
  SolveHistory history;     ///< one record per accepted iterate, from 0
  Index iterations = 0;     ///< accepted steps
  Index evaluations = 0;    ///< callback invocations (value-only included)
  double pg_norm = 0.0;     ///< final projected-gradient infinity norm
};

/// Minimize objective over the box {lower <= x <= upper} (entries of the
/// bounds may be -inf/+inf) starting from a feasible point.
///
/// Every trial point is projected onto the box before evaluation, so all
/// iterates are feasible. Accepted steps satisfy the projected Armijo
/// sufficient-decrease test f(x_t) <= f(x) + c1 * g^T (x_t - x); the line
/// search is value-only backtracking, so the Wolfe curvature condition is not
/// enforced per trial. Positive definiteness of the limited-memory model is
/// guarded instead by rejecting pairs with s^T y <= 1e-12 ||s|| ||y||.
///
/// Termination: projected-gradient norm below pg_tolerance relative to the
/// start point, objective stagnation below f_rel_tolerance, the iteration
/// cap, or a failed line search (returns the best iterate, status
/// linesearch_fail). Throws ParameterError on an infeasible start or invalid
/// bounds and SolverError if the callback produces a non-finite value or
/// gradient at a feasible point.
OptimResult minimize_box(const Objective& objective, const Vector& start,
                         const Vector& lower, const Vector& upper,
                         const BoxQnOptions& opts = {},
                         const IterationObserver& observer = {});

}  // namespace anisotikh
