#include "anisotikh/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <utility>

namespace anisotikh {
namespace {

Vector clamp_box(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

struct CurvaturePair {
  Vector s, y;
  double rho;
};

// Two-loop recursion: H * q with H assembled from the stored pairs, seeded
// with gamma0 * I where gamma0 = s'y / y'y of the newest pair.
Vector two_loop(const std::deque<CurvaturePair>& pairs, Vector q) {
  std::vector<double> a(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    a[k] = pairs[k].rho * pairs[k].s.dot(q);
    q -= a[k] * pairs[k].y;
  }
  if (!pairs.empty()) {
    const CurvaturePair& newest = pairs.back();
    q *= newest.s.dot(newest.y) / newest.y.squaredNorm();
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double b = pairs[k].rho * pairs[k].y.dot(q);
    q += (a[k] - b) * pairs[k].s;
  }
  return q;
}

void validate(const BoxQnOptions& o) {
  if (o.memory < 1) throw ParameterError("BoxQnOptions: memory must be >= 1");
  if (o.max_outer_iterations < 1)
    throw ParameterError("BoxQnOptions: max_outer_iterations must be >= 1");
  if (!(o.pg_tolerance > 0.0))
    throw ParameterError("BoxQnOptions: pg_tolerance must be > 0");
  if (!(o.f_rel_tolerance > 0.0))
    throw ParameterError("BoxQnOptions: f_rel_tolerance must be > 0");
  if (!(o.sufficient_decrease > 0.0) || o.sufficient_decrease >= 1.0)
    throw ParameterError("BoxQnOptions: sufficient_decrease must be in (0, 1)");
  if (!(o.curvature > o.sufficient_decrease) || o.curvature >= 1.0)
    throw ParameterError("BoxQnOptions: curvature must be in (c1, 1)");
  if (o.max_line_search_trials < 1)
    throw ParameterError("BoxQnOptions: max_line_search_trials must be >= 1");
}

}  // namespace

const char* to_string(OptimStatus status) {
  switch (status) {
    case OptimStatus::converged_pg: return "converged_pg";
    case OptimStatus::converged_f: return "converged_f";
    case OptimStatus::max_iter: return "max_iter";
    case OptimStatus::linesearch_fail: return "linesearch_fail";
  }
  return "unknown";
}

OptimResult minimize_box(const Objective& objective, const Vector& start,
                         const Vector& lower, const Vector& upper,
                         const BoxQnOptions& opts,
                         const IterationObserver& observer) {
  validate(opts);
  const Index n = start.size();
  if (n < 1) throw ParameterError("minimize_box: empty variable");
  if (!objective) throw ParameterError("minimize_box: null objective");
  if (lower.size() != n || upper.size() != n)
    throw DimensionError("minimize_box: bound lengths do not match the variable");
  for (Index i = 0; i < n; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] <= upper[i]))
      throw ParameterError("minimize_box: invalid bounds at component " +
                           std::to_string(i));
    if (start[i] < lower[i] || start[i] > upper[i])
      throw ParameterError("minimize_box: start infeasible at component " +
                           std::to_string(i));
  }

  Vector x = start;
  Vector g(n);
  Index evals = 0;
  int iter = 0;

  auto eval_grad = [&](const Vector& at, Vector* grad) {
    const double v = objective(at, grad);
    ++evals;
    if (!std::isfinite(v) || (grad && !grad->allFinite()))
      throw SolverError("minimize_box: non-finite objective or gradient", at, v,
                        iter);
    return v;
  };

  double f = eval_grad(x, &g);

  OptimResult result;
  auto record = [&](double value) {
    HistoryRecord rec;
    rec.iteration = iter;
    rec.upper_value = value;
    if (observer) observer(rec, x);
    result.history.append(std::move(rec));
  };

  auto pg_inf = [&]() {
    return (x - clamp_box(x - g, lower, upper)).cwiseAbs().maxCoeff();
  };

  const double pg0 = pg_inf();
  const double pg_threshold = opts.pg_tolerance * pg0;
  double pg = pg0;
  record(f);

  // line search along dir: projected backtracking from t0, halving
  auto line_search = [&](const Vector& dir, double t0, Vector* x_acc,
                         double* f_acc) {
    double t = t0;
    for (int trial = 0; trial < opts.max_line_search_trials; ++trial, t *= 0.5) {
      Vector xt = clamp_box(x + t * dir, lower, upper);
      const Vector step = xt - x;
      if (step.cwiseAbs().maxCoeff() == 0.0) continue;
      const double gs = g.dot(step);
      if (gs >= 0.0) continue;
      double ft;
      try {
        ft = objective(xt, nullptr);
      } catch (const SolverError&) {
        // an inner solve may legitimately fail at an aggressive trial point;
        // treat the point as unacceptable and keep backtracking
        ++evals;
        continue;
      }
      ++evals;
      if (!std::isfinite(ft))
        throw SolverError("minimize_box: non-finite objective in line search",
                          xt, ft, iter);
      if (ft <= f + opts.sufficient_decrease * gs) {
        *x_acc = std::move(xt);
        *f_acc = ft;
        return true;
      }
    }
    return false;
  };

  std::deque<CurvaturePair> pairs;
  OptimStatus status = OptimStatus::max_iter;
  bool done = pg0 == 0.0;
  if (done) status = OptimStatus::converged_pg;

  while (!done && iter < opts.max_outer_iterations) {
    // freeze components sitting at a bound with the gradient pushing outward
    auto active = [&](Index i) {
      return (x[i] <= lower[i] && g[i] > 0.0) ||
             (x[i] >= upper[i] && g[i] < 0.0);
    };
    Vector g_work = g;
    for (Index i = 0; i < n; ++i)
      if (active(i)) g_work[i] = 0.0;
    Vector d = -two_loop(pairs, g_work);
    for (Index i = 0; i < n; ++i)
      if (active(i)) d[i] = -g[i];
    bool steepest = false;
    if (!d.allFinite() || g.dot(d) >= 0.0) {
      d = -g;
      steepest = true;
    }

    const double scale =
        iter == 0 ? std::min(1.0, 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff()))
                  : 1.0;
    Vector x_new;
    double f_new = 0.0;
    bool accepted = line_search(d, scale, &x_new, &f_new);
    if (!accepted && !steepest)
      accepted = line_search(
          -g, std::min(1.0, 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff())),
          &x_new, &f_new);
    if (!accepted) {
      status = OptimStatus::linesearch_fail;
      break;
    }

    Vector g_new(n);
    double f_refreshed = 0.0;
    bool oracle_ok = true;
    try {
      f_refreshed = objective(x_new, &g_new);
      ++evals;
    } catch (const SolverError&) {
      oracle_ok = false;
      ++evals;
    }
    if (!oracle_ok) {
      // the accepted point already passed the sufficient-decrease test; if
      // the gradient oracle breaks down there, keep it and stop cleanly
      x = std::move(x_new);
      f = f_new;
      ++iter;
      record(f);
      status = OptimStatus::linesearch_fail;
      break;
    }
    if (!std::isfinite(f_refreshed) || !g_new.allFinite())
      throw SolverError("minimize_box: non-finite objective or gradient", x_new,
                        f_refreshed, iter);

    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
    }

    const double f_prev = f;
    x = std::move(x_new);
    g = std::move(g_new);
    f = std::isfinite(f_refreshed) ? f_refreshed : f_new;
    ++iter;
    record(f);

    pg = pg_inf();
    if (pg <= pg_threshold) {
      status = OptimStatus::converged_pg;
      done = true;
    } else if (std::abs(f_prev - f) <=
               opts.f_rel_tolerance *
                   std::max({std::abs(f_prev), std::abs(f), 1.0})) {
      status = OptimStatus::converged_f;
      done = true;
    }
  }

  result.gamma_final = std::move(x);
  result.value_final = f;
  result.status = status;
  result.iterations = iter;
  result.evaluations = evals;
  result.pg_norm = pg;
  return result;
}

}  // namespace anisotikh
