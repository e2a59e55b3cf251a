#include <doctest.h>

#include <limits>
#include <random>

#include "anisotikh/optim.hpp"
#include "helpers.hpp"

using namespace anisotikh;
using namespace anisotikh::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Objective quadratic_around(const Vector& c) {
  return [c](const Vector& x, Vector* g) {
    if (g) *g = 2.0 * (x - c);
    return (x - c).squaredNorm();
  };
}

Objective rosenbrock() {
  return [](const Vector& x, Vector* g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (g) {
      (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*g)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("quadratic with interior center converges to the center") {
  std::mt19937_64 rng(81);
  const Index n = 6;
  const Vector c = random_vector(rng, n, -0.5, 0.5);
  const Vector lo = Vector::Constant(n, -1.0);
  const Vector hi = Vector::Constant(n, 1.0);
  const OptimResult res =
      minimize_box(quadratic_around(c), Vector::Zero(n), lo, hi);
  CHECK((res.gamma_final - c).norm() <= 1e-8);
  CHECK(res.iterations <= 30);
  CHECK((res.status == OptimStatus::converged_pg ||
         res.status == OptimStatus::converged_f));
}

TEST_CASE("quadratic with exterior center converges to the box projection") {
  std::mt19937_64 rng(82);
  const Index n = 5;
  Vector c(n);
  c << 3.0, -4.0, 0.25, 1.5, -0.75;
  const Vector lo = Vector::Constant(n, -1.0);
  const Vector hi = Vector::Constant(n, 1.0);
  const OptimResult res =
      minimize_box(quadratic_around(c), Vector::Zero(n), lo, hi);
  Vector want(n);
  want << 1.0, -1.0, 0.25, 1.0, -0.75;
  CHECK((res.gamma_final - want).norm() <= 1e-8);

  // KKT signs: at an active lower bound the gradient must be nonnegative, at
  // an active upper bound nonpositive, and near zero on free coordinates
  Vector g(n);
  quadratic_around(c)(res.gamma_final, &g);
  CHECK(g[0] <= 1e-8);   // at upper bound, pushes outward
  CHECK(g[1] >= -1e-8);  // at lower bound
  CHECK(std::abs(g[2]) <= 1e-7);
  CHECK(std::abs(g[4]) <= 1e-7);
}

TEST_CASE("rosenbrock in a box reaches the global minimum feasibly") {
  Vector x0(2), lo(2), hi(2);
  x0 << -1.2, 1.0;
  lo << -2.0, -2.0;
  hi << 2.0, 2.0;
  BoxQnOptions opts;
  opts.max_outer_iterations = 500;
  opts.pg_tolerance = 1e-10;
  opts.f_rel_tolerance = 1e-14;
  bool feasible = true;
  const OptimResult res = minimize_box(
      rosenbrock(), x0, lo, hi, opts, [&](HistoryRecord&, const Vector& x) {
        feasible = feasible && x[0] >= -2.0 && x[0] <= 2.0 && x[1] >= -2.0 &&
                   x[1] <= 2.0;
      });
  CHECK(res.value_final <= 1e-8);
  CHECK(std::abs(res.gamma_final[0] - 1.0) <= 1e-3);
  CHECK(std::abs(res.gamma_final[1] - 1.0) <= 1e-3);
  CHECK(feasible);
}

TEST_CASE("accepted objective values never increase") {
  Vector x0(2), lo(2), hi(2);
  x0 << -1.2, 1.0;
  lo << -2.0, -2.0;
  hi << 2.0, 2.0;
  const OptimResult res = minimize_box(rosenbrock(), x0, lo, hi);
  double prev = std::numeric_limits<double>::infinity();
  for (const HistoryRecord& r : res.history.records) {
    CHECK(r.upper_value <= prev + 1e-15);
    prev = r.upper_value;
  }
  CHECK(res.history.records.front().iteration == 0);
}

TEST_CASE("history indices strictly increase and match accepted steps") {
  std::mt19937_64 rng(83);
  const Vector c = random_vector(rng, 4, -0.2, 0.2);
  const OptimResult res =
      minimize_box(quadratic_around(c), Vector::Zero(4),
                   Vector::Constant(4, -1.0), Vector::Constant(4, 1.0));
  REQUIRE(!res.history.empty());
  CHECK(res.history.records.size() == static_cast<std::size_t>(res.iterations) + 1);
  for (std::size_t k = 1; k < res.history.records.size(); ++k)
    CHECK(res.history.records[k].iteration ==
          res.history.records[k - 1].iteration + 1);
}

TEST_CASE("zero gradient at the start converges immediately") {
  const Vector c = Vector::Zero(3);
  const OptimResult res =
      minimize_box(quadratic_around(c), Vector::Zero(3),
                   Vector::Constant(3, -1.0), Vector::Constant(3, 1.0));
  CHECK(res.status == OptimStatus::converged_pg);
  CHECK(res.iterations == 0);
}

TEST_CASE("infeasible start and malformed bounds are rejected") {
  const Objective f = quadratic_around(Vector::Zero(2));
  Vector lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
  CHECK_THROWS_AS(minimize_box(f, Vector::Constant(2, 2.0), lo, hi),
                  ParameterError);
  Vector bad_hi = hi;
  bad_hi[0] = -2.0;  // lower > upper
  CHECK_THROWS_AS(minimize_box(f, Vector::Zero(2), lo, bad_hi), ParameterError);
}

TEST_CASE("non-finite objective or gradient raises a solver error") {
  const Objective nan_f = [](const Vector& x, Vector*) {
    return x[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x.squaredNorm();
  };
  Vector x0(1), lo(1), hi(1);
  x0 << 0.8;
  lo << -1.0;
  hi << 1.0;
  CHECK_THROWS_AS(minimize_box(nan_f, x0, lo, hi), SolverError);

  const Objective nan_g = [](const Vector& x, Vector* g) {
    if (g) (*g)[0] = std::numeric_limits<double>::quiet_NaN();
    return x.squaredNorm();
  };
  CHECK_THROWS_AS(minimize_box(nan_g, x0, lo, hi), SolverError);
}

TEST_CASE("a rigged line search stops at the best iterate with the fail status") {
  // gradient always claims steep descent to the right, but the value only
  // rises: no Armijo step can succeed
  const Objective liar = [](const Vector& x, Vector* g) {
    if (g) (*g)[0] = -1.0;
    return x[0];
  };
  Vector x0(1), lo(1), hi(1);
  x0 << 0.0;
  lo << -5.0;
  hi << 5.0;
  const OptimResult res = minimize_box(liar, x0, lo, hi);
  CHECK(res.status == OptimStatus::linesearch_fail);
  CHECK(res.gamma_final[0] == 0.0);  // never moved
}

TEST_CASE("bounds at infinity behave as unconstrained") {
  std::mt19937_64 rng(84);
  const Vector c = random_vector(rng, 3, -2.0, 2.0);
  const OptimResult res = minimize_box(
      quadratic_around(c), Vector::Zero(3), Vector::Constant(3, -kInf),
      Vector::Constant(3, kInf));
  CHECK((res.gamma_final - c).norm() <= 1e-8);
}

TEST_CASE("stagnation tolerance triggers the converged_f status") {
  // flat valley: value identical after the first step
  const Objective plateau = [](const Vector& x, Vector* g) {
    const double v = std::max(0.0, x[0] - 1.0);
    if (g) (*g)[0] = x[0] > 1.0 ? 1.0 : 0.0;
    return v;
  };
  Vector x0(1), lo(1), hi(1);
  x0 << 3.0;
  lo << 0.0;
  hi << 5.0;
  const OptimResult res = minimize_box(plateau, x0, lo, hi);
  CHECK(res.value_final == 0.0);
}

}  // TEST_SUITE
