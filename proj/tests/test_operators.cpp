#include <doctest.h>

#include <random>

#include "anisotikh/operators.hpp"
#include "helpers.hpp"

using namespace anisotikh;
using namespace anisotikh::testing;

namespace {

// Bidiagonal one-sided difference with a trailing zero row, as used on both
// axes of the gradient.
Matrix bidiagonal(Index n) {
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -1.0;
  }
  return d;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void check_adjoint(const LinearOperator& op, std::mt19937_64& rng, int pairs,
                   double tol) {
  for (int k = 0; k < pairs; ++k) {
    const Vector x = random_vector(rng, op.in_dim());
    const Vector y = random_vector(rng, op.out_dim());
    const double lhs = op.apply(x).dot(y);
    const double rhs = x.dot(op.apply_adjoint(y));
    CHECK(rel_diff(lhs, rhs) <= tol);
  }
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("gradient matches the Kronecker construction") {
  for (auto [nx, nz] : {std::pair<Index, Index>{4, 3}, {5, 5}, {3, 7}}) {
    Grid g(nx, nz);
    GradientOperator grad(g);
    const Matrix dx = kron(bidiagonal(nx), Matrix::Identity(nz, nz));
    const Matrix dz = kron(Matrix::Identity(nx, nx), bidiagonal(nz));
    Matrix expected(2 * g.n(), g.n());
    expected.topRows(g.n()) = dx;
    expected.bottomRows(g.n()) = dz;
    const Matrix got = dense_matrix(grad);
    CHECK((got - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gradient pointwise accessors agree with the full apply") {
  Grid g(6, 4);
  std::mt19937_64 rng(11);
  const Vector m = random_vector(rng, g.n());
  GradientOperator grad(g);
  const Vector full = grad.apply(m);
  for (Index i = 0; i < g.n(); ++i) {
    CHECK(grad.dx_at(m, i) == full[i]);
    CHECK(grad.dz_at(m, i) == full[g.n() + i]);
  }
}

TEST_CASE("gradient annihilates constants") {
  Grid g(8, 5);
  GradientOperator grad(g);
  CHECK(grad.apply(Vector::Constant(g.n(), 3.7)).norm() == 0.0);
}

TEST_CASE("identity operator is the identity") {
  Grid g(4, 4);
  IdentityOperator id = make_identity(g);
  std::mt19937_64 rng(5);
  const Vector x = random_vector(rng, g.n());
  CHECK((id.apply(x) - x).norm() == 0.0);
  CHECK((id.apply_adjoint(x) - x).norm() == 0.0);
}

TEST_CASE("blur kernel has unit sum and even symmetry") {
  Grid g(16, 16);
  GaussianBlurOperator blur(g, 2.0);
  const Vector& k = blur.kernel1d();
  REQUIRE(k.size() % 2 == 1);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (Index i = 0; i < k.size() / 2; ++i)
    CHECK(k[i] == doctest::Approx(k[k.size() - 1 - i]).epsilon(1e-14));
  CHECK(k.maxCoeff() == k[k.size() / 2]);  // peak at the center
}

TEST_CASE("blur preserves a constant away from the boundary") {
  Grid g(32, 32);
  GaussianBlurOperator blur(g, 1.5);
  const Vector y = blur.apply(Vector::Ones(g.n()));
  // radius is ceil(4 sigma) = 6, so pixel (16,16) sees the full stencil
  CHECK(y[g.index(16, 16)] == doctest::Approx(1.0).epsilon(1e-12));
  // a corner pixel loses mass to the zero boundary
  CHECK(y[g.index(0, 0)] < 0.5);
}

TEST_CASE("blur operator is symmetric") {
  Grid g(9, 7);
  GaussianBlurOperator blur(g, 1.2);
  const Matrix a = dense_matrix(blur);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("tomo rows sum to the chord length of each ray") {
  Grid g(8, 8);
  TomoOperator tomo(g, 4, 6);
  REQUIRE(tomo.out_dim() == 24);
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < 6; ++r) {
      Vector e = Vector::Zero(tomo.out_dim());
      const Index row = static_cast<Index>(s) * 6 + r;
      e[row] = 1.0;
      const double weight_sum = tomo.apply_adjoint(e).sum();
      const auto [a, b] = tomo.ray_endpoints(s, r);
      CHECK(weight_sum == doctest::Approx((a - b).norm()).epsilon(1e-10));
    }
}

TEST_CASE("tomo weights are nonnegative and the row count is sources x receivers") {
  Grid g(7, 5);
  TomoOperator tomo = make_tomo(g, 3, 5);
  CHECK(tomo.out_dim() == 15);
  for (Index r = 0; r < tomo.out_dim(); ++r) {
    Vector e = Vector::Zero(tomo.out_dim());
    e[r] = 1.0;
    CHECK(tomo.apply_adjoint(e).minCoeff() >= 0.0);
  }
}

TEST_CASE("tomo integrates a constant slowness exactly") {
  Grid g(10, 10);
  TomoOperator tomo(g, 5, 7);
  const Vector y = tomo.apply(Vector::Constant(g.n(), 0.3));
  Index row = 0;
  for (int s = 0; s < 5; ++s)
    for (int r = 0; r < 7; ++r, ++row) {
      const auto [a, b] = tomo.ray_endpoints(s, r);
      CHECK(y[row] == doctest::Approx(0.3 * (a - b).norm()).epsilon(1e-10));
    }
}

TEST_CASE("dix applies causal column sums on kept columns") {
  Grid g(10, 6);
  DixOperator dix(g, 0.3);
  const auto& kept = dix.kept_columns();
  REQUIRE(!kept.empty());
  CHECK(kept.size() == 3);  // 30% of 10 columns
  std::mt19937_64 rng(23);
  const Vector m = random_vector(rng, g.n());
  const Vector y = dix.apply(m);
  REQUIRE(y.size() == static_cast<Index>(kept.size()) * g.n_z);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    double run = 0.0;
    for (Index r = 0; r < g.n_z; ++r) {
      run += m[g.index(r, kept[k])];
      CHECK(y[static_cast<Index>(k) * g.n_z + r] == doctest::Approx(run).epsilon(1e-13));
    }
  }
}

TEST_CASE("dix kept columns are sorted, distinct and within range") {
  Grid g(50, 8);
  DixOperator dix(g, 0.06);
  const auto& kept = dix.kept_columns();
  CHECK(kept.size() == 3);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    CHECK(kept[k] >= 0);
    CHECK(kept[k] < g.n_x);
    if (k > 0) CHECK(kept[k] > kept[k - 1]);
  }
}

TEST_CASE("all forward operators pass the adjoint identity") {
  std::mt19937_64 rng(77);
  Grid g(8, 8);
  IdentityOperator id(g);
  GaussianBlurOperator blur(g, 1.5);
  TomoOperator tomo(g, 4, 6);
  DixOperator dix(g, 0.25);
  GradientOperator grad(g);
  for (const LinearOperator* op :
       {static_cast<const LinearOperator*>(&id), static_cast<const LinearOperator*>(&blur),
        static_cast<const LinearOperator*>(&tomo), static_cast<const LinearOperator*>(&dix),
        static_cast<const LinearOperator*>(&grad)}) {
    check_adjoint(*op, rng, 25, 1e-10);
  }
}

TEST_CASE("apply rejects wrong input lengths") {
  Grid g(4, 4);
  GaussianBlurOperator blur(g, 1.0);
  CHECK_THROWS_AS(blur.apply(Vector::Zero(5)), DimensionError);
  CHECK_THROWS_AS(blur.apply_adjoint(Vector::Zero(3)), DimensionError);
}

TEST_CASE("dense assembly reproduces apply on random vectors") {
  Grid g(6, 5);
  std::mt19937_64 rng(3);
  TomoOperator tomo(g, 3, 4);
  const Matrix a = dense_matrix(tomo);
  for (int k = 0; k < 10; ++k) {
    const Vector x = random_vector(rng, g.n());
    CHECK(rel_diff(a * x, tomo.apply(x)) <= 1e-13);
  }
}

}  // TEST_SUITE
