#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "anisotikh/smoothgrad.hpp"
#include "helpers.hpp"

using namespace anisotikh;
using namespace anisotikh::testing;

namespace {

// Direct O(q^2) DFT oracle of the phase-only directional pair: mirror-pad,
// transform, multiply by -i w / |w|, transform back, restrict. Everything is
// recomputed from first principles so the test shares no code with the
// implementation.
struct RieszOracle {
  Grid grid;
  Index pnx, pnz;

  explicit RieszOracle(Grid g) : grid(g), pnx(2 * g.n_x - 1), pnz(2 * g.n_z - 1) {}

  static Index mirror(Index j, Index n) { return j < n ? j : 2 * n - 2 - j; }

  static double freq(Index k, Index p) {
    const Index f = k <= (p - 1) / 2 ? k : k - p;
    return 2.0 * kPi * double(f) / double(p);
  }

  // returns [gx; gz] and reports the largest imaginary residue seen
  Vector apply(const Vector& x, double* max_imag = nullptr) const {
    using cd = std::complex<double>;
    const Index q = pnx * pnz;
    std::vector<cd> pad(q);
    for (Index c = 0; c < pnx; ++c)
      for (Index r = 0; r < pnz; ++r)
        pad[c * pnz + r] = x[grid.index(mirror(r, grid.n_z), mirror(c, grid.n_x))];

    // forward DFT, frequency bin (kz, kx)
    std::vector<cd> hat(q, cd(0, 0));
    for (Index kx = 0; kx < pnx; ++kx)
      for (Index kz = 0; kz < pnz; ++kz) {
        cd acc(0, 0);
        for (Index c = 0; c < pnx; ++c)
          for (Index r = 0; r < pnz; ++r) {
            const double ph = freq(kx, pnx) * double(c) + freq(kz, pnz) * double(r);
            acc += pad[c * pnz + r] * std::polar(1.0, -ph);
          }
        hat[kx * pnz + kz] = acc;
      }

    Vector out(2 * grid.n());
    double imag_peak = 0.0;
    for (int block = 0; block < 2; ++block) {
      for (Index c = 0; c < grid.n_x; ++c)
        for (Index r = 0; r < grid.n_z; ++r) {
          cd acc(0, 0);
          for (Index kx = 0; kx < pnx; ++kx)
            for (Index kz = 0; kz < pnz; ++kz) {
              const double ox = freq(kx, pnx), oz = freq(kz, pnz);
              const double rho = std::hypot(ox, oz);
              const double w = rho > 0.0 ? (block == 0 ? ox : oz) / rho : 0.0;
              const double ph = ox * double(c) + oz * double(r);
              acc += cd(0.0, -w) * hat[kx * pnz + kz] * std::polar(1.0, ph);
            }
          acc /= double(q);
          imag_peak = std::max(imag_peak, std::abs(acc.imag()));
          out[block * grid.n() + grid.index(r, c)] = acc.real();
        }
    }
    if (max_imag) *max_imag = imag_peak;
    return out;
  }
};

}  // namespace

TEST_SUITE("smoothgrad") {

TEST_CASE("hilbert kernel values match the closed form") {
  auto [hx, hz] = hilbert_kernel_value(1.0, 0.0);
  CHECK(hx == doctest::Approx(-1.0 / (2.0 * kPi)).epsilon(1e-14));
  CHECK(hz == 0.0);
  auto [ox, oz] = hilbert_kernel_value(0.0, 0.0);
  CHECK(ox == 0.0);
  CHECK(oz == 0.0);
  const double x = 0.7, z = -1.3;
  auto [gx, gz] = hilbert_kernel_value(x, z);
  const double r3 = std::pow(x * x + z * z, 1.5);
  CHECK(gx == doctest::Approx(-x / (2.0 * kPi * r3)).epsilon(1e-13));
  CHECK(gz == doctest::Approx(-z / (2.0 * kPi * r3)).epsilon(1e-13));
  // odd symmetry
  auto [mx, mz] = hilbert_kernel_value(-x, -z);
  CHECK(mx == doctest::Approx(-gx));
  CHECK(mz == doctest::Approx(-gz));
}

TEST_CASE("centered difference taps are [1/2, 0, -1/2]") {
  auto [hx, hz] = fd_kernels();
  CHECK(hx[0] == 0.5);
  CHECK(hx[1] == 0.0);
  CHECK(hx[2] == -0.5);
  CHECK(hz == hx);
}

TEST_CASE("finite difference mode applies the centered stencil") {
  Grid g(5, 4);
  SmoothedGradient sg(g, GradientMode::finite_difference);
  std::mt19937_64 rng(41);
  const Vector m = random_vector(rng, g.n());
  const Vector y = sg.apply(m);
  Matrix mm = unstack(g, m);
  for (Index c = 0; c < g.n_x; ++c)
    for (Index r = 0; r < g.n_z; ++r) {
      const double right = c + 1 < g.n_x ? mm(r, c + 1) : 0.0;
      const double left = c > 0 ? mm(r, c - 1) : 0.0;
      const double down = r + 1 < g.n_z ? mm(r + 1, c) : 0.0;
      const double up = r > 0 ? mm(r - 1, c) : 0.0;
      CHECK(y[g.index(r, c)] == doctest::Approx(0.5 * (right - left)).epsilon(1e-14));
      CHECK(y[g.n() + g.index(r, c)] ==
            doctest::Approx(0.5 * (down - up)).epsilon(1e-14));
    }
}

TEST_CASE("phase-only transfer has unit magnitude off DC and zero at DC") {
  Grid g(12, 9);
  SmoothedGradient sg(g, GradientMode::hilbert_phase);
  const Index pnx = sg.padded_nx(), pnz = sg.padded_nz();
  CHECK(pnx == 23);
  CHECK(pnz == 17);
  for (Index kx = 0; kx < pnx; ++kx)
    for (Index kz = 0; kz < pnz; ++kz) {
      const double mag2 =
          std::norm(sg.transfer_x(kz, kx)) + std::norm(sg.transfer_z(kz, kx));
      if (kx == 0 && kz == 0)
        CHECK(mag2 == 0.0);
      else
        CHECK(mag2 == doctest::Approx(1.0).epsilon(1e-12));
      // purely imaginary transfer (90 degree phase shift)
      CHECK(sg.transfer_x(kz, kx).real() == 0.0);
      CHECK(sg.transfer_z(kz, kx).real() == 0.0);
    }
}

TEST_CASE("transfer is odd so the operator maps real to real") {
  Grid g(10, 7);
  SmoothedGradient sg(g, GradientMode::hilbert_phase);
  const Index pnx = sg.padded_nx(), pnz = sg.padded_nz();
  for (Index kx = 0; kx < pnx; ++kx)
    for (Index kz = 0; kz < pnz; ++kz) {
      if (kx == 0 && kz == 0) continue;
      const Index mx = (pnx - kx) % pnx, mz = (pnz - kz) % pnz;
      CHECK(sg.transfer_x(kz, kx) == -sg.transfer_x(mz, mx));
      CHECK(sg.transfer_z(kz, kx) == -sg.transfer_z(mz, mx));
    }
}

TEST_CASE("phase-only output matches the direct DFT oracle and is real") {
  Grid g(6, 5);
  SmoothedGradient sg(g, GradientMode::hilbert_phase);
  RieszOracle oracle(g);
  std::mt19937_64 rng(42);
  for (int k = 0; k < 3; ++k) {
    const Vector m = random_vector(rng, g.n());
    double max_imag = 0.0;
    const Vector want = oracle.apply(m, &max_imag);
    CHECK(max_imag <= 1e-10);  // real-valued output
    const Vector got = sg.apply(m);
    CHECK(rel_diff(got, want) <= 1e-10);
  }
}

TEST_CASE("phase-only gradient kills constants") {
  Grid g(16, 16);
  SmoothedGradient sg(g, GradientMode::hilbert_phase);
  CHECK(sg.apply(Vector::Constant(g.n(), 4.2)).norm() <= 1e-10);
}

TEST_CASE("pure harmonic stripes map to the shifted harmonic at unit gain") {
  // a cosine even about row n-1 pads to an exact harmonic of the padded grid,
  // so the response is available in closed form
  Grid g(20, 20);
  const Index n = g.n_z, p = 2 * n - 1;
  const double k = 3.0;
  Vector m(g.n());
  for (Index c = 0; c < g.n_x; ++c)
    for (Index r = 0; r < g.n_z; ++r)
      m[g.index(r, c)] = std::cos(2.0 * kPi * k * double(r - (n - 1)) / double(p));
  SmoothedGradient sg(g, GradientMode::hilbert_phase);
  const Vector y = sg.apply(m);
  double worst = 0.0;
  for (Index c = 0; c < g.n_x; ++c)
    for (Index r = 0; r < g.n_z; ++r) {
      const double want = std::sin(2.0 * kPi * k * double(r - (n - 1)) / double(p));
      worst = std::max(worst, std::abs(y[g.n() + g.index(r, c)] - want));
      worst = std::max(worst, std::abs(y[g.index(r, c)]));  // x response is zero
    }
  CHECK(worst <= 1e-10);
}

TEST_CASE("tilted stripes steer the directional pair to the stripe normal") {
  Grid g(48, 48);
  const double angle = kPi / 6.0, period = 8.0;
  Vector m(g.n());
  const double sa = std::sin(angle), ca = std::cos(angle);
  for (Index c = 0; c < g.n_x; ++c)
    for (Index r = 0; r < g.n_z; ++r) {
      const double u = -sa * double(c) + ca * double(r);
      m[g.index(r, c)] = std::sin(2.0 * kPi * u / period);
    }
  SmoothedGradient sg(g, GradientMode::hilbert_phase);
  const Vector y = sg.apply(m);
  // estimated level-set orientation per pixel from the directional pair,
  // median over pixels with significant response
  std::vector<double> errs;
  for (Index i = 0; i < g.n(); ++i) {
    const double gx = y[i], gz = y[g.n() + i];
    if (std::hypot(gx, gz) < 0.3) continue;
    double est = std::atan2(gx, -gz);
    while (est > kHalfPi) est -= kPi;
    while (est < -kHalfPi) est += kPi;
    double d = std::abs(est - angle);
    errs.push_back(std::min(d, kPi - d));
  }
  REQUIRE(errs.size() > 500);
  std::sort(errs.begin(), errs.end());
  CHECK(errs[errs.size() / 2] <= 2.0 * kPi / 180.0);
  // energy gain within 2% of unit
  const double gain =
      y.squaredNorm() / (m.array() - m.mean()).matrix().squaredNorm();
  CHECK(gain == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("both modes pass the adjoint identity") {
  std::mt19937_64 rng(44);
  for (auto mode : {GradientMode::finite_difference, GradientMode::hilbert_phase}) {
    Grid g(9, 8);
    SmoothedGradient sg(g, mode);
    for (int k = 0; k < 25; ++k) {
      const Vector x = random_vector(rng, sg.in_dim());
      const Vector y = random_vector(rng, sg.out_dim());
      CHECK(rel_diff(sg.apply(x).dot(y), x.dot(sg.apply_adjoint(y))) <= 1e-10);
    }
  }
}

}  // TEST_SUITE
