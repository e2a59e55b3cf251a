#include "anisotikh/smoothgrad.hpp"

#include <fftw3.h>

#include <vector>

namespace anisotikh {

std::pair<double, double> hilbert_kernel_value(double x, double z) {
  const double r2 = x * x + z * z;
  if (r2 == 0.0) return {0.0, 0.0};
  const double f = -1.0 / (2.0 * kPi * r2 * std::sqrt(r2));
  return {f * x, f * z};
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> fd_kernels() {
  Eigen::Vector3d h;
  h << 0.5, 0.0, -0.5;
  return {h, h};
}

// Plans are created once per instance on scratch buffers; all executions use
// the new-array interface with per-call buffers, so apply() is re-entrant.
struct SmoothedGradient::FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  fftw_complex* scratch_in = nullptr;
  fftw_complex* scratch_out = nullptr;

  FftPlans(Index pnz, Index pnx) {
    const std::size_t q = std::size_t(pnz) * std::size_t(pnx);
    scratch_in = fftw_alloc_complex(q);
    scratch_out = fftw_alloc_complex(q);
    // fftw is row-major; our padded arrays are column-major (pnz, pnx), which
    // is a row-major (pnx, pnz) array.
    const int n0 = static_cast<int>(pnx), n1 = static_cast<int>(pnz);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_2d(n0, n1, scratch_in, scratch_out, FFTW_FORWARD, flags);
    backward = fftw_plan_dft_2d(n0, n1, scratch_in, scratch_out, FFTW_BACKWARD, flags);
  }
  ~FftPlans() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(scratch_in);
    fftw_free(scratch_out);
  }

  void run(fftw_plan p, std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }
};

namespace {

// Mirror-pad source index: [0..n-1, n-2..0], period 2n-1 (always odd).
inline Index mirror_source(Index j, Index n) { return j < n ? j : 2 * n - 2 - j; }

inline double angular_freq(Index k, Index p) {
  const Index f = k <= (p - 1) / 2 ? k : k - p;
  return 2.0 * kPi * double(f) / double(p);
}

}  // namespace

SmoothedGradient::SmoothedGradient(Grid grid, GradientMode mode)
    : grid_(grid), mode_(mode) {
  if (mode_ != GradientMode::hilbert_phase) return;
  pnx_ = 2 * grid_.n_x - 1;
  pnz_ = 2 * grid_.n_z - 1;
  wx_.resize(pnz_, pnx_);
  wz_.resize(pnz_, pnx_);
  for (Index kx = 0; kx < pnx_; ++kx) {
    const double ox = angular_freq(kx, pnx_);
    for (Index kz = 0; kz < pnz_; ++kz) {
      const double oz = angular_freq(kz, pnz_);
      const double rho = std::hypot(ox, oz);
      wx_(kz, kx) = rho > 0.0 ? ox / rho : 0.0;
      wz_(kz, kx) = rho > 0.0 ? oz / rho : 0.0;
    }
  }
  plans_ = std::make_unique<FftPlans>(pnz_, pnx_);
}

SmoothedGradient::~SmoothedGradient() = default;

void SmoothedGradient::apply(ConstVectorRef x, VectorRef y) const {
  check_in(x.size());
  if (mode_ == GradientMode::hilbert_phase)
    riesz_apply(x, y);
  else
    fd_apply(x, y);
}

void SmoothedGradient::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  check_out(y.size());
  if (mode_ == GradientMode::hilbert_phase)
    riesz_adjoint(y, x);
  else
    fd_adjoint(y, x);
}

void SmoothedGradient::riesz_apply(ConstVectorRef x, VectorRef y) const {
  const Index nz = grid_.n_z, nx = grid_.n_x, n = grid_.n();
  const std::size_t q = std::size_t(pnz_) * std::size_t(pnx_);
  const double scale = 1.0 / double(q);
  std::vector<std::complex<double>> pad(q), freq(q), tmp(q);

  for (Index cc = 0; cc < pnx_; ++cc) {
    const Index sc = mirror_source(cc, nx) * nz;
    for (Index rr = 0; rr < pnz_; ++rr)
      pad[std::size_t(cc) * pnz_ + rr] = x[sc + mirror_source(rr, nz)];
  }
  plans_->run(plans_->forward, pad.data(), freq.data());

  for (int block = 0; block < 2; ++block) {
    const Matrix& w = block == 0 ? wx_ : wz_;
    for (Index kx = 0; kx < pnx_; ++kx)
      for (Index kz = 0; kz < pnz_; ++kz) {
        const std::size_t k = std::size_t(kx) * pnz_ + kz;
        tmp[k] = std::complex<double>(0.0, -w(kz, kx)) * freq[k];
      }
    plans_->run(plans_->backward, tmp.data(), pad.data());
    for (Index c = 0; c < nx; ++c)
      for (Index r = 0; r < nz; ++r)
        y[block * n + c * nz + r] = pad[std::size_t(c) * pnz_ + r].real() * scale;
  }
}

void SmoothedGradient::riesz_adjoint(ConstVectorRef y, VectorRef x) const {
  const Index nz = grid_.n_z, nx = grid_.n_x, n = grid_.n();
  const std::size_t q = std::size_t(pnz_) * std::size_t(pnx_);
  const double scale = 1.0 / double(q);
  std::vector<std::complex<double>> pad(q), freq(q), acc(q, {0.0, 0.0});

  for (int block = 0; block < 2; ++block) {
    std::fill(pad.begin(), pad.end(), std::complex<double>{0.0, 0.0});
    for (Index c = 0; c < nx; ++c)
      for (Index r = 0; r < nz; ++r)
        pad[std::size_t(c) * pnz_ + r] = y[block * n + c * nz + r];
    plans_->run(plans_->forward, pad.data(), freq.data());
    const Matrix& w = block == 0 ? wx_ : wz_;
    // conj(-i w) = +i w
    for (Index kx = 0; kx < pnx_; ++kx)
      for (Index kz = 0; kz < pnz_; ++kz) {
        const std::size_t k = std::size_t(kx) * pnz_ + kz;
        acc[k] += std::complex<double>(0.0, w(kz, kx)) * freq[k];
      }
  }
  plans_->run(plans_->backward, acc.data(), pad.data());

  x.setZero();
  // fold the mirrored copies back onto their source pixels
  for (Index cc = 0; cc < pnx_; ++cc) {
    const Index sc = mirror_source(cc, nx) * nz;
    for (Index rr = 0; rr < pnz_; ++rr)
      x[sc + mirror_source(rr, nz)] += pad[std::size_t(cc) * pnz_ + rr].real() * scale;
  }
}

void SmoothedGradient::fd_apply(ConstVectorRef x, VectorRef y) const {
  const Index nz = grid_.n_z, nx = grid_.n_x, n = grid_.n();
  Eigen::Map<const Matrix> m(x.data(), nz, nx);
  for (Index c = 0; c < nx; ++c)
    for (Index r = 0; r < nz; ++r) {
      const double right = c + 1 < nx ? m(r, c + 1) : 0.0;
      const double left = c > 0 ? m(r, c - 1) : 0.0;
      const double down = r + 1 < nz ? m(r + 1, c) : 0.0;
      const double up = r > 0 ? m(r - 1, c) : 0.0;
      y[c * nz + r] = 0.5 * (right - left);
      y[n + c * nz + r] = 0.5 * (down - up);
    }
}

void SmoothedGradient::fd_adjoint(ConstVectorRef y, VectorRef x) const {
  const Index nz = grid_.n_z, nx = grid_.n_x, n = grid_.n();
  x.setZero();
  for (Index c = 0; c < nx; ++c)
    for (Index r = 0; r < nz; ++r) {
      const double ux = y[c * nz + r];
      const double uz = y[n + c * nz + r];
      if (c + 1 < nx) x[(c + 1) * nz + r] += 0.5 * ux;
      if (c > 0) x[(c - 1) * nz + r] -= 0.5 * ux;
      if (r + 1 < nz) x[c * nz + r + 1] += 0.5 * uz;
      if (r > 0) x[c * nz + r - 1] -= 0.5 * uz;
    }
}

}  // namespace anisotikh
