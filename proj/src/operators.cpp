#include "anisotikh/operators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace anisotikh {

Matrix dense_matrix(const LinearOperator& op) {
  Matrix a(op.out_dim(), op.in_dim());
  Vector e = Vector::Zero(op.in_dim());
  Vector col(op.out_dim());
  for (Index j = 0; j < op.in_dim(); ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    a.col(j) = col;
    e[j] = 0.0;
  }
  return a;
}

// ---------------------------------------------------------------------------
// GradientOperator
// ---------------------------------------------------------------------------

void GradientOperator::apply(ConstVectorRef x, VectorRef y) const {
  check_in(x.size());
  const Index nz = grid_.n_z, nx = grid_.n_x, n = grid_.n();
  // x-block: m(r,c) - m(r,c+1), zero in the last column
  for (Index c = 0; c + 1 < nx; ++c)
    y.segment(c * nz, nz) = x.segment(c * nz, nz) - x.segment((c + 1) * nz, nz);
  y.segment((nx - 1) * nz, nz).setZero();
  // z-block: m(r,c) - m(r+1,c), zero in the last row
  for (Index c = 0; c < nx; ++c) {
    y.segment(n + c * nz, nz - 1) =
        x.segment(c * nz, nz - 1) - x.segment(c * nz + 1, nz - 1);
    y[n + c * nz + nz - 1] = 0.0;
  }
}

void GradientOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  check_out(y.size());
  const Index nz = grid_.n_z, nx = grid_.n_x, n = grid_.n();
  x.setZero();
  for (Index c = 0; c + 1 < nx; ++c) {
    x.segment(c * nz, nz) += y.segment(c * nz, nz);
    x.segment((c + 1) * nz, nz) -= y.segment(c * nz, nz);
  }
  for (Index c = 0; c < nx; ++c) {
    x.segment(c * nz, nz - 1) += y.segment(n + c * nz, nz - 1);
    x.segment(c * nz + 1, nz - 1) -= y.segment(n + c * nz, nz - 1);
  }
}

GradientOperator make_gradient(const Grid& grid) { return GradientOperator(grid); }

IdentityOperator make_identity(const Grid& grid) { return IdentityOperator(grid); }

// ---------------------------------------------------------------------------
// GaussianBlurOperator
// ---------------------------------------------------------------------------

GaussianBlurOperator::GaussianBlurOperator(Grid grid, double psf_std)
    : grid_(grid) {
  if (!(psf_std > 0.0))
    throw ParameterError("make_gaussian_blur: psf_std must be > 0");
  const Index radius = static_cast<Index>(std::ceil(4.0 * psf_std));
  kernel_.resize(2 * radius + 1);
  for (Index t = -radius; t <= radius; ++t)
    kernel_[t + radius] = std::exp(-0.5 * double(t) * double(t) / (psf_std * psf_std));
  kernel_ /= kernel_.sum();
}

// Separable zero-boundary convolution; the kernel is symmetric so the adjoint
// (correlation) reuses the same path.
void GaussianBlurOperator::convolve(ConstVectorRef x, VectorRef y, bool) const {
  const Index nz = grid_.n_z, nx = grid_.n_x;
  const Index radius = (kernel_.size() - 1) / 2;
  Eigen::Map<const Matrix> in(x.data(), nz, nx);
  Matrix tmp = Matrix::Zero(nz, nx);
  // along rows (x direction)
  for (Index c = 0; c < nx; ++c) {
    const Index t0 = std::max<Index>(-radius, -c);
    const Index t1 = std::min<Index>(radius, nx - 1 - c);
    for (Index t = t0; t <= t1; ++t)
      tmp.col(c) += kernel_[t + radius] * in.col(c + t);
  }
  Eigen::Map<Matrix> out(y.data(), nz, nx);
  out.setZero();
  // along columns (z direction)
  for (Index r = 0; r < nz; ++r) {
    const Index t0 = std::max<Index>(-radius, -r);
    const Index t1 = std::min<Index>(radius, nz - 1 - r);
    for (Index t = t0; t <= t1; ++t)
      out.row(r) += kernel_[t + radius] * tmp.row(r + t);
  }
}

void GaussianBlurOperator::apply(ConstVectorRef x, VectorRef y) const {
  check_in(x.size());
  convolve(x, y, false);
}

void GaussianBlurOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  check_out(y.size());
  convolve(y, x, true);
}

GaussianBlurOperator make_gaussian_blur(const Grid& grid, double psf_std) {
  return GaussianBlurOperator(grid, psf_std);
}

// ---------------------------------------------------------------------------
// TomoOperator
// ---------------------------------------------------------------------------

namespace {

// Exact intersection lengths of the segment a->b with the unit cells of an
// nx-by-nz domain, accumulated as sparse triplets for row `row`.
void trace_ray(const Grid& grid, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
               Index row, std::vector<Eigen::Triplet<double>>& triplets) {
  const Eigen::Vector2d dir = b - a;
  const double len = dir.norm();
  if (len <= 0.0) return;

  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(grid.n_x + grid.n_z + 4));
  ts.push_back(0.0);
  ts.push_back(1.0);
  if (std::abs(dir.x()) > 1e-14) {
    for (Index c = 0; c <= grid.n_x; ++c) {
      const double t = (double(c) - a.x()) / dir.x();
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  if (std::abs(dir.y()) > 1e-14) {
    for (Index r = 0; r <= grid.n_z; ++r) {
      const double t = (double(r) - a.y()) / dir.y();
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double dt = ts[k + 1] - ts[k];
    if (dt <= 1e-14) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const Eigen::Vector2d p = a + tm * dir;
    const Index c = static_cast<Index>(std::floor(p.x()));
    const Index r = static_cast<Index>(std::floor(p.y()));
    if (c < 0 || c >= grid.n_x || r < 0 || r >= grid.n_z) continue;
    triplets.emplace_back(row, grid.index(r, c), dt * len);
  }
}

}  // namespace

TomoOperator::TomoOperator(Grid grid, int n_sources, int n_receivers)
    : grid_(grid), n_sources_(n_sources), n_receivers_(n_receivers) {
  if (n_sources < 1 || n_receivers < 1)
    throw ParameterError("make_tomo: need at least one source and one receiver");
  std::vector<Eigen::Triplet<double>> triplets;
  for (int s = 0; s < n_sources; ++s)
    for (int r = 0; r < n_receivers; ++r) {
      auto [src, rec] = ray_endpoints(s, r);
      trace_ray(grid_, src, rec, Index(s) * n_receivers + r, triplets);
    }
  rows_.resize(Index(n_sources) * n_receivers, grid_.n());
  rows_.setFromTriplets(triplets.begin(), triplets.end());
  rows_.makeCompressed();
}

std::pair<Eigen::Vector2d, Eigen::Vector2d> TomoOperator::ray_endpoints(int s,
                                                                        int r) const {
  const double nx = double(grid_.n_x), nz = double(grid_.n_z);
  const Eigen::Vector2d src{nx, (s + 0.5) / n_sources_ * nz};
  // Receivers run along the concatenated left (bottom-left up to the corner)
  // and top (corner to top-right) boundaries, equally spaced in arc length.
  const double arc = (r + 0.5) / n_receivers_ * (nz + nx);
  const Eigen::Vector2d rec = arc < nz ? Eigen::Vector2d{0.0, nz - arc}
                                       : Eigen::Vector2d{arc - nz, 0.0};
  return {src, rec};
}

void TomoOperator::apply(ConstVectorRef x, VectorRef y) const {
  check_in(x.size());
  y = rows_ * x;
}

void TomoOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  check_out(y.size());
  x = rows_.transpose() * y;
}

TomoOperator make_tomo(const Grid& grid, int n_sources, int n_receivers) {
  return TomoOperator(grid, n_sources, n_receivers);
}

// ---------------------------------------------------------------------------
// DixOperator
// ---------------------------------------------------------------------------

DixOperator::DixOperator(Grid grid, double keep_fraction,
                         std::optional<std::uint64_t> seed)
    : grid_(grid) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    throw ParameterError("make_dix: keep_fraction must be in (0, 1]");
  const Index k = static_cast<Index>(std::ceil(keep_fraction * double(grid.n_x)));
  if (k < 1) throw ParameterError("make_dix: empty column selection");
  kept_columns_.resize(k);
  if (seed) {
    // one column per stratum, jittered; strata are disjoint so columns are unique
    std::mt19937_64 rng(*seed);
    for (Index j = 0; j < k; ++j) {
      const double lo = double(j) * grid.n_x / double(k);
      const double hi = double(j + 1) * grid.n_x / double(k);
      const double u = double(rng() >> 11) * 0x1.0p-53;
      kept_columns_[j] = std::min<Index>(
          grid.n_x - 1, static_cast<Index>(std::floor(lo + u * (hi - lo))));
    }
  } else {
    for (Index j = 0; j < k; ++j)
      kept_columns_[j] = std::min<Index>(
          grid.n_x - 1,
          static_cast<Index>(std::floor((double(j) + 0.5) * grid.n_x / double(k))));
  }
}

void DixOperator::apply(ConstVectorRef x, VectorRef y) const {
  check_in(x.size());
  const Index nz = grid_.n_z;
  for (std::size_t j = 0; j < kept_columns_.size(); ++j) {
    double acc = 0.0;
    const Index src = kept_columns_[j] * nz;
    for (Index r = 0; r < nz; ++r) {
      acc += x[src + r];
      y[Index(j) * nz + r] = acc;
    }
  }
}

void DixOperator::apply_adjoint(ConstVectorRef y, VectorRef x) const {
  check_out(y.size());
  const Index nz = grid_.n_z;
  x.setZero();
  for (std::size_t j = 0; j < kept_columns_.size(); ++j) {
    double acc = 0.0;
    const Index dst = kept_columns_[j] * nz;
    for (Index r = nz - 1; r >= 0; --r) {
      acc += y[Index(j) * nz + r];
      x[dst + r] = acc;
    }
  }
}

DixOperator make_dix(const Grid& grid, double keep_fraction,
                     std::optional<std::uint64_t> seed) {
  return DixOperator(grid, keep_fraction, seed);
}

}  // namespace anisotikh
