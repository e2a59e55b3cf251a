/**
 * @file types.hpp
 * @brief Grid geometry, fundamental data types, packing/unpacking of the
 *        bilevel variable gamma = [theta; mu], and the feasible-box projection.
 */

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisotikh {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;
using VectorRef = Eigen::Ref<Eigen::VectorXd>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHalfPi = kPi / 2.0;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& msg) : Error(msg) {}
};

/// Iterative solver breakdown or non-convergence. Carries the last iterate
/// and the residual it reached so callers can inspect or salvage it.
struct SolverError : Error {
  SolverError(const std::string& msg, Vector last_iterate_, double residual_,
              int iterations_)
      : Error(msg),
        last_iterate(std::move(last_iterate_)),
        residual(residual_),
        iterations(iterations_) {}
  Vector last_iterate;
  double residual = 0.0;
  int iterations = 0;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// A rectangular n_z x n_x pixel grid. Images are stored column-stacked:
/// the linear index of pixel (row r, column c) is i = c*n_z + r.
struct Grid {
  Index n_x = 0;  ///< number of columns (horizontal, x)
  Index n_z = 0;  ///< number of rows (vertical, z)

  Grid() = default;
  Grid(Index nx, Index nz) : n_x(nx), n_z(nz) {
    if (nx < 1 || nz < 1)
      throw ParameterError("Grid: dimensions must be positive, got " +
                           std::to_string(nx) + "x" + std::to_string(nz));
  }

  Index n() const { return n_x * n_z; }
  Index index(Index row, Index col) const { return col * n_z + row; }
  Index row(Index i) const { return i % n_z; }
  Index col(Index i) const { return i / n_z; }

  bool operator==(const Grid& other) const = default;
};

/// Column-stack an n_z x n_x matrix into a length-n vector.
inline Vector stack(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

/// Inverse of stack(): reshape a length n_z*n_x vector to an n_z x n_x matrix.
inline Matrix unstack(const Grid& g, const Vector& v) {
  if (v.size() != g.n())
    throw DimensionError("unstack: vector length " + std::to_string(v.size()) +
                         " does not match grid n=" + std::to_string(g.n()));
  return Eigen::Map<const Matrix>(v.data(), g.n_z, g.n_x);
}

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

/// The unknown model m as a column-stacked 2D field.
struct ModelImage {
  Grid grid;
  Vector values;

  ModelImage() = default;
  ModelImage(Grid g, Vector v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.n())
      throw DimensionError("ModelImage: got " + std::to_string(values.size()) +
                           " values for grid n=" + std::to_string(grid.n()));
    if (!values.allFinite()) throw ParameterError("ModelImage: non-finite values");
  }

  Matrix as_matrix() const { return unstack(grid, values); }
};

/// Measured data d (length M, not tied to the grid).
struct DataVector {
  Vector values;

  DataVector() = default;
  explicit DataVector(Vector v) : values(std::move(v)) {
    if (!values.allFinite()) throw ParameterError("DataVector: non-finite values");
  }
  Index size() const { return values.size(); }
};

/// Per-pixel tilt angles theta_i in [-pi/2, pi/2], column-stacked.
struct OrientationField {
  Grid grid;
  Vector theta;

  OrientationField() = default;
  OrientationField(Grid g, Vector t) : grid(g), theta(std::move(t)) {
    if (theta.size() != grid.n())
      throw DimensionError("OrientationField: got " + std::to_string(theta.size()) +
                           " angles for grid n=" + std::to_string(grid.n()));
    if (theta.size() > 0 &&
        (theta.minCoeff() < -kHalfPi - 1e-12 || theta.maxCoeff() > kHalfPi + 1e-12))
      throw ParameterError("OrientationField: angle outside [-pi/2, pi/2]");
  }

  static OrientationField zero(Grid g) { return {g, Vector::Zero(g.n())}; }
};

/// The upper-level variable gamma = [theta; mu], flattened length N+1.
struct InversionVector {
  OrientationField theta;
  double mu = 0.0;

  InversionVector() = default;
  InversionVector(OrientationField t, double mu_) : theta(std::move(t)), mu(mu_) {
    if (!(mu >= 0.0)) throw ParameterError("InversionVector: mu must be >= 0");
  }
};

/// Directional weights (sigma_x along x', sigma_z along z'); sigma_x >= sigma_z >= 0.
struct AnisoWeights {
  double sigma_x = 1.0;
  double sigma_z = 1e-3;

  AnisoWeights() = default;
  AnisoWeights(double sx, double sz) : sigma_x(sx), sigma_z(sz) {
    if (!(sx > 0.0) || !(sz >= 0.0) || sx < sz)
      throw ParameterError("AnisoWeights: require sigma_x >= sigma_z >= 0, sigma_x > 0");
  }
};

/// Parameters of the upper-level objective: term weights alpha/beta, the
/// discrepancy smoothing delta and the noise bound (on ||e||_2).
struct UpperParams {
  double alpha = 1.0;
  double beta = 1.0;
  double delta = 1e-3;
  double noise_bound = 1.0;

  UpperParams() = default;
  UpperParams(double a, double b, double d, double eps) {
    if (a < 0.0) throw ParameterError("UpperParams: alpha must be >= 0");
    if (b < 0.0) throw ParameterError("UpperParams: beta must be >= 0");
    if (!(d > 0.0)) throw ParameterError("UpperParams: delta must be > 0");
    if (!(eps > 0.0)) throw ParameterError("UpperParams: noise_bound must be > 0");
    alpha = a; beta = b; delta = d; noise_bound = eps;
  }
};

/// One accepted outer iteration of a bilevel solve.
struct HistoryRecord {
  int iteration = 0;
  double upper_value = 0.0;
  double sq_discrepancy = 0.0;   ///< ||G m* - d||_2^2
  double mu = 0.0;
  double dxprime_norm = 0.0;     ///< 2-norm of directional derivatives along x'
  double dzprime_norm = 0.0;     ///< 2-norm of directional derivatives along z'
  std::optional<double> rel_error;  ///< vs ground truth, when known
};

/// Per-iteration trace of a solve; iteration indices strictly increase from 0.
struct SolveHistory {
  std::vector<HistoryRecord> records;

  void append(HistoryRecord r) {
    if (!records.empty() && r.iteration <= records.back().iteration)
      throw ParameterError("SolveHistory: iteration indices must strictly increase");
    records.push_back(std::move(r));
  }
  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
};

// ---------------------------------------------------------------------------
// gamma packing and the feasible box
// ---------------------------------------------------------------------------

/// Flatten gamma = [theta; mu] into a length-(N+1) vector, mu last.
Vector pack_gamma(const OrientationField& theta, double mu);

/// Inverse of pack_gamma for a given grid.
InversionVector unpack_gamma(const Grid& grid, const Vector& gamma);

/// Euclidean projection onto the feasible set: components 1..N clamped to
/// [-pi/2, pi/2], the final component clamped to [0, inf). Idempotent.
Vector project_box(const Vector& gamma);

}  // namespace anisotikh
