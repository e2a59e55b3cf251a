/**
 * @file bench.hpp
 * @brief Synthetic phantoms with known orientation, noise injection, error
 *        metrics, the isotropic baseline, and runnable experiment presets.
 */

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "anisotikh/operators.hpp"
#include "anisotikh/optim.hpp"
#include "anisotikh/upper.hpp"

namespace anisotikh {

enum class PhantomKind { stripes, piecewise_layers, crossing_lines, velocity_layers };
enum class ProblemKind { denoise, deblur, tomo, dix };

const char* to_string(PhantomKind kind);
const char* to_string(ProblemKind kind);
PhantomKind phantom_kind_from_string(const std::string& s);
ProblemKind problem_kind_from_string(const std::string& s);

struct PhantomDescriptor {
  PhantomKind kind = PhantomKind::stripes;
  double angle = 0.0;   ///< tilt of the dominant structure, radians
  double period = 8.0;  ///< stripe period / band thickness in pixels
};

/// A ground-truth image together with its analytic orientation field
/// (the direction of the level sets, in [-pi/2, pi/2]).
struct Phantom {
  ModelImage image;
  OrientationField true_theta;
  PhantomDescriptor descriptor;
};

Phantom make_phantom(const PhantomDescriptor& desc, Grid grid);

/// Add white Gaussian noise rescaled so that ||e||_2 / ||clean||_2 equals
/// rel_level exactly; returns the noisy data and ||e||_2 (the noise bound).
/// Deterministic for a fixed seed across platforms.
std::pair<DataVector, double> add_noise(const DataVector& clean, double rel_level,
                                        std::uint64_t seed);

/// ||m - m_true||_2 / ||m_true||_2 on a common grid.
double rel_error(const ModelImage& m, const ModelImage& m_true);

/// Pixels where the smoothed-gradient magnitude of m_true reaches at least
/// `fraction` of its maximum; orientation is undefined on flat regions.
std::vector<Index> significant_gradient_mask(const ModelImage& m_true,
                                             double fraction = 0.1);

/// Median over the mask of the angular error min(|dt|, pi - |dt|), i.e.
/// orientation distance modulo pi. Throws on an empty mask.
double theta_error(const OrientationField& theta,
                   const OrientationField& theta_true,
                   const std::vector<Index>& mask);

struct IsotropicResult {
  ModelImage m;
  double mu = 0.0;
  SolveHistory history;
  OptimStatus status = OptimStatus::max_iter;
};

/// Classic reference method: theta-free Tikhonov with the plain gradient Gram
/// and mu chosen by minimizing the smoothed discrepancy over mu >= 0 with the
/// same box quasi-Newton optimizer (one variable).
IsotropicResult isotropic_baseline(const LinearOperator& forward,
                                   const DataVector& d, Grid grid,
                                   double noise_bound, double delta = 1e-3,
                                   const CgOptions& lower_opts = {},
                                   const BoxQnOptions& opts = {},
                                   double mu0 = 1.0);

struct ExperimentPreset {
  std::string name;
  ProblemKind problem = ProblemKind::denoise;
  Grid grid{64, 64};
  PhantomDescriptor phantom;
  double noise_level = 0.0;  ///< relative, ||e||_2 / ||G m_true||_2
  /// Physical amplitude of the phantom. With a relative noise level the
  /// squared noise bound grows with the square of this factor, so it decides
  /// how sharply the smoothed discrepancy term (width delta) can resolve the
  /// bound; attenuation- or velocity-like scales keep it well resolved.
  double model_scale = 1.0;
  AnisoWeights weights;
  double alpha = 1.0;
  double beta = 1.0;
  double delta = 1e-3;
  std::uint64_t seed = 17;
  double blur_sigma = 18.0;       ///< deblur PSF standard deviation, pixels
  Index tomo_sources = 20;
  Index tomo_receivers = 32;
  double dix_keep_fraction = 0.06;
  CgOptions lower_opts;
  BoxQnOptions outer_opts;
  double mu0_fallback = 1.0;  ///< used when the baseline mu is unavailable
};

/// The forward operator a preset prescribes (identity, blur, tomo, dix).
std::unique_ptr<LinearOperator> make_preset_operator(const ExperimentPreset& preset);

struct ExperimentResult {
  ExperimentPreset preset;
  Phantom phantom;
  DataVector data;
  double noise_norm = 0.0;  ///< ||e||_2, used as the noise bound
  ModelImage model_aniso;
  ModelImage model_iso;
  OrientationField theta;
  double mu_aniso = 0.0;
  double mu_iso = 0.0;
  double upper_value = 0.0;
  double sq_discrepancy = 0.0;
  double rel_error_aniso = 0.0;
  double rel_error_iso = 0.0;
  double theta_median_error = 0.0;
  SolveHistory history;  ///< bilevel outer trace, iteration 0 included
  OptimStatus status = OptimStatus::max_iter;
  Index outer_iterations = 0;
};

/// Full pipeline: phantom -> operator -> noisy data -> isotropic baseline ->
/// bilevel anisotropic solve (theta0 = 0, mu0 = baseline mu) -> metrics.
ExperimentResult run_experiment(const ExperimentPreset& preset);

/// Registered preset names ("denoise", "deblur", "tomo", "dix" plus variants).
std::vector<std::string> preset_names();
ExperimentPreset preset_by_name(const std::string& name);
ExperimentPreset default_preset(ProblemKind problem);

}  // namespace anisotikh
