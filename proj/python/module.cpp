// pybind11 bindings: phantoms, forward operators, the lower-level Tikhonov
// solve, the upper-level objective/gradient, and the preset experiment
// pipeline. Images cross the boundary as (n_z, n_x) numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <utility>

#include "anisotikh/bench.hpp"
#include "anisotikh/lower.hpp"
#include "anisotikh/operators.hpp"
#include "anisotikh/smoothgrad.hpp"
#include "anisotikh/types.hpp"
#include "anisotikh/upper.hpp"

namespace py = pybind11;
using namespace anisotikh;

namespace {

Grid make_grid(Index n_x, Index n_z) { return Grid(n_x, n_z); }

/// 2D (n_z, n_x) array -> column-stacked vector on the matching grid.
Vector to_stacked(const Grid& grid, const Eigen::Ref<const Matrix>& img) {
  if (img.rows() != grid.n_z || img.cols() != grid.n_x)
    throw DimensionError("expected a (" + std::to_string(grid.n_z) + ", " +
                         std::to_string(grid.n_x) + ") array, got (" +
                         std::to_string(img.rows()) + ", " +
                         std::to_string(img.cols()) + ")");
  return stack(img);
}

/// Shared-ownership wrapper so Python can hold operators polymorphically.
struct PyOperator {
  std::shared_ptr<LinearOperator> op;
  explicit PyOperator(std::shared_ptr<LinearOperator> p) : op(std::move(p)) {}

  Vector apply(const Vector& x) const { return op->apply(x); }
  Vector apply_adjoint(const Vector& y) const { return op->apply_adjoint(y); }
  std::pair<Index, Index> shape() const { return {op->out_dim(), op->in_dim()}; }
  Matrix dense() const { return dense_matrix(*op); }
};

AnisoWeights make_weights(double sigma_x, double sigma_z) {
  return AnisoWeights(sigma_x, sigma_z);
}

/// Owns the forward operator and the data alongside the problem object,
/// keeping the C++ reference semantics hidden from Python.
struct PyUpperProblem {
  std::shared_ptr<LinearOperator> forward;
  Grid grid;
  UpperProblem prob;

  PyUpperProblem(const PyOperator& fwd, const Vector& data, Index n_x, Index n_z,
                 double sigma_x, double sigma_z, double alpha, double beta,
                 double delta, double noise_bound, double cg_tolerance,
                 Index cg_max_iterations)
      : forward(fwd.op),
        grid(n_x, n_z),
        prob(*forward, DataVector(data), grid, AnisoWeights(sigma_x, sigma_z),
             UpperParams(alpha, beta, delta, noise_bound),
             CgOptions(cg_tolerance, cg_max_iterations)) {}

  InversionVector unpack(const Eigen::Ref<const Matrix>& theta, double mu) const {
    return {OrientationField(grid, to_stacked(grid, theta)), mu};
  }

  py::dict eval(const UpperEval& ev, bool with_gradient) const {
    py::dict out;
    out["value"] = ev.value;
    out["m_star"] = unstack(grid, ev.m_star.values);
    out["sq_discrepancy"] = ev.sq_discrepancy;
    out["term_discrepancy"] = ev.term_discrepancy;
    out["term_orientation"] = ev.term_orientation;
    out["term_smoothness"] = ev.term_smoothness;
    out["dxprime_norm"] = ev.dxprime_norm;
    out["dzprime_norm"] = ev.dzprime_norm;
    out["lower_iterations"] = ev.lower_iterations;
    if (with_gradient) {
      out["grad_theta"] = unstack(grid, Vector(ev.gradient.head(grid.n())));
      out["grad_mu"] = ev.gradient[grid.n()];
    }
    return out;
  }

  py::dict value(const Eigen::Ref<const Matrix>& theta, double mu) const {
    return eval(prob.value(unpack(theta, mu)), false);
  }
  py::dict gradient(const Eigen::Ref<const Matrix>& theta, double mu) const {
    return eval(prob.gradient(unpack(theta, mu)), true);
  }
};

py::dict history_dict(const SolveHistory& h) {
  const Index n = static_cast<Index>(h.records.size());
  Vector iter(n), u(n), sq(n), mu(n), dx(n), dz(n);
  for (Index i = 0; i < n; ++i) {
    const HistoryRecord& r = h.records[i];
    iter[i] = r.iteration;
    u[i] = r.upper_value;
    sq[i] = r.sq_discrepancy;
    mu[i] = r.mu;
    dx[i] = r.dxprime_norm;
    dz[i] = r.dzprime_norm;
  }
  py::dict out;
  out["iteration"] = iter;
  out["upper_value"] = u;
  out["sq_discrepancy"] = sq;
  out["mu"] = mu;
  out["dxprime_norm"] = dx;
  out["dzprime_norm"] = dz;
  return out;
}

py::dict result_dict(const ExperimentResult& res) {
  py::dict out;
  const Grid& grid = res.preset.grid;
  out["preset"] = res.preset.name;
  out["grid"] = py::make_tuple(grid.n_z, grid.n_x);
  out["phantom"] = unstack(grid, res.phantom.image.values);
  out["true_theta"] = unstack(grid, res.phantom.true_theta.theta);
  out["data"] = res.data.values;
  out["noise_norm"] = res.noise_norm;
  out["model_aniso"] = unstack(grid, res.model_aniso.values);
  out["model_iso"] = unstack(grid, res.model_iso.values);
  out["theta"] = unstack(grid, res.theta.theta);
  out["mu_aniso"] = res.mu_aniso;
  out["mu_iso"] = res.mu_iso;
  out["upper_value"] = res.upper_value;
  out["sq_discrepancy"] = res.sq_discrepancy;
  out["rel_error_aniso"] = res.rel_error_aniso;
  out["rel_error_iso"] = res.rel_error_iso;
  out["theta_median_error"] = res.theta_median_error;
  out["status"] = to_string(res.status);
  out["outer_iterations"] = res.outer_iterations;
  out["history"] = history_dict(res.history);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "2D linear inverse problems with local anisotropic Tikhonov "
      "regularization; per-pixel orientation and regularization strength are "
      "learned by bilevel optimization";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // phantoms and metrics -----------------------------------------------------
  m.def(
      "make_phantom",
      [](const std::string& kind, double angle, double period, Index n_x,
         Index n_z) {
        const Phantom ph = make_phantom(
            {phantom_kind_from_string(kind), angle, period}, Grid(n_x, n_z));
        return py::make_tuple(unstack(ph.image.grid, ph.image.values),
                              unstack(ph.true_theta.grid, ph.true_theta.theta));
      },
      py::arg("kind"), py::arg("angle"), py::arg("period"), py::arg("n_x"),
      py::arg("n_z"),
      "Analytic phantom; returns (image, true_theta) as (n_z, n_x) arrays");

  m.def(
      "add_noise",
      [](const Vector& clean, double rel_level, std::uint64_t seed) {
        auto [d, norm] = add_noise(DataVector(clean), rel_level, seed);
        return py::make_tuple(d.values, norm);
      },
      py::arg("clean"), py::arg("rel_level"), py::arg("seed"),
      "White Gaussian noise with exact relative level; returns (noisy, norm)");

  m.def(
      "rel_error",
      [](const Eigen::Ref<const Matrix>& m_, const Eigen::Ref<const Matrix>& ref) {
        const Grid g(m_.cols(), m_.rows());
        return rel_error(ModelImage(g, stack(m_)),
                         ModelImage(Grid(ref.cols(), ref.rows()), stack(ref)));
      },
      py::arg("m"), py::arg("m_true"));

  m.def(
      "theta_error",
      [](const Eigen::Ref<const Matrix>& theta,
         const Eigen::Ref<const Matrix>& theta_true,
         const Eigen::Ref<const Matrix>& m_true, double fraction) {
        const Grid g(theta.cols(), theta.rows());
        const auto mask =
            significant_gradient_mask(ModelImage(g, stack(m_true)), fraction);
        return theta_error(OrientationField(g, stack(theta)),
                           OrientationField(g, stack(theta_true)), mask);
      },
      py::arg("theta"), py::arg("theta_true"), py::arg("m_true"),
      py::arg("fraction") = 0.1,
      "Median angular error (mod pi) over the significant-gradient mask");

  // forward operators ----------------------------------------------------------
  py::class_<PyOperator>(m, "LinearOperator",
                         "Forward map with apply/apply_adjoint on stacked vectors")
      .def("apply", &PyOperator::apply, py::arg("x"))
      .def("apply_adjoint", &PyOperator::apply_adjoint, py::arg("y"))
      .def_property_readonly("shape", &PyOperator::shape,
                             "(out_dim, in_dim) of the operator")
      .def("dense", &PyOperator::dense, "Assemble the dense matrix (small ops)");

  m.def(
      "identity",
      [](Index n_x, Index n_z) {
        return PyOperator(std::make_shared<IdentityOperator>(make_grid(n_x, n_z)));
      },
      py::arg("n_x"), py::arg("n_z"));
  m.def(
      "gaussian_blur",
      [](Index n_x, Index n_z, double psf_std) {
        return PyOperator(
            std::make_shared<GaussianBlurOperator>(make_grid(n_x, n_z), psf_std));
      },
      py::arg("n_x"), py::arg("n_z"), py::arg("psf_std"));
  m.def(
      "tomo",
      [](Index n_x, Index n_z, int n_sources, int n_receivers) {
        return PyOperator(std::make_shared<TomoOperator>(make_grid(n_x, n_z),
                                                         n_sources, n_receivers));
      },
      py::arg("n_x"), py::arg("n_z"), py::arg("n_sources"), py::arg("n_receivers"));
  m.def(
      "dix",
      [](Index n_x, Index n_z, double keep_fraction) {
        return PyOperator(
            std::make_shared<DixOperator>(make_grid(n_x, n_z), keep_fraction));
      },
      py::arg("n_x"), py::arg("n_z"), py::arg("keep_fraction"));
  m.def(
      "gradient",
      [](Index n_x, Index n_z) {
        return PyOperator(std::make_shared<GradientOperator>(make_grid(n_x, n_z)));
      },
      py::arg("n_x"), py::arg("n_z"),
      "Finite-difference gradient, output stacked [gx; gz]");
  m.def(
      "smoothed_gradient",
      [](Index n_x, Index n_z, const std::string& mode) {
        GradientMode gm;
        if (mode == "hilbert_phase")
          gm = GradientMode::hilbert_phase;
        else if (mode == "finite_difference")
          gm = GradientMode::finite_difference;
        else
          throw ParameterError("smoothed_gradient: unknown mode '" + mode + "'");
        return PyOperator(std::make_shared<SmoothedGradient>(make_grid(n_x, n_z), gm));
      },
      py::arg("n_x"), py::arg("n_z"), py::arg("mode") = "hilbert_phase");

  // lower-level solve ---------------------------------------------------------
  m.def(
      "lower_solve",
      [](const PyOperator& forward, const Vector& d,
         const Eigen::Ref<const Matrix>& theta, double mu, double sigma_x,
         double sigma_z, double rel_tolerance, Index max_iterations) {
        const Grid grid(theta.cols(), theta.rows());
        const CgResult res = lower_solve(
            *forward.op, DataVector(d), OrientationField(grid, stack(theta)), mu,
            make_weights(sigma_x, sigma_z), CgOptions(rel_tolerance, max_iterations));
        py::dict out;
        out["m"] = unstack(grid, res.x);
        out["iterations"] = res.iterations;
        out["residual"] = res.residual;
        return out;
      },
      py::arg("forward"), py::arg("data"), py::arg("theta"), py::arg("mu"),
      py::arg("sigma_x") = 1.0, py::arg("sigma_z") = 1e-3,
      py::arg("rel_tolerance") = 1e-8, py::arg("max_iterations") = 0,
      "Anisotropic Tikhonov solve (G^T G + mu M(theta)) m = G^T d by CG");

  // upper-level objective -------------------------------------------------------
  py::class_<PyUpperProblem>(m, "UpperProblem",
                             "Bilevel upper objective U(theta, mu) and gradient")
      .def(py::init<const PyOperator&, const Vector&, Index, Index, double, double,
                    double, double, double, double, double, Index>(),
           py::arg("forward"), py::arg("data"), py::arg("n_x"), py::arg("n_z"),
           py::arg("sigma_x"), py::arg("sigma_z"), py::arg("alpha"),
           py::arg("beta"), py::arg("delta"), py::arg("noise_bound"),
           py::arg("cg_tolerance") = 1e-8, py::arg("cg_max_iterations") = 0)
      .def("value", &PyUpperProblem::value, py::arg("theta"), py::arg("mu"),
           "One lower solve; returns a dict with value, m_star and the terms")
      .def("gradient", &PyUpperProblem::gradient, py::arg("theta"), py::arg("mu"),
           "Lower + adjoint solve; adds grad_theta (n_z, n_x) and grad_mu");

  // presets and the full pipeline ------------------------------------------------
  py::class_<ExperimentPreset>(m, "ExperimentPreset")
      .def_readwrite("name", &ExperimentPreset::name)
      .def_property(
          "shape",
          [](const ExperimentPreset& p) {
            return py::make_tuple(p.grid.n_z, p.grid.n_x);
          },
          [](ExperimentPreset& p, std::pair<Index, Index> nznx) {
            p.grid = Grid(nznx.second, nznx.first);
          },
          "(n_z, n_x) of the model grid")
      .def_property(
          "phantom_kind",
          [](const ExperimentPreset& p) { return to_string(p.phantom.kind); },
          [](ExperimentPreset& p, const std::string& s) {
            p.phantom.kind = phantom_kind_from_string(s);
          })
      .def_property(
          "phantom_angle",
          [](const ExperimentPreset& p) { return p.phantom.angle; },
          [](ExperimentPreset& p, double a) { p.phantom.angle = a; })
      .def_property(
          "phantom_period",
          [](const ExperimentPreset& p) { return p.phantom.period; },
          [](ExperimentPreset& p, double v) { p.phantom.period = v; })
      .def_readwrite("noise_level", &ExperimentPreset::noise_level)
      .def_readwrite("model_scale", &ExperimentPreset::model_scale)
      .def_readwrite("alpha", &ExperimentPreset::alpha)
      .def_readwrite("beta", &ExperimentPreset::beta)
      .def_readwrite("delta", &ExperimentPreset::delta)
      .def_readwrite("seed", &ExperimentPreset::seed)
      .def_readwrite("blur_sigma", &ExperimentPreset::blur_sigma)
      .def_readwrite("tomo_sources", &ExperimentPreset::tomo_sources)
      .def_readwrite("tomo_receivers", &ExperimentPreset::tomo_receivers)
      .def_readwrite("dix_keep_fraction", &ExperimentPreset::dix_keep_fraction)
      .def_property(
          "sigma_x",
          [](const ExperimentPreset& p) { return p.weights.sigma_x; },
          [](ExperimentPreset& p, double v) {
            p.weights = AnisoWeights(v, p.weights.sigma_z);
          })
      .def_property(
          "sigma_z",
          [](const ExperimentPreset& p) { return p.weights.sigma_z; },
          [](ExperimentPreset& p, double v) {
            p.weights = AnisoWeights(p.weights.sigma_x, v);
          })
      .def_property(
          "max_outer_iterations",
          [](const ExperimentPreset& p) {
            return p.outer_opts.max_outer_iterations;
          },
          [](ExperimentPreset& p, int v) { p.outer_opts.max_outer_iterations = v; })
      .def("__repr__", [](const ExperimentPreset& p) {
        return "<ExperimentPreset '" + p.name + "' " + std::to_string(p.grid.n_z) +
               "x" + std::to_string(p.grid.n_x) + ">";
      });

  m.def("preset_names", &preset_names);
  m.def("preset", &preset_by_name, py::arg("name"),
        "Named experiment preset; fields may be edited before run_experiment");
  m.def(
      "run_experiment",
      [](const ExperimentPreset& preset) { return result_dict(run_experiment(preset)); },
      py::arg("preset"),
      "Phantom -> operator -> noisy data -> isotropic baseline -> bilevel "
      "anisotropic solve; returns a dict of reconstructions and metrics");
  m.def(
      "run_preset",
      [](const std::string& name) {
        return result_dict(run_experiment(preset_by_name(name)));
      },
      py::arg("name"), "run_experiment(preset(name))");
}
