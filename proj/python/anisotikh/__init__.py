"""Local anisotropic Tikhonov regularization for 2D linear inverse problems.

Per-pixel orientation and the regularization strength are learned together
with the solution by bilevel optimization. Images are (n_z, n_x) arrays;
stacked vectors use column order (pixel i = col * n_z + row).
"""

from ._core import (
    ConfigError,
    DimensionError,
    ExperimentPreset,
    IoError,
    LinearOperator,
    ParameterError,
    SolverError,
    UpperProblem,
    add_noise,
    dix,
    gaussian_blur,
    gradient,
    identity,
    lower_solve,
    make_phantom,
    preset,
    preset_names,
    rel_error,
    run_experiment,
    run_preset,
    smoothed_gradient,
    theta_error,
    tomo,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DimensionError",
    "ExperimentPreset",
    "IoError",
    "LinearOperator",
    "ParameterError",
    "SolverError",
    "UpperProblem",
    "add_noise",
    "dix",
    "gaussian_blur",
    "gradient",
    "identity",
    "lower_solve",
    "make_phantom",
    "preset",
    "preset_names",
    "rel_error",
    "run_experiment",
    "run_preset",
    "smoothed_gradient",
    "theta_error",
    "tomo",
]
