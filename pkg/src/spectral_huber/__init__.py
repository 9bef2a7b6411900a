"""Smooth spectral penalties and locally low-rank reconstruction.

The package exposes its public names lazily so importing the command
line entry point does not pull in numpy before thread limits are set.
"""

__version__ = "0.1.0"

_SUBMODULES = {
    "archive",
    "cli",
    "commands",
    "config",
    "exceptions",
    "linesearch",
    "llr",
    "model",
    "plots",
    "potentials",
    "solvers",
    "spectral",
}

_EXPORTS = {
    # potentials
    "Hyperbola": "potentials",
    "Cauchy": "potentials",
    "Parabola": "potentials",
    "Potential": "potentials",
    "QuadCoeffs1D": "potentials",
    "make_potential": "potentials",
    # spectral
    "SpectralRegularizer": "spectral",
    "SVDFactors": "spectral",
    "svd": "spectral",
    "singular_values": "spectral",
    "reg_value": "spectral",
    "reg_grad": "spectral",
    "tail_weights": "spectral",
    "is_convex": "spectral",
    "lipschitz_bound": "spectral",
    "curvature_matrix": "spectral",
    "majorizer_value": "spectral",
    # line search
    "LineQuadratic": "linesearch",
    "reg_line_coeffs": "linesearch",
    "combine_line_coeffs": "linesearch",
    "mm_step": "linesearch",
    # patch machinery
    "PatchGeometry": "llr",
    "extract_patch": "llr",
    "adjoint_patch": "llr",
    "shift": "llr",
    "llr_value": "llr",
    "llr_grad": "llr",
    "llr_value_and_grad": "llr",
    "llr_line_coeffs": "llr",
    "llr_line_coeffs_fast": "llr",
    # model
    "ForwardOperator": "model",
    "IdentityOperator": "model",
    "MriOperator": "model",
    "ReconstructionProblem": "model",
    "f_value": "model",
    "f_grad": "model",
    "f_line_coeffs": "model",
    "generate_synthetic": "model",
    "datashare_init": "model",
    # solvers
    "SolverConfig": "solvers",
    "IterationLog": "solvers",
    "ncg_solve": "solvers",
    "svt": "solvers",
    "prox_average_llr": "solvers",
    "fista_pa_solve": "solvers",
    "pogm_pa_solve": "solvers",
    "solve": "solvers",
    "nrmse": "solvers",
    "dist_to_limit": "solvers",
    "default_lam": "solvers",
    # archive
    "save_problem": "archive",
    "load_problem": "archive",
    "problem_digest": "archive",
    # config
    "ExperimentConfig": "config",
    "build_config": "config",
    "load_config_file": "config",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    import importlib

    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    if name in _EXPORTS:
        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__ + sorted(_SUBMODULES)
