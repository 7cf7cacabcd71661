"""Simulation of multistable processes by truncated shot-noise series, with
statistical checks of their incremental scaling and pathwise roughness."""

__version__ = "0.1.0"

from .engine import (PathSample, PoissonEnvironment, TruncationReport,
                     build_environment, eval_diagonal_path, eval_field,
                     tail_covariance, truncation_diagnostic)
from .estimate import (ECFReport, HolderEstimate, KSResult, MomentEstimate,
                       ScalingFit, SmallBallReport, condition_probe,
                       diagonal_samples, ecf_compare,
                       estimate_increment_moments, fit_scaling,
                       holder_pathwise, ks_two_sample, levy_increment_cf,
                       small_ball_probe, theoretical_scaling)
from .expr import (EvalError, ExprError, FuncSpec, ParseError, RangeReport,
                   eval_expr, fd_derivative, parse_expr, to_source,
                   validate_range)
from .kernels import (Kernel, MeasureSpec, ProcessSpec, kink_power_integral,
                      levy_kernel, lfsm_kernel, lmmm_kernel, make_process,
                      pair_integral, sigma_lmmm)
from .stable import (QuadratureConfig, c_alpha, cms_sample, gamma_fn,
                     sas_abs_moment, sin2_integral, sin2_phase_integral)

__all__ = [
    "__version__",
    # expressions
    "parse_expr", "eval_expr", "to_source", "fd_derivative", "validate_range",
    "FuncSpec", "RangeReport", "ExprError", "ParseError", "EvalError",
    # stable-law numerics
    "QuadratureConfig", "c_alpha", "sin2_integral", "sin2_phase_integral",
    "sas_abs_moment", "gamma_fn", "cms_sample",
    # kernels and processes
    "Kernel", "MeasureSpec", "ProcessSpec", "levy_kernel", "lmmm_kernel",
    "lfsm_kernel", "make_process", "sigma_lmmm", "kink_power_integral",
    "pair_integral",
    # series engine
    "PoissonEnvironment", "build_environment", "eval_field",
    "eval_diagonal_path", "PathSample", "truncation_diagnostic",
    "TruncationReport", "tail_covariance",
    # estimation
    "MomentEstimate", "ScalingFit", "HolderEstimate", "SmallBallReport",
    "ECFReport", "KSResult", "diagonal_samples",
    "estimate_increment_moments", "theoretical_scaling", "fit_scaling",
    "holder_pathwise", "small_ball_probe", "levy_increment_cf", "ecf_compare",
    "condition_probe", "ks_two_sample",
]
