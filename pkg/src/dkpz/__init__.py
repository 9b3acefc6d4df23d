"""Deterministic lattice growth and its KPZ scaling limit."""

__version__ = "0.1.0"

from .driving import DrivingSpec, evaluate, smoothness_probe, validate_properties
from .coeffs import CoefficientSet, check_coefficient_consistency, extract_coefficients
from .lattice import (
    InitialData,
    SurfaceSlice,
    compute_h_field,
    evaluate_rescaled,
    evolve_step,
    init_surface,
    roughness_report,
)
from .rwalk import clt_error_table, kernel_exact, kernel_gaussian, reconstruct_via_representation
from .limit import LimitEvaluator, QuadratureConfig, cole_hopf_eval, duhamel_residual, limit_gradient
from .harness import (
    ExperimentConfig,
    emit_report,
    load_config,
    run_convergence_sweep,
    run_gradient_square_check,
    run_h_scaling,
)

__all__ = [
    "CoefficientSet",
    "DrivingSpec",
    "ExperimentConfig",
    "InitialData",
    "LimitEvaluator",
    "QuadratureConfig",
    "SurfaceSlice",
    "check_coefficient_consistency",
    "clt_error_table",
    "cole_hopf_eval",
    "compute_h_field",
    "duhamel_residual",
    "emit_report",
    "evaluate",
    "evaluate_rescaled",
    "evolve_step",
    "extract_coefficients",
    "init_surface",
    "kernel_exact",
    "kernel_gaussian",
    "limit_gradient",
    "load_config",
    "reconstruct_via_representation",
    "roughness_report",
    "run_convergence_sweep",
    "run_gradient_square_check",
    "run_h_scaling",
    "smoothness_probe",
    "validate_properties",
]
