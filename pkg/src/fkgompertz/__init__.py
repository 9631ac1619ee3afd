"""Explicit Fourier-Klibanov solver for the age-dependent Gompertz tumor growth PDE."""

from .basis import BasisError, BasisSet, Polynomial, build_basis, eval_basis, exp_moment, inner_product
from .galerkin import AssemblyError, GalerkinSystem, StepOperators, assemble_structure, step_operators
from .model import (
    ConfigError,
    GridSpec,
    ModelConfig,
    TransformError,
    eval_diffusion,
    forward_transform,
    inverse_transform,
    load_config,
    preset,
    survival,
    validate_config,
)
from .oracle import CFLError, OracleConfig, solve_reference
from .postprocess import ObservableSeries, e_max, total_population, truncation_study
from .stability import (
    StabilityReport,
    amplification,
    data_bound_C,
    dt_admissible,
    frobenius,
    monitor,
    norm2,
    p_bound,
    phi,
    phi_inv,
)
from .stepper import (
    BlowupDiagnostic,
    CoefficientField,
    DensityField,
    project_line,
    reconstruct,
    solve,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BasisError", "BasisSet", "Polynomial", "build_basis", "eval_basis", "exp_moment", "inner_product",
    "AssemblyError", "GalerkinSystem", "StepOperators", "assemble_structure", "step_operators",
    "ConfigError", "GridSpec", "ModelConfig", "TransformError", "eval_diffusion",
    "forward_transform", "inverse_transform", "load_config", "preset", "survival", "validate_config",
    "CFLError", "OracleConfig", "solve_reference",
    "ObservableSeries", "e_max", "total_population", "truncation_study",
    "StabilityReport", "amplification", "data_bound_C", "dt_admissible", "frobenius",
    "monitor", "norm2", "p_bound", "phi", "phi_inv",
    "BlowupDiagnostic", "CoefficientField", "DensityField", "project_line", "reconstruct", "solve", "step",
]
