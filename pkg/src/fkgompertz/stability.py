"""Boundedness and stability diagnostics for the explicit characteristic scheme.

The sufficient condition bounds the discrete solution by 2C whenever

    dt * |S_N^{-1}|_F * sum_{i,j} P_j^i  <=  ln((C+1)/(C+1/2)),

where C bounds the boundary data in the 2-norm and P_j^i dominates the
per-node operator norms.  The condition is extremely conservative for
realistic parameters; the report always carries both the verdict and the
margin so the gap is visible.  Violations of the 2C ball are recorded as
flags, never as errors: the hypothesis may simply not hold for a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .galerkin import GalerkinSystem, StepOperators

__all__ = [
    "StabilityReport",
    "norm2",
    "frobenius",
    "p_bound",
    "p_sum_lattice",
    "data_bound_C",
    "dt_admissible",
    "phi",
    "phi_inv",
    "amplification",
    "monitor",
    "build_report",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class StabilityReport:
    C: float
    S_inv_frob: float
    P_sum: float
    dt_admissible: bool
    max_norm_observed: float
    bound_2C: float
    amplification: float
    condition_lhs: float        # dt * |S^-1|_F * P_sum
    condition_threshold: float  # ln((C+1)/(C+1/2))
    bound_satisfied: bool       # max_norm_observed <= 2C


def norm2(x: np.ndarray) -> float:
    """Euclidean norm of a coefficient vector."""
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def frobenius(a: np.ndarray) -> float:
    """Frobenius norm: sqrt of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def p_bound(ops: StepOperators) -> float:
    """Tightest per-node constant: |K|_F + sum_m |G_m|_F."""
    return frobenius(ops.K_mat) + float(sum(np.linalg.norm(g) for g in ops.G_mats))


def p_sum_lattice(sys: GalerkinSystem, cfg, grid) -> float:
    """Sum of P_j^i over every lattice node (i in 0..M, j over all ages).

    K_j^i is a fixed linear combination alpha*S + D*kappa, so its
    Frobenius norm has the closed form
    sqrt(alpha^2 |S|^2 + 2 alpha D <S,kappa> + D^2 |kappa|^2), which
    makes the full lattice sum a vectorized evaluation instead of
    (M+1) x (J+1) matrix assemblies.  Identical to summing p_bound
    node by node.
    """
    s2 = float(np.sum(sys.S * sys.S))
    sk = float(np.sum(sys.S * sys.kappa))
    k2 = float(np.sum(sys.kappa * sys.kappa))
    g_sum = float(sum(np.linalg.norm(s) for s in sys.sigma))

    a = grid.a_nodes
    mu = np.asarray(cfg.mu(a), dtype=float)
    pi = np.asarray(cfg.Pi(a), dtype=float)
    alpha = mu - cfg.rho * math.exp(-cfg.Kd_ratio)
    tt, aa = np.meshgrid(grid.t_nodes, a, indexing="ij")
    d = np.asarray(cfg.D(tt, aa), dtype=float)
    d = np.broadcast_to(d, tt.shape)
    k_frob = np.sqrt(np.maximum(alpha[None, :] ** 2 * s2 + 2.0 * alpha[None, :] * d * sk + d * d * k2, 0.0))
    return float(np.sum(k_frob + 2.0 * d * pi[None, :] * g_sum))


def data_bound_C(coeffs) -> float:
    """Max 2-norm over the initial row (i=0) and the newborn column (j=0).

    Accepts the coefficient-field object or its raw (M+1, J+1, N) array.
    """
    v = np.asarray(getattr(coeffs, "values", coeffs), dtype=float)
    row = np.linalg.norm(v[0], axis=-1).max()
    col = np.linalg.norm(v[:, 0], axis=-1).max()
    return float(max(row, col))


def dt_admissible(dt: float, S_inv_frob: float, P_sum: float, C: float) -> bool:
    """True iff dt |S^-1|_F sum P <= ln((C+1)/(C+1/2))."""
    if min(dt, S_inv_frob, P_sum, C) < 0:
        raise ValueError("dt_admissible expects nonnegative inputs")
    return dt * S_inv_frob * P_sum <= math.log((C + 1.0) / (C + 0.5))


def phi(f: float) -> float:
    """Phi(f) = ln(2f/(f+1)) for f > 0."""
    if f <= 0:
        raise ValueError(f"phi requires a positive argument, got {f}")
    return math.log(2.0 * f / (f + 1.0))


def phi_inv(g: float) -> float:
    """Inverse of phi: 1/(2 e^{-g} - 1), defined for g < ln 2."""
    if g >= LN2:
        raise ValueError(f"phi_inv requires g < ln 2 = {LN2:.6f}, got {g}")
    return 1.0 / (2.0 * math.exp(-g) - 1.0)


def amplification(C: float) -> float:
    """Stability factor 1 + (1+4C) ln((C+1)/(C+1/2)) bounding perturbation growth."""
    if C < 0:
        raise ValueError(f"amplification requires C >= 0, got {C}")
    return 1.0 + (1.0 + 4.0 * C) * math.log((C + 1.0) / (C + 0.5))


def monitor(coeffs, C: float) -> tuple[float, bool]:
    """Max observed |V|_2 over the lattice and whether it stays within 2C."""
    v = np.asarray(getattr(coeffs, "values", coeffs), dtype=float)
    max_norm = float(np.linalg.norm(v, axis=-1).max())
    return max_norm, max_norm <= 2.0 * C


def build_report(sys: GalerkinSystem, cfg, grid, values: np.ndarray) -> StabilityReport:
    """Assemble the full stability report for a completed coefficient field."""
    C = data_bound_C(values)
    s_inv_f = sys.S_inv_frobenius
    p_sum = p_sum_lattice(sys, cfg, grid)
    lhs = grid.dt * s_inv_f * p_sum
    threshold = math.log((C + 1.0) / (C + 0.5))
    max_norm, within = monitor(values, C)
    return StabilityReport(
        C=C,
        S_inv_frob=s_inv_f,
        P_sum=p_sum,
        dt_admissible=lhs <= threshold,
        max_norm_observed=max_norm,
        bound_2C=2.0 * C,
        amplification=amplification(C),
        condition_lhs=lhs,
        condition_threshold=threshold,
        bound_satisfied=within,
    )
