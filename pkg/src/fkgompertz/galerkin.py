"""Structure matrices of the coupled transport-like coefficient system.

Testing the third-order auxiliary equation against the basis yields, for
each row m, entries built from three integrals:

    s_mn     = <Psi_n',   Psi_m>          (weight e^{2x})
    kappa_mn = <Psi_n''', Psi_m>          (weight e^{2x})
    sigma_mnk = <Psi_n' Psi_k'', Psi_m>   (weight e^{3x})

S_N is unit upper triangular, which is the property that makes the basis
usable at all: the discrete system is solved by back substitution
against S_N, never by multiplying with the inverse (the inverse is kept
only as the diagnostic |S_N^{-1}|_F).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .basis import BasisSet, Polynomial, exp_moment

__all__ = ["AssemblyError", "GalerkinSystem", "StepOperators", "assemble_structure", "step_operators", "dump_structure"]

TRIANGULARITY_LIMIT = 1e-9


class AssemblyError(ValueError):
    """Structure assembly detected an inconsistent basis."""


@dataclass(frozen=True)
class GalerkinSystem:
    N: int
    S: np.ndarray        # (N, N), unit upper triangular
    S_inv: np.ndarray    # (N, N)
    kappa: np.ndarray    # (N, N)
    sigma: np.ndarray    # (N, N, N), slice m is the quadratic-form matrix of row m

    @property
    def S_inv_frobenius(self) -> float:
        return float(np.linalg.norm(self.S_inv))


@dataclass(frozen=True)
class StepOperators:
    """Per-node operators: K couples linearly, G_m generates the quadratic forms."""

    K_mat: np.ndarray     # (N, N)
    G_mats: np.ndarray    # (N, N, N), slice m used as V^T G_m V


def _dpoly(p: Polynomial) -> Polynomial:
    # polynomial part of d/dx (P e^x)
    return p + p.derivative()


def assemble_structure(basis: BasisSet) -> GalerkinSystem:
    """Assemble S, its inverse, kappa, and sigma by exact polynomial algebra."""
    N, ell = basis.N, basis.ell
    polys = basis.polys
    d1 = [_dpoly(p) for p in polys]
    d2 = [_dpoly(p) for p in d1]
    d3 = [_dpoly(p) for p in d2]

    max_deg2 = 2 * (N - 1) + 1
    mom2 = np.array([exp_moment(k, 2.0, ell) for k in range(max_deg2 + 1)])
    max_deg3 = 3 * (N - 1) + 1
    mom3 = np.array([exp_moment(k, 3.0, ell) for k in range(max_deg3 + 1)])

    def pair(a: Polynomial, b: Polynomial, mom: np.ndarray) -> float:
        prod = np.polynomial.polynomial.polymul(a.coeffs, b.coeffs)
        return float(prod @ mom[: len(prod)])

    S = np.empty((N, N))
    kappa = np.empty((N, N))
    for m in range(N):
        for n in range(N):
            S[m, n] = pair(d1[n], polys[m], mom2)
            kappa[m, n] = pair(d3[n], polys[m], mom2)

    sigma = np.empty((N, N, N))
    for m in range(N):
        for n in range(N):
            nk = d1[n]
            for k in range(N):
                prod = np.polynomial.polynomial.polymul(
                    np.polynomial.polynomial.polymul(nk.coeffs, d2[k].coeffs), polys[m].coeffs
                )
                sigma[m, n, k] = float(prod @ mom3[: len(prod)])

    sub = np.max(np.abs(np.tril(S, -1))) if N > 1 else 0.0
    diag = np.max(np.abs(np.diag(S) - 1.0))
    if max(sub, diag) > TRIANGULARITY_LIMIT:
        raise AssemblyError(
            f"S_N is not unit upper triangular (subdiagonal {sub:.3e}, diagonal defect {diag:.3e}); "
            "the basis construction is inconsistent"
        )
    # exact unit triangular structure for the solves; roundoff below the limit is dropped
    S = np.triu(S)
    np.fill_diagonal(S, 1.0)
    S_inv = solve_triangular(S, np.eye(N), lower=False)
    return GalerkinSystem(N=N, S=S, S_inv=S_inv, kappa=kappa, sigma=sigma)


def step_operators(
    sys: GalerkinSystem,
    D_val: float,
    mu_val: float,
    Pi_val: float,
    rho: float,
    Kd_ratio: float,
) -> StepOperators:
    """Operators at one (t, a) node: K = (mu - rho e^{-K/d}) S + D kappa, G_m = 2 D Pi sigma_m."""
    if D_val < 0:
        raise AssemblyError(f"diffusion coefficient must be nonnegative, got {D_val}")
    if not 0.0 <= Pi_val <= 1.0:
        raise AssemblyError(f"survival probability must lie in [0, 1], got {Pi_val}")
    alpha = mu_val - rho * np.exp(-Kd_ratio)
    K_mat = alpha * sys.S + D_val * sys.kappa
    G_mats = (2.0 * D_val * Pi_val) * sys.sigma
    return StepOperators(K_mat=K_mat, G_mats=G_mats)


def dump_structure(sys: GalerkinSystem, path) -> None:
    """Debug CSV of S, kappa, sigma entries: matrix, row, col, slice, value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["matrix", "row", "col", "slice", "value"])
        for name, mat in (("S", sys.S), ("kappa", sys.kappa)):
            for m in range(sys.N):
                for n in range(sys.N):
                    w.writerow([name, m + 1, n + 1, "", f"{mat[m, n]:.17g}"])
        for m in range(sys.N):
            for n in range(sys.N):
                for k in range(sys.N):
                    w.writerow(["sigma", n + 1, k + 1, m + 1, f"{sys.sigma[m, n, k]:.17g}"])
