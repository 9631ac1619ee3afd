"""Macroscopic observables and CSV serialization.

The total population is the double trapezoid of the density over age and
space per time node.  The truncation study measures how well the
N-term series reproduces the transformed initial data: coefficients are
computed on a refined x-grid (the coarse-grid trapezoid cannot resolve
orthogonality at N = 6) and the relative max error is read off the
display grid.  Two documented age grids exist for that study:
``paper41`` (41 nodes spanning [0, a_max * 40/41]) and ``dt`` (the
0.05-step age lattice); both stop strictly below a_max.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import build_basis, eval_basis
from .model import GridSpec, preset
from .stability import StabilityReport
from .stepper import BlowupDiagnostic, DensityField, project_line

__all__ = [
    "ObservableSeries",
    "total_population",
    "e_max",
    "truncation_study",
    "export_density",
    "export_series",
    "export_truncation",
    "export_summary",
    "EMAX_GRIDS",
]

EMAX_GRIDS = ("paper41", "dt")
_EMAX_DT = 0.05


@dataclass(frozen=True)
class ObservableSeries:
    t: np.ndarray
    p: np.ndarray


def total_population(field: DensityField, grid: GridSpec | None = None) -> ObservableSeries:
    """p(t) = double trapezoid of u over the retained age nodes, then x."""
    inner = np.trapezoid(field.u, x=field.x_nodes, axis=2)
    p = np.trapezoid(inner, x=field.a_nodes, axis=1)
    return ObservableSeries(t=field.t_values.copy(), p=p)


def e_max(reference: np.ndarray, truncated: np.ndarray) -> float:
    """Relative max error in percent: max|ref - trunc| / max|ref| * 100."""
    reference = np.asarray(reference, dtype=float)
    truncated = np.asarray(truncated, dtype=float)
    if reference.shape != truncated.shape:
        raise ValueError(f"shape mismatch {reference.shape} vs {truncated.shape}")
    scale = float(np.max(np.abs(reference)))
    if scale == 0.0:
        raise ValueError("reference field is identically zero")
    return float(np.max(np.abs(reference - truncated)) / scale * 100.0)


def _emax_age_grid(a_max: float, kind: str) -> np.ndarray:
    if kind == "paper41":
        return np.arange(41) * (a_max / 41.0)
    if kind == "dt":
        a = np.arange(int(np.ceil(a_max / _EMAX_DT))) * _EMAX_DT
        return a[a < a_max - 1e-12]
    raise ValueError(f"unknown E_max grid {kind!r}; choose one of {EMAX_GRIDS}")


def truncation_study(
    example_id: int,
    N_list: tuple[int, ...] = (2, 4, 6),
    grid: str = "paper41",
) -> list[tuple[int, int, float]]:
    """Rows (example, N, E_max%) for the transformed initial data of one preset."""
    cfg = preset(example_id)
    ages = _emax_age_grid(cfg.a_max, grid)
    pi = (cfg.a_max - ages) / cfg.a_max

    nx = round(2.0 * cfg.ell / cfg.dx) + 1
    xs_display = -cfg.ell + np.arange(nx) * cfg.dx
    xs_display[-1] = cfg.ell
    n_fine = (nx - 1) * 40
    xs_fine = -cfg.ell + np.arange(n_fine + 1) * (2.0 * cfg.ell / n_fine)
    xs_fine[-1] = cfg.ell
    dx_fine = 2.0 * cfg.ell / n_fine

    aa_f, xx_f = np.meshgrid(ages, xs_fine, indexing="ij")
    v_fine = (np.log(np.asarray(cfg.u0(aa_f, xx_f), dtype=float)) - cfg.Kd_ratio) / pi[:, None]
    aa_c, xx_c = np.meshgrid(ages, xs_display, indexing="ij")
    v_true = (np.log(np.asarray(cfg.u0(aa_c, xx_c), dtype=float)) - cfg.Kd_ratio) / pi[:, None]

    rows = []
    for n in N_list:
        basis = build_basis(n, cfg.ell)
        coeff = project_line(v_fine, basis, dx_fine)
        v_trunc = coeff @ eval_basis(basis, 0, xs_display)
        rows.append((example_id, n, e_max(v_true, v_trunc)))
    return rows


# ---------------------------------------------------------------------------
# CSV export: byte-stable ordering, 17-significant-digit floats


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def export_density(field: DensityField, time_index: int, out_dir) -> Path:
    """density_t<t>.csv with header a,x,u; rows sorted by (a, x)."""
    row = field.t_indices.index(time_index)
    t_val = field.t_values[row]
    path = Path(out_dir) / f"density_t{t_val:.6f}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "x", "u"])
        for ja, a in enumerate(field.a_nodes):
            for jx, x in enumerate(field.x_nodes):
                w.writerow([_fmt(a), _fmt(x), _fmt(field.u[row, ja, jx])])
    return path


def export_series(series: ObservableSeries, out_dir) -> Path:
    path = Path(out_dir) / "total_population.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "p"])
        for t, p in zip(series.t, series.p):
            w.writerow([_fmt(t), _fmt(p)])
    return path


def export_truncation(rows: list[tuple[int, int, float]], out_dir) -> Path:
    path = Path(out_dir) / "truncation_study.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["example", "N", "E_max_percent"])
        for example, n, err in rows:
            w.writerow([example, n, _fmt(err)])
    return path


def export_summary(
    out_dir,
    example: str,
    M: int,
    N: int,
    dt: float,
    report: StabilityReport,
    blowup: BlowupDiagnostic | None,
) -> Path:
    path = Path(out_dir) / "summary.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([
            "example", "M", "N", "dt", "C", "S_inv_frob", "P_sum", "dt_admissible",
            "max_norm_observed", "bound_2C", "amplification", "blowup_node",
        ])
        w.writerow([
            example, M, N, _fmt(dt), _fmt(report.C), _fmt(report.S_inv_frob),
            _fmt(report.P_sum), str(report.dt_admissible).lower(),
            _fmt(report.max_norm_observed), _fmt(report.bound_2C),
            _fmt(report.amplification),
            f"{blowup.i}:{blowup.j}" if blowup is not None else "",
        ])
    return path
