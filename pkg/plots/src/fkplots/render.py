"""Render figures from solver CSV outputs.

Consumes only the documented file contracts:

    density_t<t>.csv       header a,x,u       (one per report time)
    total_population.csv   header t,p         (per run; sweeps hold one per M* subdir)
    truncation_study.csv   header example,N,E_max_percent

Rendering never touches solver code; the CSV directory is the entire
interface.  Figures go through the object-oriented Agg canvas, so no
global backend state is involved and output is deterministic.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["RenderError", "KINDS", "render"]

KINDS = ("density", "population", "truncation")


class RenderError(ValueError):
    """Input CSVs are missing or do not match the documented contract."""


def _read_csv(path: Path, expected_header: list[str]) -> list[list[str]]:
    if not path.is_file():
        raise RenderError(f"missing input file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != expected_header:
        raise RenderError(
            f"{path}: expected header {','.join(expected_header)}, got {','.join(rows[0]) if rows else 'nothing'}"
        )
    return rows[1:]


def _density_grid(path: Path):
    rows = _read_csv(path, ["a", "x", "u"])
    data = np.array([[float(v) for v in row] for row in rows])
    a = np.unique(data[:, 0])
    x = np.unique(data[:, 1])
    if len(a) * len(x) != len(data):
        raise RenderError(f"{path}: rows do not form a complete (a, x) grid")
    u = np.full((len(a), len(x)), np.nan)
    ia = np.searchsorted(a, data[:, 0])
    ix = np.searchsorted(x, data[:, 1])
    u[ia, ix] = data[:, 2]
    return a, x, u


def _render_density(in_dir: Path, fig: Figure) -> None:
    files = sorted(in_dir.glob("density_t*.csv"),
                   key=lambda p: float(re.search(r"density_t(.+)\.csv$", p.name).group(1)))
    if not files:
        raise RenderError(f"no density_t*.csv files in {in_dir}")
    n = len(files)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig.set_size_inches(5.5 * ncols, 4.0 * nrows)
    for k, path in enumerate(files):
        a, x, u = _density_grid(path)
        t_txt = re.search(r"density_t(.+)\.csv$", path.name).group(1)
        ax = fig.add_subplot(nrows, ncols, k + 1)
        # plot on the exact CSV grid, no resampling
        mesh = ax.pcolormesh(a, x, u.T, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="u (thousand cells/cm)")
        ax.set_xlabel("age a (months)")
        ax.set_ylabel("x (cm)")
        ax.set_title(f"density at t = {float(t_txt):g}")
    fig.tight_layout()


def _render_population(in_dir: Path, fig: Figure) -> None:
    single = in_dir / "total_population.csv"
    series = []
    if single.is_file():
        series.append((None, single))
    for sub in sorted(in_dir.glob("M*")):
        candidate = sub / "total_population.csv"
        if sub.is_dir() and candidate.is_file():
            series.append((sub.name, candidate))
    if not series:
        raise RenderError(f"no total_population.csv found in {in_dir} or its M* subdirectories")
    fig.set_size_inches(6.4, 4.4)
    ax = fig.add_subplot(1, 1, 1)
    for label, path in series:
        rows = _read_csv(path, ["t", "p"])
        t = np.array([float(r[0]) for r in rows])
        p = np.array([float(r[1]) for r in rows])
        ax.plot(t, p, label=label if label else "run")
    ax.set_xlabel("t (months)")
    ax.set_ylabel("total population p(t)")
    ax.set_title("total tumor cell population")
    if len(series) > 1 or series[0][0]:
        ax.legend(title="time steps")
    fig.tight_layout()


def _render_truncation(in_dir: Path, fig: Figure) -> None:
    rows = _read_csv(in_dir / "truncation_study.csv", ["example", "N", "E_max_percent"])
    by_example: dict[str, list[tuple[int, float]]] = {}
    for ex, n, err in rows:
        by_example.setdefault(ex, []).append((int(n), float(err)))
    fig.set_size_inches(6.4, 4.4)
    ax = fig.add_subplot(1, 1, 1)
    for ex, pts in sorted(by_example.items()):
        pts.sort()
        ax.semilogy([n for n, _ in pts], [e for _, e in pts], marker="o", label=f"example {ex}")
    ax.set_xlabel("cut-off N")
    ax.set_ylabel("E_max (%)")
    ax.set_title("truncated-series error vs cut-off")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()


_RENDERERS = {
    "density": _render_density,
    "population": _render_population,
    "truncation": _render_truncation,
}


def render(kind: str, in_dir, out_path) -> Path:
    """Render one figure kind from the CSVs in ``in_dir`` to ``out_path``."""
    if kind not in KINDS:
        raise RenderError(f"unknown figure kind {kind!r}; choose one of {KINDS}")
    in_dir = Path(in_dir)
    if not in_dir.is_dir():
        raise RenderError(f"input directory does not exist: {in_dir}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig = Figure()
    FigureCanvasAgg(fig)
    _RENDERERS[kind](in_dir, fig)
    fig.savefig(out_path, dpi=110)
    return out_path
