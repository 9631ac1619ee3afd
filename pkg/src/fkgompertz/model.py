"""Physical problem definition: parameters, transforms, and the built-in experiments.

The density u(t, a, x) (thousands of cells per cm) lives on t in [0, T],
age a in [0, a_max), x in [-ell, ell].  The solver works on the
transformed variable v = ln(u e^{-K/d}) / Pi(a) with survival
probability Pi(a) = (a_max - a)/a_max for the mortality law
mu(a) = 1/(a_max - a); both are singular at a = a_max, so the age
lattice always stops strictly below it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "ConfigError",
    "TransformError",
    "ModelConfig",
    "GridSpec",
    "survival",
    "forward_transform",
    "inverse_transform",
    "preset",
    "eval_diffusion",
    "validate_config",
    "load_config",
]

EXP_OVERFLOW_LIMIT = 700.0   # exp argument above this would be inf in float64
EXP_UNDERFLOW_FLOOR = -745.0  # below this exp underflows to exact zero


class ConfigError(ValueError):
    """Configuration rejected; message lists every offending field."""


class TransformError(ValueError):
    """Nonlinear transform evaluated outside its domain."""


@dataclass(frozen=True)
class ModelConfig:
    rho: float                    # net proliferation rate, 1/month
    K_gomp: float                 # Gompertz K (dimensionless)
    d_gomp: float                 # Gompertz damping d (dimensionless)
    ell: float                    # half-length of the spatial interval, cm
    a_max: float                  # maximum age, months
    T: float                      # final time, months
    M: int                        # number of time steps
    N: int                        # basis cut-off
    dx: float                     # spatial step, cm
    D: Callable[[float, float], float]        # diffusion D(t, a), cm^2/month
    mu: Callable[[float], float]              # mortality mu(a), 1/month
    u0: Callable[[float, float], float]       # initial density u0(a, x)
    u0_bar: Callable[[float, float], float]   # newborn density u0_bar(t, x)
    survival_fn: Callable | None = None       # exp(-int mu); None = closed form for mu = 1/(a_max - a)
    example: int | None = None    # preset id when built from a preset
    label: str = field(default="custom")

    @property
    def Kd_ratio(self) -> float:
        return self.K_gomp / self.d_gomp

    def Pi(self, a):
        """Survival probability consistent with the mortality law."""
        if self.survival_fn is None:
            return survival(a, self.a_max)
        out = np.asarray(self.survival_fn(a), dtype=float)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice: dt = T/M in time and age, dx in space.

    The age nodes stop strictly below a_max: when a_max is an integer
    multiple of dt the top node is dropped, because mu and the forward
    transform are singular at a_max.
    """

    dt: float
    t_nodes: np.ndarray
    a_nodes: np.ndarray
    x_nodes: np.ndarray

    @classmethod
    def from_config(cls, cfg: ModelConfig) -> "GridSpec":
        dt = cfg.T / cfg.M
        t_nodes = np.arange(cfg.M + 1) * dt
        j_max = int(math.floor((cfg.a_max - 1e-12) / dt))
        while j_max * dt >= cfg.a_max - 1e-12 * cfg.a_max:
            j_max -= 1
        if j_max < 1:
            raise ConfigError(f"age lattice is empty: dt={dt} leaves no node below a_max={cfg.a_max}")
        a_nodes = np.arange(j_max + 1) * dt
        nx = round(2.0 * cfg.ell / cfg.dx)
        if abs(nx * cfg.dx - 2.0 * cfg.ell) > 1e-9:
            raise ConfigError(f"dx={cfg.dx} does not divide the interval length {2 * cfg.ell}")
        x_nodes = -cfg.ell + np.arange(nx + 1) * cfg.dx
        x_nodes[-1] = cfg.ell  # pin the endpoint against accumulation error
        return cls(dt=dt, t_nodes=t_nodes, a_nodes=a_nodes, x_nodes=x_nodes)


def survival(a, a_max: float):
    """Survival probability (a_max - a)/a_max for mu(a) = 1/(a_max - a)."""
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr < -1e-12) or np.any(a_arr > a_max + 1e-12):
        raise TransformError(f"age must lie in [0, {a_max}], got range [{a_arr.min()}, {a_arr.max()}]")
    out = (a_max - a_arr) / a_max
    return float(out) if np.isscalar(a) or out.ndim == 0 else out


def forward_transform(u, a, cfg: ModelConfig):
    """v = ln(u e^{-K/d}) / Pi(a); requires u > 0 and Pi(a) bounded away from zero."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0):
        raise TransformError("density must be strictly positive for the logarithmic transform")
    pi_arr = np.asarray(cfg.Pi(a), dtype=float)
    if np.any(pi_arr <= 1e-300):
        raise TransformError(f"survival probability vanished (a -> a_max={cfg.a_max}); transform is singular there")
    out = (np.log(u_arr) - cfg.Kd_ratio) / pi_arr
    return float(out) if out.ndim == 0 else out


def inverse_transform(v, a, cfg: ModelConfig):
    """u = e^{K/d} e^{Pi(a) v}; at a = a_max this is e^{K/d} for any v.

    Raises TransformError when Pi(a) v exceeds the float overflow limit —
    a blow-up diagnostic rather than a silent infinity.  The negative
    side saturates at the underflow floor (u -> 0+ is the meaningful
    limit, and exp keeps it strictly positive).
    """
    expo = np.asarray(cfg.Pi(a), dtype=float) * np.asarray(v, dtype=float)
    if np.any(expo > EXP_OVERFLOW_LIMIT):
        raise TransformError(
            f"reconstruction overflow: Pi(a)*v reached {float(np.max(expo)):.3g} > {EXP_OVERFLOW_LIMIT:g}"
        )
    out = np.exp(cfg.Kd_ratio) * np.exp(np.maximum(expo, EXP_UNDERFLOW_FLOOR))
    return float(out) if out.ndim == 0 else out


def eval_diffusion(cfg: ModelConfig, t, a):
    """Diffusion coefficient on the domain; presets handle their own limits (e.g. a -> 0)."""
    out = np.asarray(cfg.D(t, a), dtype=float)
    return float(out) if out.ndim == 0 else out


def _preset_1() -> ModelConfig:
    eps = 0.75
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * eps)
    s = 1.0 / (2.0 * eps * eps)
    a_max = 12.0

    def u0(a, x):
        return norm * np.exp(-s * (np.asarray(x) ** 2 + (np.asarray(a) - 0.15) ** 2))

    def u0_bar(t, x):
        return norm * np.exp(-s * (np.asarray(x) ** 2 + (np.asarray(t) - 0.15) ** 2))

    def D(t, a):
        # the exponential term vanishes in the a -> 0+ limit
        a_arr = np.asarray(a, dtype=float)
        scalar = a_arr.ndim == 0
        a_arr = np.atleast_1d(a_arr)
        expo = np.zeros_like(a_arr)
        pos = a_arr > 0
        expo[pos] = np.exp(-((a_max / 8.0 - a_arr[pos]) ** 2) / a_arr[pos])
        out = 0.03 - 0.03 * expo
        out = np.broadcast_to(out, np.broadcast_shapes(np.shape(t), out.shape)).copy()
        return float(out[0]) if scalar and out.size == 1 else out

    return _with_common(rho=0.5, u0=u0, u0_bar=u0_bar, D=D, example=1)


def _preset_2() -> ModelConfig:
    eps = 0.075
    a_max, T = 12.0, 10.0

    def u0(a, x):
        return np.exp(-6.0 * np.asarray(x) ** 2) / (eps + np.cosh(np.asarray(a) - 7.0))

    def u0_bar(t, x):
        return np.exp(-6.0 * np.asarray(x) ** 2) / (eps + np.cosh(3.0 * np.asarray(t) - 7.0))

    def D(t, a):
        out = np.exp(-((np.asarray(t, dtype=float) - 8.0 * T) ** 2) / T) * (a_max - np.asarray(a, dtype=float))
        return float(out) if out.ndim == 0 else out

    return _with_common(rho=7.0, u0=u0, u0_bar=u0_bar, D=D, example=2)


def _preset_3() -> ModelConfig:
    eps = 0.5
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * eps)
    a_max, T = 12.0, 10.0

    def u0(a, x):
        return norm * (2.0 - np.sin(np.pi / 4.0 * (np.asarray(a) - 3.0))) * np.exp(-((np.asarray(x) - 0.25) ** 2))

    def u0_bar(t, x):
        return norm * (2.0 - np.sin(np.pi / 4.0 * (np.asarray(t) - 3.0))) * np.exp(-((np.asarray(x) - 0.25) ** 2))

    def D(t, a):
        out = np.exp(-((np.asarray(t, dtype=float) - 2.0 * T) ** 2) - (np.asarray(a, dtype=float) - 2.0 * a_max) ** 2)
        return float(out) if out.ndim == 0 else out

    return _with_common(rho=0.36, u0=u0, u0_bar=u0_bar, D=D, example=3)


def _with_common(rho, u0, u0_bar, D, example) -> ModelConfig:
    a_max = 12.0

    def mu(a):
        out = 1.0 / (a_max - np.asarray(a, dtype=float))
        return float(out) if out.ndim == 0 else out

    return ModelConfig(
        rho=rho, K_gomp=1.0, d_gomp=1.0, ell=1.0, a_max=a_max, T=10.0,
        M=200, N=6, dx=0.05, D=D, mu=mu, u0=u0, u0_bar=u0_bar,
        example=example, label=f"example-{example}",
    )


_PRESETS = {1: _preset_1, 2: _preset_2, 3: _preset_3}


def preset(example_id: int) -> ModelConfig:
    """Full configuration of one of the three reference experiments."""
    try:
        builder = _PRESETS[example_id]
    except KeyError:
        raise ConfigError(f"unknown preset {example_id!r}; choose 1, 2 or 3") from None
    return builder()


def validate_config(cfg: ModelConfig) -> GridSpec:
    """Check grid constraints, compatibility, and positivity; returns the grid.

    Raises ConfigError whose message lists every offending field.
    """
    problems: list[str] = []
    for name in ("T", "ell", "a_max", "dx"):
        if getattr(cfg, name) <= 0:
            problems.append(f"{name} must be positive (got {getattr(cfg, name)})")
    if cfg.M < 2:
        problems.append(f"M must be at least 2 (got {cfg.M})")
    if not 1 <= cfg.N <= 12:
        problems.append(f"N must be in 1..12 (got {cfg.N})")
    if cfg.d_gomp <= 0:
        problems.append(f"d_gomp must be positive (got {cfg.d_gomp})")
    grid = None
    if not problems:
        try:
            grid = GridSpec.from_config(cfg)
        except ConfigError as exc:
            problems.append(str(exc))
    if grid is not None:
        xs = grid.x_nodes
        u0_line = np.asarray(cfg.u0(0.0, xs), dtype=float)
        ub_line = np.asarray(cfg.u0_bar(0.0, xs), dtype=float)
        scale = np.max(np.abs(u0_line))
        if scale == 0 or np.max(np.abs(u0_line - ub_line)) > 1e-9 * scale:
            problems.append("compatibility condition u0(0,.) == u0_bar(0,.) violated on the x-grid")
        aa, xx = np.meshgrid(grid.a_nodes, xs, indexing="ij")
        u0_grid = np.asarray(cfg.u0(aa, xx), dtype=float)
        if not np.all(u0_grid > 0.0):
            ja, jx = np.unravel_index(int(np.argmin(u0_grid)), u0_grid.shape)
            problems.append(
                f"u0 must be strictly positive on the grid; "
                f"min {u0_grid[ja, jx]:.3g} at (a={grid.a_nodes[ja]:g}, x={xs[jx]:g})"
            )
        tt, xx = np.meshgrid(grid.t_nodes, xs, indexing="ij")
        ub_grid = np.asarray(cfg.u0_bar(tt, xx), dtype=float)
        if not np.all(ub_grid > 0.0):
            jt, jx = np.unravel_index(int(np.argmin(ub_grid)), ub_grid.shape)
            problems.append(
                f"u0_bar must be strictly positive on the grid; "
                f"min {ub_grid[jt, jx]:.3g} at (t={grid.t_nodes[jt]:g}, x={xs[jx]:g})"
            )
    if problems:
        raise ConfigError("; ".join(problems))
    assert grid is not None
    return grid


# ---------------------------------------------------------------------------
# config files: JSON with either a preset id or tabulated coefficient grids

_SCALAR_KEYS = ("rho", "K_gomp", "d_gomp", "ell", "a_max", "T", "M", "N", "dx")


def _read_table(path: Path, cols: tuple[str, str, str]):
    """CSV with a Cartesian product grid in the first two columns."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty table")
    missing = [c for c in cols if c not in rows[0]]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}; expected header {','.join(cols)}")
    ax0 = np.array(sorted({float(r[cols[0]]) for r in rows}))
    ax1 = np.array(sorted({float(r[cols[1]]) for r in rows}))
    vals = np.full((len(ax0), len(ax1)), np.nan)
    i0 = {v: i for i, v in enumerate(ax0)}
    i1 = {v: i for i, v in enumerate(ax1)}
    for r in rows:
        vals[i0[float(r[cols[0]])], i1[float(r[cols[1]])]] = float(r[cols[2]])
    if np.any(np.isnan(vals)):
        raise ConfigError(f"{path}: grid is not a complete Cartesian product of {cols[0]} and {cols[1]}")
    return ax0, ax1, vals


def _bilinear(ax0, ax1, vals):
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator((ax0, ax1), vals, method="linear", bounds_error=False, fill_value=None)

    def f(p, q):
        p_arr, q_arr = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        out = interp(np.stack([p_arr.ravel(), q_arr.ravel()], axis=-1)).reshape(p_arr.shape)
        return float(out) if out.ndim == 0 else out

    return f


def load_config(path, overrides: dict | None = None) -> ModelConfig:
    """Build a ModelConfig from a JSON file, with optional scalar overrides.

    The file either names a preset (``example``) whose scalars may be
    overridden, or supplies all four tabulated inputs (``u0_csv`` with
    columns a,x,u0; ``u0_bar_csv`` with t,x,u0_bar; ``D_csv`` with
    t,a,D; ``mu_csv`` with a,mu), resolved relative to the file.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    unknown = set(raw) - set(_SCALAR_KEYS) - {"example", "u0_csv", "u0_bar_csv", "D_csv", "mu_csv"}
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")

    if "example" in raw:
        cfg = preset(int(raw["example"]))
    else:
        tables = {k: raw.get(k) for k in ("u0_csv", "u0_bar_csv", "D_csv", "mu_csv")}
        missing = [k for k, v in tables.items() if v is None]
        if missing:
            raise ConfigError(f"{path}: without 'example', all tabulated inputs are required; missing {missing}")
        base = path.parent
        a_ax, x_ax, u0_vals = _read_table(base / tables["u0_csv"], ("a", "x", "u0"))
        t_ax, xb_ax, ub_vals = _read_table(base / tables["u0_bar_csv"], ("t", "x", "u0_bar"))
        td_ax, ad_ax, d_vals = _read_table(base / tables["D_csv"], ("t", "a", "D"))
        with open(base / tables["mu_csv"], newline="") as fh:
            mu_rows = list(csv.DictReader(fh))
        if not mu_rows or "a" not in mu_rows[0] or "mu" not in mu_rows[0]:
            raise ConfigError(f"{tables['mu_csv']}: expected header a,mu")
        mu_a = np.array([float(r["a"]) for r in mu_rows])
        mu_v = np.array([float(r["mu"]) for r in mu_rows])
        order = np.argsort(mu_a)
        mu_a, mu_v = mu_a[order], mu_v[order]

        def mu(a):
            out = np.interp(np.asarray(a, dtype=float), mu_a, mu_v)
            return float(out) if out.ndim == 0 else out

        # survival consistent with the tabulated mortality: exp(-int mu)
        dense_a = np.linspace(mu_a[0], mu_a[-1], 4 * len(mu_a) + 1)
        dense_mu = np.interp(dense_a, mu_a, mu_v)
        from scipy.integrate import cumulative_trapezoid

        cum = np.concatenate([[0.0], cumulative_trapezoid(dense_mu, dense_a)])
        pi_tab = np.exp(-cum)

        def survival_fn(a):
            out = np.interp(np.asarray(a, dtype=float), dense_a, pi_tab)
            return float(out) if out.ndim == 0 else out

        cfg = ModelConfig(
            rho=0.0, K_gomp=1.0, d_gomp=1.0,
            ell=float(x_ax[-1]), a_max=float(raw.get("a_max", a_ax[-1])),
            T=float(raw.get("T", t_ax[-1])), M=int(raw.get("M", 2)), N=int(raw.get("N", 6)),
            dx=float(raw.get("dx", x_ax[1] - x_ax[0])),
            D=_bilinear(td_ax, ad_ax, d_vals), mu=mu,
            u0=_bilinear(a_ax, x_ax, u0_vals), u0_bar=_bilinear(t_ax, xb_ax, ub_vals),
            survival_fn=survival_fn, label=path.stem,
        )

    scalars = {k: raw[k] for k in _SCALAR_KEYS if k in raw}
    if overrides:
        scalars.update({k: v for k, v in overrides.items() if v is not None})
    for k in ("M", "N"):
        if k in scalars:
            scalars[k] = int(scalars[k])
    for k in set(scalars) - {"M", "N"}:
        scalars[k] = float(scalars[k])
    return replace(cfg, **scalars) if scalars else cfg
