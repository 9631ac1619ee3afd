"""Brute-force reference solver for the original density PDE.

Discretizes the untransformed equation directly: upwind stepping along
the t = a characteristic for the transport part, centered second
difference with ghost-point zero-Neumann boundaries for diffusion, and
the explicit Gompertz source, all in the density variable u.  It shares
no code path with the spectral solver on purpose; it exists only so
tests have an independent route to the same physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, validate_config
from .stepper import DensityField

__all__ = ["CFLError", "OracleConfig", "solve_reference"]


class CFLError(ValueError):
    """Diffusion CFL violated; message states the refinement needed."""


@dataclass(frozen=True)
class OracleConfig:
    base: ModelConfig
    refine_t: int = 1
    refine_x: int = 1

    def __post_init__(self) -> None:
        if self.refine_t < 1 or self.refine_x < 1:
            raise ValueError("refinement factors must be >= 1")


def solve_reference(cfg_o: OracleConfig) -> DensityField:
    """March the density PDE on a (possibly refined) lattice.

    Output is sampled back on the coarse solver grid (every time node,
    all coarse age and x nodes), so fields are directly comparable with
    the spectral solver's reconstruction.
    """
    cfg = cfg_o.base
    coarse = validate_config(cfg)
    rt, rx = cfg_o.refine_t, cfg_o.refine_x

    dt = coarse.dt / rt
    dx = (coarse.x_nodes[1] - coarse.x_nodes[0]) / rx
    n_x = (len(coarse.x_nodes) - 1) * rx + 1
    xs = -cfg.ell + np.arange(n_x) * dx
    xs[-1] = cfg.ell
    n_t = cfg.M * rt + 1
    ts = np.arange(n_t) * dt
    j_max = int(math.floor((cfg.a_max - 1e-12) / dt))
    while j_max * dt >= cfg.a_max - 1e-12 * cfg.a_max:
        j_max -= 1
    a = np.arange(j_max + 1) * dt

    tt, aa = np.meshgrid(ts, a, indexing="ij")
    d_grid = np.broadcast_to(np.asarray(cfg.D(tt, aa), dtype=float), tt.shape)
    d_max = float(d_grid.max())
    cfl = d_max * dt / dx**2
    if cfl > 0.5:
        need = math.ceil(2.0 * d_max * coarse.dt / dx**2)
        raise CFLError(
            f"diffusion CFL D*dt/dx^2 = {cfl:.3f} > 0.5; "
            f"refine time by at least {need} (refine_t={rt} given)"
        )

    mu = np.asarray(cfg.mu(a), dtype=float)
    kd = cfg.Kd_ratio
    aa0, xx0 = np.meshgrid(a, xs, indexing="ij")
    current = np.asarray(cfg.u0(aa0, xx0), dtype=float)
    newborn = np.asarray(cfg.u0_bar(np.meshgrid(ts, xs, indexing="ij")[0],
                                    np.meshgrid(ts, xs, indexing="ij")[1]), dtype=float)

    # only two time levels are kept; coarse-lattice snapshots are sampled out
    a_idx = np.arange(len(coarse.a_nodes)) * rt
    x_idx = np.arange(len(coarse.x_nodes)) * rx
    out = np.empty((cfg.M + 1, len(a_idx), len(x_idx)))
    out[0] = current[np.ix_(a_idx, x_idx)]

    for i in range(1, n_t):
        prev = current[:-1]                       # ancestors (i-1, j-1)
        d_row = d_grid[i - 1, :-1][:, None]
        lap = np.empty_like(prev)
        lap[:, 1:-1] = (prev[:, 2:] - 2.0 * prev[:, 1:-1] + prev[:, :-2]) / dx**2
        lap[:, 0] = 2.0 * (prev[:, 1] - prev[:, 0]) / dx**2      # ghost: u[-1] = u[1]
        lap[:, -1] = 2.0 * (prev[:, -2] - prev[:, -1]) / dx**2   # ghost: u[n+1] = u[n-1]
        source = -cfg.rho * prev * (np.log(prev) - kd)
        nxt = np.empty_like(current)
        nxt[0] = newborn[i]
        nxt[1:] = prev + dt * (d_row * lap - mu[:-1, None] * prev + source)
        current = nxt
        if i % rt == 0:
            out[i // rt] = current[np.ix_(a_idx, x_idx)]

    return DensityField(
        t_indices=tuple(range(cfg.M + 1)),
        t_values=coarse.t_nodes.copy(),
        a_nodes=coarse.a_nodes.copy(),
        x_nodes=coarse.x_nodes.copy(),
        u=out,
    )
