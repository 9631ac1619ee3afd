"""Command-line interface: run, truncation-study, stability-report, validate."""

from __future__ import annotations

import argparse
import sys as _sys
from pathlib import Path

import numpy as np

from .basis import BasisError, build_basis
from .galerkin import assemble_structure
from .model import ConfigError, ModelConfig, TransformError, load_config, preset, validate_config
from .postprocess import (
    EMAX_GRIDS,
    ObservableSeries,
    export_density,
    export_series,
    export_summary,
    export_truncation,
    total_population,
    truncation_study,
)
from .stability import build_report, p_sum_lattice
from .stepper import reconstruct, solve

DEFAULT_TIMES = (2.5, 5.0, 7.5, 10.0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fkgompertz",
        description="Explicit Fourier-Klibanov solver for the age-dependent Gompertz tumor model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True, with_n=True):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--preset", type=int, choices=(1, 2, 3), help="built-in experiment id")
        g.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--M", type=int, default=None, help="override the number of time steps")
        if with_n:
            p.add_argument("--N", type=int, default=None, help="override the basis cut-off")
        if with_out:
            p.add_argument("--out", type=Path, default=Path("out"), help="output directory")

    run = sub.add_parser("run", help="solve, reconstruct, and export observables")
    add_common(run)
    run.add_argument("--times", type=str, default=",".join(str(t) for t in DEFAULT_TIMES),
                     help="comma-separated report times (months)")
    run.add_argument("--sweep", type=str, default=None,
                     help="comma-separated M values; each runs into <out>/M<value>/")

    ts = sub.add_parser("truncation-study", help="relative max error of the truncated series")
    add_common(ts, with_n=False)
    ts.add_argument("--N", type=str, default="2,4,6", help="comma-separated cut-off values")
    ts.add_argument("--emax-grid", choices=EMAX_GRIDS, default="paper41",
                    help="age grid for the error evaluation")

    sr = sub.add_parser("stability-report", help="solve and export summary.csv only")
    add_common(sr)

    val = sub.add_parser("validate", help="check a configuration without solving")
    add_common(val, with_out=False)
    return parser


def _load(args) -> ModelConfig:
    overrides = {"M": getattr(args, "M", None), "N": getattr(args, "N", None)}
    if args.config is not None:
        return load_config(args.config, overrides)
    cfg = preset(args.preset)
    from dataclasses import replace

    clean = {k: int(v) for k, v in overrides.items() if v is not None}
    return replace(cfg, **clean) if clean else cfg


def _times_to_indices(times: list[float], dt: float, m: int) -> list[int]:
    idx = []
    for t in times:
        i = round(t / dt)
        if not 0 <= i <= m:
            raise ConfigError(f"report time {t} falls outside the simulated horizon")
        if i not in idx:
            idx.append(i)
    return idx


def _run_single(cfg: ModelConfig, times: list[float], out_dir: Path, density: bool = True) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    basis = build_basis(cfg.N, cfg.ell)
    system = assemble_structure(basis)
    field = solve(cfg, basis, system)
    grid = field.grid
    if density:
        idx = _times_to_indices(times, grid.dt, cfg.M)
        dens = reconstruct(field, basis, cfg, idx)
        for i in idx:
            export_density(dens, i, out_dir)
        # p(t) over every time node, reconstructed in blocks to bound memory
        p_parts = []
        for lo in range(0, cfg.M + 1, 100):
            block = list(range(lo, min(lo + 100, cfg.M + 1)))
            p_parts.append(total_population(reconstruct(field, basis, cfg, block)).p)
        series = ObservableSeries(t=grid.t_nodes.copy(), p=np.concatenate(p_parts))
        export_series(series, out_dir)
    assert field.stability is not None
    export_summary(
        out_dir,
        example=str(cfg.example) if cfg.example is not None else cfg.label,
        M=cfg.M, N=cfg.N, dt=grid.dt,
        report=field.stability, blowup=field.blowup,
    )
    if field.blowup is not None:
        print(f"warning: {field.blowup}", file=_sys.stderr)
        return 4
    return 0


def _cmd_run(args) -> int:
    cfg = _load(args)
    times = [float(t) for t in args.times.split(",") if t.strip()]
    if args.sweep:
        worst = 0
        for m_txt in args.sweep.split(","):
            m_val = int(m_txt)
            from dataclasses import replace

            rc = _run_single(replace(cfg, M=m_val), times, args.out / f"M{m_val}")
            worst = max(worst, rc)
        return worst
    return _run_single(cfg, times, args.out)


def _cmd_truncation(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
        if cfg.example is None:
            raise ConfigError("truncation-study requires a preset-based configuration")
        example_id = cfg.example
    else:
        example_id = args.preset
    n_list = tuple(int(v) for v in str(args.N).split(","))
    rows = truncation_study(example_id, n_list, grid=args.emax_grid)
    for _, n, err in rows:
        prev = [r[2] for r in rows if r[1] < n]
        if prev and err > min(prev) * (1 + 1e-9):
            print(f"warning: E_max increased at N={n}", file=_sys.stderr)
    args.out.mkdir(parents=True, exist_ok=True)
    path = export_truncation(rows, args.out)
    print(path)
    return 0


def _cmd_stability(args) -> int:
    cfg = _load(args)
    return _run_single(cfg, [], args.out, density=False)


def _cmd_validate(args) -> int:
    cfg = _load(args)
    grid = validate_config(cfg)
    basis = build_basis(cfg.N, cfg.ell)
    system = assemble_structure(basis)
    p_sum = p_sum_lattice(system, cfg, grid)
    # data bound from the boundary lines only; no marching
    from .stepper import _project_boundaries

    values = np.zeros((len(grid.t_nodes), len(grid.a_nodes), cfg.N))
    _project_boundaries(cfg, basis, grid, values)
    report = build_report(system, cfg, grid, values)
    print(f"configuration ok: M={cfg.M} N={cfg.N} dt={grid.dt:g} "
          f"ages 0..{grid.a_nodes[-1]:g} x {grid.x_nodes[0]:g}..{grid.x_nodes[-1]:g}")
    print(f"compatibility and positivity checks passed")
    print(f"data bound C = {report.C:.6g}")
    print(f"dt admissibility: lhs = dt*|S^-1|_F*P_sum = {report.condition_lhs:.6g} "
          f"vs threshold ln((C+1)/(C+1/2)) = {report.condition_threshold:.6g} "
          f"-> {'admissible' if report.dt_admissible else 'NOT admissible'}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "truncation-study": _cmd_truncation,
    "stability-report": _cmd_stability,
    "validate": _cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, BasisError, TransformError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=_sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
