import math
from dataclasses import replace

import numpy as np
import pytest

from fkgompertz import CFLError, OracleConfig, preset, solve_reference
from test_stepper import tiny_config


def constant_config(c=2.0, rho=0.0, D_const=0.0, mu_zero=True, M=8):
    def const_u0(a, x):
        return np.full_like(np.asarray(a, dtype=float) + np.asarray(x, dtype=float), c)

    def const_ub(t, x):
        return np.full_like(np.asarray(t, dtype=float) + np.asarray(x, dtype=float), c)

    cfg = tiny_config(rho=rho, M=M, N=2, D_const=D_const)
    if mu_zero:
        def mu(a):
            out = 0.0 * np.asarray(a, dtype=float)
            return float(out) if out.ndim == 0 else out

        cfg = replace(cfg, mu=mu)
    return replace(cfg, u0=const_u0, u0_bar=const_ub)


class TestReferenceSolver:
    def test_constant_preserved_without_physics(self):
        # D = 0, mu = 0, rho = 0: pure transport of a constant
        field = solve_reference(OracleConfig(constant_config()))
        assert field.u == pytest.approx(np.full_like(field.u, 2.0), rel=1e-13)

    def test_carrying_level_fixed_point_under_diffusion(self):
        # u = e^{K/d}: Gompertz source vanishes, diffusion of a constant is zero
        field = solve_reference(OracleConfig(constant_config(c=math.e, rho=0.5, D_const=0.01)))
        assert field.u == pytest.approx(np.full_like(field.u, math.e), rel=1e-12)

    def test_gompertz_growth_against_closed_form(self):
        # x-independent data, D=0, mu=0: u(s) = e^{K/d} exp(ln(u0 e^{-K/d}) e^{-rho s})
        rho = 0.8
        u0 = 0.7
        cfg = constant_config(c=u0, rho=rho, M=64)
        field = solve_reference(OracleConfig(cfg))
        s = 1.0  # follow the characteristic from (0, a0) for one month
        exact = math.e * math.exp(math.log(u0 / math.e) * math.exp(-rho * s))
        j1 = np.searchsorted(field.a_nodes, 1.0)  # a = a0 + 1 with a0 = a_j1 - 1
        got = field.u[-1, j1, 5]
        # forward Euler on the source: first-order accurate
        assert got == pytest.approx(exact, rel=5e-3)
        # and the error shrinks with the step
        fine = solve_reference(OracleConfig(constant_config(c=u0, rho=rho, M=256)))
        got_fine = fine.u[-1, np.searchsorted(fine.a_nodes, 1.0), 5]
        assert abs(got_fine - exact) < abs(got - exact)

    def test_death_decay_along_characteristic(self):
        # D = 0, rho = 0, mu = 1/(a_max - a): exact decay factor Pi(a)/Pi(a0)
        cfg = constant_config(c=2.0, rho=0.0, mu_zero=False, M=128)
        field = solve_reference(OracleConfig(cfg))
        a0, s = 0.5, 1.0
        j = int(round((a0 + s) / (field.a_nodes[1] - field.a_nodes[0])))
        exact = 2.0 * (cfg.a_max - (a0 + s)) / (cfg.a_max - a0)
        assert field.u[-1, j, 10] == pytest.approx(exact, rel=5e-3)

    def test_cfl_rejection_names_refinement(self):
        cfg = replace(tiny_config(D_const=0.5), M=4)  # dt = 0.25, dx = 0.1: CFL = 12.5
        with pytest.raises(CFLError) as err:
            solve_reference(OracleConfig(cfg))
        assert "refine time by at least" in str(err.value)

    def test_refinement_factors_keep_output_grid(self):
        cfg = constant_config()
        coarse = solve_reference(OracleConfig(cfg))
        refined = solve_reference(OracleConfig(cfg, refine_t=2, refine_x=2))
        assert refined.u.shape == coarse.u.shape
        assert refined.a_nodes == pytest.approx(coarse.a_nodes)
        assert refined.x_nodes == pytest.approx(coarse.x_nodes)

    def test_positivity_on_smooth_data(self):
        field = solve_reference(OracleConfig(tiny_config(M=16)))
        assert np.all(field.u > 0.0)

    def test_self_convergence_on_preset1_short_horizon(self):
        cfg = replace(preset(1), T=1.0, M=40)  # dt = 0.025: CFL = 0.3
        base = solve_reference(OracleConfig(cfg))
        fine = solve_reference(OracleConfig(cfg, refine_t=2))
        finer = solve_reference(OracleConfig(cfg, refine_t=4))
        d1 = np.max(np.abs(base.u[-1] - fine.u[-1]))
        d2 = np.max(np.abs(fine.u[-1] - finer.u[-1]))
        assert d2 < d1

    @pytest.mark.parametrize("ex", [1, 2])
    def test_self_convergence_simultaneous_refinement(self, ex):
        # halving dt and dx together shrinks the self-difference monotonically
        cfg = replace(preset(ex), T=0.25, M=40)  # CFL at (4,4) stays 16/4 * base
        u = {r: solve_reference(OracleConfig(cfg, refine_t=r, refine_x=r)).u[-1] for r in (1, 2, 4)}
        d1 = np.max(np.abs(u[1] - u[2]))
        d2 = np.max(np.abs(u[2] - u[4]))
        assert d2 < d1
