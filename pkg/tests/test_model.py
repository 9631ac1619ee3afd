import json
import math

import numpy as np
import pytest

from fkgompertz import (
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


class TestSurvival:
    def test_newborn(self):
        assert survival(0.0, 12.0) == 1.0

    def test_maximum_age(self):
        assert survival(12.0, 12.0) == 0.0

    def test_interior(self):
        assert survival(3.0, 12.0) == pytest.approx(0.75)

    def test_affine_decreasing(self):
        a = np.linspace(0, 12, 25)
        s = survival(a, 12.0)
        assert np.all(np.diff(s) < 0)
        assert np.allclose(np.diff(s, 2), 0.0, atol=1e-12)

    def test_rejects_outside(self):
        with pytest.raises(TransformError):
            survival(-0.5, 12.0)
        with pytest.raises(TransformError):
            survival(12.5, 12.0)


class TestTransforms:
    def test_forward_example(self):
        cfg = preset(1)  # K_gomp = d_gomp = 1
        assert forward_transform(math.e**2, 0.0, cfg) == pytest.approx(1.0, rel=1e-13)

    def test_forward_carrying_level_maps_to_zero(self):
        cfg = preset(1)
        assert forward_transform(math.e, 5.0, cfg) == pytest.approx(0.0, abs=1e-13)

    def test_roundtrip(self):
        cfg = preset(1)
        for u in (0.01, 0.5, 1.0, math.e, 40.0):
            for a in (0.0, 3.7, 11.0):
                assert inverse_transform(forward_transform(u, a, cfg), a, cfg) == pytest.approx(u, rel=1e-12)

    def test_inverse_at_zero(self):
        cfg = preset(1)
        assert inverse_transform(0.0, 4.0, cfg) == pytest.approx(math.e, rel=1e-13)

    def test_inverse_at_max_age_ignores_v(self):
        cfg = preset(1)
        assert inverse_transform(1e6, 12.0, cfg) == pytest.approx(math.e, rel=1e-13)

    def test_inverse_direct(self):
        cfg = preset(1)
        # Pi = 0.5 at a = 6: u = e * e^(0.5*2) = e^2
        assert inverse_transform(2.0, 6.0, cfg) == pytest.approx(math.e**2, rel=1e-13)

    def test_forward_rejects_nonpositive_density(self):
        cfg = preset(1)
        with pytest.raises(TransformError):
            forward_transform(0.0, 1.0, cfg)

    def test_forward_rejects_singular_age(self):
        cfg = preset(1)
        with pytest.raises(TransformError):
            forward_transform(1.0, 12.0, cfg)

    def test_inverse_overflow_guard(self):
        cfg = preset(1)
        with pytest.raises(TransformError):
            inverse_transform(4000.0, 6.0, cfg)  # Pi*v = 2000 > 700


class TestPresets:
    @pytest.mark.parametrize("ex,rho", [(1, 0.5), (2, 7.0), (3, 0.36)])
    def test_rho(self, ex, rho):
        assert preset(ex).rho == rho

    def test_common_fixed_parameters(self):
        for ex in (1, 2, 3):
            cfg = preset(ex)
            assert (cfg.ell, cfg.dx, cfg.T, cfg.a_max) == (1.0, 0.05, 10.0, 12.0)
            assert (cfg.K_gomp, cfg.d_gomp) == (1.0, 1.0)

    def test_preset2_initial_peak(self):
        assert preset(2).u0(7.0, 0.0) == pytest.approx(1.0 / 1.075, rel=1e-13)

    @pytest.mark.parametrize("ex", [1, 2, 3])
    def test_compatibility_and_positivity(self, ex):
        validate_config(preset(ex))  # raises on violation

    def test_rejects_unknown(self):
        with pytest.raises(ConfigError):
            preset(4)

    def test_mortality_law(self):
        cfg = preset(1)
        assert cfg.mu(3.0) == pytest.approx(1.0 / 9.0, rel=1e-13)


class TestDiffusion:
    def test_example1_newborn_limit(self):
        assert eval_diffusion(preset(1), 0.0, 0.0) == pytest.approx(0.03, rel=1e-12)

    def test_example1_immobile_youngsters(self):
        assert eval_diffusion(preset(1), 5.0, 1.5) == pytest.approx(0.0, abs=1e-15)

    def test_example1_vectorized(self):
        d = eval_diffusion(preset(1), 0.0, np.array([0.0, 1.5, 12.0]))
        assert d[0] == pytest.approx(0.03)
        assert d[1] == pytest.approx(0.0, abs=1e-15)
        assert 0.0 < d[2] <= 0.03

    def test_example2_negligible(self):
        # exp(-(0-80)^2/10) * 12 is ~1e-277: effectively zero diffusion
        assert eval_diffusion(preset(2), 0.0, 0.0) <= 1e-250

    def test_example3_negligible(self):
        assert eval_diffusion(preset(3), 0.0, 0.0) <= 1e-150


class TestGridSpec:
    def test_age_nodes_strictly_below_max(self):
        grid = GridSpec.from_config(preset(1))  # M=200, dt=0.05, a_max=12
        assert grid.dt == pytest.approx(0.05)
        assert grid.a_nodes[-1] == pytest.approx(12.0 - 0.05)
        assert grid.a_nodes[-1] < 12.0

    def test_x_nodes_symmetric(self):
        grid = GridSpec.from_config(preset(1))
        assert grid.x_nodes[0] == -1.0
        assert grid.x_nodes[-1] == 1.0
        assert len(grid.x_nodes) == 41
        assert grid.x_nodes == pytest.approx(-grid.x_nodes[::-1])

    def test_rejects_mismatched_dx(self):
        from dataclasses import replace

        with pytest.raises(ConfigError):
            GridSpec.from_config(replace(preset(1), dx=0.03))


class TestValidation:
    def test_lists_every_problem(self):
        from dataclasses import replace

        bad = replace(preset(1), M=1, N=0, T=-2.0)
        with pytest.raises(ConfigError) as err:
            validate_config(bad)
        msg = str(err.value)
        assert "M" in msg and "N" in msg and "T" in msg

    def test_positivity_failure_is_located(self):
        from dataclasses import replace

        cfg = replace(preset(1), u0=lambda a, x: np.asarray(a) - 6.0 + 0.0 * np.asarray(x),
                      u0_bar=lambda t, x: np.asarray(t) - 6.0 + 0.0 * np.asarray(x))
        with pytest.raises(ConfigError) as err:
            validate_config(cfg)
        assert "strictly positive" in str(err.value)
        assert "a=" in str(err.value)


class TestConfigFiles:
    def test_preset_with_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"example": 1, "M": 40}))
        cfg = load_config(path)
        assert cfg.example == 1
        assert cfg.M == 40
        cfg2 = load_config(path, {"M": 80, "N": 4})
        assert (cfg2.M, cfg2.N) == (80, 4)

    def test_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"example": 1, "bogus": 3}))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_tabulated_config(self, tmp_path):
        a_ax = np.linspace(0.0, 12.0, 25)
        t_ax = np.linspace(0.0, 1.0, 11)
        x_ax = np.linspace(-1.0, 1.0, 21)

        def table(p, name, cols, rows_iter):
            lines = [",".join(cols)]
            lines += [",".join(f"{v:.12g}" for v in row) for row in rows_iter]
            (tmp_path / name).write_text("\n".join(lines) + "\n")

        table(tmp_path, "u0.csv", ("a", "x", "u0"),
              ((a, x, 2.0) for a in a_ax for x in x_ax))
        table(tmp_path, "ub.csv", ("t", "x", "u0_bar"),
              ((t, x, 2.0) for t in t_ax for x in x_ax))
        table(tmp_path, "D.csv", ("t", "a", "D"),
              ((t, a, 0.01) for t in t_ax for a in a_ax))
        table(tmp_path, "mu.csv", ("a", "mu"), ((a, 0.0) for a in a_ax))
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "u0_csv": "u0.csv", "u0_bar_csv": "ub.csv", "D_csv": "D.csv", "mu_csv": "mu.csv",
            "rho": 0.1, "T": 1.0, "M": 10, "N": 3, "dx": 0.1, "a_max": 12.0,
        }))
        cfg = load_config(cfg_path)
        assert cfg.u0(3.0, 0.25) == pytest.approx(2.0)
        assert cfg.mu(5.0) == 0.0
        assert cfg.D(0.5, 6.0) == pytest.approx(0.01)
        validate_config(cfg)

    def test_tabulated_requires_all_tables(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"rho": 0.1}))
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "u0_csv" in str(err.value)
