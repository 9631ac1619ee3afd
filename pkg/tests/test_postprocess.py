import math

import numpy as np
import pytest

from fkgompertz import e_max, total_population, truncation_study
from fkgompertz.postprocess import (
    export_density,
    export_series,
    export_summary,
    export_truncation,
    ObservableSeries,
)
from fkgompertz.stability import StabilityReport
from fkgompertz.stepper import BlowupDiagnostic, DensityField


def make_field(u_value=1.0, dt=0.05, a_max=12.0):
    a = np.arange(int(round(a_max / dt))) * dt  # top node a_max - dt, as the solver grid
    x = np.linspace(-1.0, 1.0, 41)
    t = np.array([0.0, dt])
    u = np.full((2, len(a), len(x)), u_value)
    return DensityField(t_indices=(0, 1), t_values=t, a_nodes=a, x_nodes=x, u=u)


class TestTotalPopulation:
    def test_unit_density(self):
        # area = 2 * (12 - dt) = 24 * (1 - dt/12) with the top age node excluded
        field = make_field(1.0, dt=0.05)
        series = total_population(field)
        assert series.p == pytest.approx(np.full(2, 24.0 * (1.0 - 0.05 / 12.0)), rel=1e-12)

    def test_carrying_level_density(self):
        field = make_field(math.e, dt=0.05)
        series = total_population(field)
        assert series.p[0] == pytest.approx(math.e * (24.0 - 2 * 0.05), rel=1e-12)

    def test_linear_and_monotone(self):
        f1 = make_field(1.0)
        f3 = make_field(3.0)
        p1 = total_population(f1).p
        p3 = total_population(f3).p
        assert p3 == pytest.approx(3.0 * p1, rel=1e-12)
        assert np.all(p3 > p1)


class TestEmax:
    def test_identical_fields(self):
        a = np.random.default_rng(0).normal(size=(5, 7))
        assert e_max(a, a) == 0.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        ref = rng.normal(size=(4, 6))
        trunc = ref + 0.01 * rng.normal(size=(4, 6))
        assert e_max(7.5 * ref, 7.5 * trunc) == pytest.approx(e_max(ref, trunc), rel=1e-12)

    def test_rejects_zero_reference(self):
        with pytest.raises(ValueError):
            e_max(np.zeros((2, 2)), np.ones((2, 2)))

    def test_hand_value(self):
        ref = np.array([[2.0, -4.0]])
        trunc = np.array([[2.5, -4.0]])
        assert e_max(ref, trunc) == pytest.approx(12.5)  # 0.5/4 * 100


class TestTruncationStudy:
    @pytest.mark.parametrize("ex", [1, 2, 3])
    def test_monotone_in_n(self, ex):
        rows = truncation_study(ex, (2, 4, 6))
        errs = [r[2] for r in rows]
        assert errs[0] > errs[1] > errs[2]

    def test_example1_table_values(self):
        rows = truncation_study(1, (2, 4, 6), grid="paper41")
        got = [r[2] for r in rows]
        for g, expected in zip(got, (29.35, 0.972, 0.012)):
            assert abs(g - expected) <= max(0.05 * expected, 0.05)

    def test_example3_table_values(self):
        rows = truncation_study(3, (2, 4, 6), grid="paper41")
        got = [r[2] for r in rows]
        for g, expected in zip(got, (61.33, 5.951, 0.134)):
            assert abs(g - expected) <= max(0.05 * expected, 0.05)

    def test_unknown_grid_rejected(self):
        with pytest.raises(ValueError):
            truncation_study(1, (2,), grid="bogus")


def dummy_report(**overrides):
    base = dict(
        C=1.5, S_inv_frob=2.0, P_sum=10.0, dt_admissible=False,
        max_norm_observed=2.9, bound_2C=3.0, amplification=2.4,
        condition_lhs=1.0, condition_threshold=0.2, bound_satisfied=True,
    )
    base.update(overrides)
    return StabilityReport(**base)


class TestExport:
    def test_density_csv(self, tmp_path):
        field = make_field(1.25, dt=0.5, a_max=2.0)
        path = export_density(field, 1, tmp_path)
        assert path.name == "density_t0.500000.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "a,x,u"
        assert len(lines) == 1 + len(field.a_nodes) * len(field.x_nodes)
        assert lines[1].split(",")[2] == "1.25"

    def test_series_csv(self, tmp_path):
        series = ObservableSeries(t=np.array([0.0, 1.0]), p=np.array([2.0, 3.0]))
        path = export_series(series, tmp_path)
        assert path.read_text().splitlines() == ["t,p", "0,2", "1,3"]

    def test_truncation_csv(self, tmp_path):
        path = export_truncation([(1, 2, 29.35), (1, 4, 0.972)], tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0] == "example,N,E_max_percent"
        assert lines[1] == "1,2,29.350000000000001"

    def test_summary_csv_with_blowup(self, tmp_path):
        path = export_summary(tmp_path, "1", 200, 6, 0.05, dummy_report(), BlowupDiagnostic(3, 7, 1e5))
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        assert header == [
            "example", "M", "N", "dt", "C", "S_inv_frob", "P_sum", "dt_admissible",
            "max_norm_observed", "bound_2C", "amplification", "blowup_node",
        ]
        row = lines[1].split(",")
        assert row[0] == "1" and row[7] == "false" and row[-1] == "3:7"

    def test_summary_csv_clean_run(self, tmp_path):
        path = export_summary(tmp_path, "2", 100, 6, 0.1, dummy_report(dt_admissible=True), None)
        assert path.read_text().splitlines()[1].split(",")[-1] == ""

    def test_byte_stable(self, tmp_path):
        field = make_field(1.0, dt=0.5, a_max=2.0)
        p1 = export_density(field, 0, tmp_path)
        first = p1.read_bytes()
        p2 = export_density(field, 0, tmp_path)
        assert p2.read_bytes() == first
