"""Grid-refinement study harness: validation, accessors, CSV, threading."""

import math

import numpy as np
import pytest

import imexctrl.convergence as convergence
from imexctrl import (
    EXACT_CONTROL,
    OPTIMIZED,
    ConvergenceReport,
    ConvergenceRow,
    IntegrationError,
    builtin,
    run_convergence,
)


def synthetic_report():
    """Hand-built second-order decay with one awkward row."""
    rows = (
        ConvergenceRow(1.0, 10, "ok", {"err": 1.6e-2}),
        ConvergenceRow(1.0, 20, "ok", {"err": 4.0e-3}),
        ConvergenceRow(1.0, 40, "ok", {"err": 1.0e-3}),
        ConvergenceRow(1.0, 80, "ok", {"err": 0.0}),
        ConvergenceRow(0.5, 40, "failed: blew up", {"err": math.nan}),
    )
    return ConvergenceReport(
        scheme="demo",
        control_source=EXACT_CONTROL,
        interp="stored",
        reference_n=160,
        columns=("err",),
        rows=rows,
    )


class TestAccessors:
    def test_row_and_value_lookup(self):
        rep = synthetic_report()
        assert rep.row(1.0, 20).status == "ok"
        assert rep.value(1.0, 20, "err") == 4.0e-3
        with pytest.raises(KeyError):
            rep.row(1.0, 15)

    def test_ratio_and_order(self):
        rep = synthetic_report()
        assert rep.ratio(1.0, 20, "err") == pytest.approx(4.0)
        assert rep.observed_order(1.0, 20, "err") == pytest.approx(2.0)
        assert rep.observed_order(1.0, 40, "err") == pytest.approx(2.0)

    def test_ratio_undefined_cases(self):
        rep = synthetic_report()
        # no N/2 partner in the report
        assert rep.ratio(1.0, 10, "err") is None
        assert rep.ratio(0.5, 40, "err") is None  # NaN row
        assert rep.ratio(1.0, 80, "err") is None  # current error is zero
        assert rep.observed_order(1.0, 10, "err") is None

    def test_mean_observed_order_skips_undefined(self):
        rep = synthetic_report()
        mean = rep.mean_observed_order(1.0, "err", [20, 40, 80])
        assert mean == pytest.approx(2.0)
        assert math.isnan(rep.mean_observed_order(0.5, "err", [40]))


class TestCsv:
    def test_header_and_undefined_fields(self):
        rep = synthetic_report()
        lines = rep.to_csv().split("\n")
        assert lines[0] == "eps,N,status,err,ratio_err,observed_order_err"
        assert lines[-1] == ""
        first = lines[1].split(",")
        assert first[:3] == ["1", "10", "ok"]
        assert first[4] == "" and first[5] == ""
        second = lines[2].split(",")
        assert float(second[4]) == pytest.approx(4.0)
        assert float(second[5]) == pytest.approx(2.0)

    def test_failure_rows_keep_nan_values(self):
        lines = synthetic_report().to_csv().split("\n")
        failed = lines[5].split(",")
        assert failed[2] == "failed: blew up"
        assert failed[3] == "nan"

    def test_csv_ratio_consistency(self):
        tab = builtin("imex-ssp2")
        rep = run_convergence(tab, [1.0], [10, 20], reference_n=40)
        lines = rep.to_csv().split("\n")
        header = lines[0].split(",")
        col = header.index("err_x_inf")
        coarse = lines[1].split(",")
        fine = lines[2].split(",")
        recomputed = float(coarse[col]) / float(fine[col])
        assert float(fine[col + 1]) == pytest.approx(recomputed, rel=1e-15)


class TestValidation:
    def test_rejects_unsorted_grids(self):
        tab = builtin("imex-ssp2")
        with pytest.raises(ValueError):
            run_convergence(tab, [1.0], [20, 10], reference_n=40)

    def test_rejects_non_divisor_grid(self):
        tab = builtin("imex-ssp2")
        with pytest.raises(ValueError):
            run_convergence(tab, [1.0], [12], reference_n=40)

    def test_rejects_grid_at_reference_size(self):
        tab = builtin("imex-ssp2")
        with pytest.raises(ValueError):
            run_convergence(tab, [1.0], [40], reference_n=40)

    def test_rejects_unknown_modes(self):
        tab = builtin("imex-ssp2")
        with pytest.raises(ValueError):
            run_convergence(tab, [1.0], [10], reference_n=40, control_source="best")
        with pytest.raises(ValueError):
            run_convergence(tab, [1.0], [10], reference_n=40, interp="spline")

    def test_rejects_mixed_state_dimensions(self):
        # eps = 0 switches to the substituted two-state problem, so its rows
        # cannot share columns with relaxed ones
        tab = builtin("imex-ssp2")
        with pytest.raises(ValueError):
            run_convergence(tab, [0.0, 1.0], [10], reference_n=40)

    @pytest.mark.parametrize("value", ["zero", "0", "-2"])
    def test_invalid_thread_env(self, monkeypatch, value):
        tab = builtin("imex-ssp2")
        monkeypatch.setenv("IMEXCTRL_THREADS", value)
        with pytest.raises(ValueError):
            run_convergence(tab, [1.0], [10], reference_n=40)


class TestExactControlStudy:
    def test_relaxed_columns_and_decay(self):
        tab = builtin("imex-sa3")
        rep = run_convergence(tab, [10.0], [10, 20, 40], reference_n=80)
        assert rep.columns == (
            "F_inf", "err_x_inf", "err_z_inf", "err_p2_inf", "err_p3_inf"
        )
        assert all(r.status == "ok" for r in rep.rows)
        errs = [rep.value(10.0, n, "err_x_inf") for n in (10, 20, 40)]
        assert errs[0] > errs[1] > errs[2] > 0.0
        # third-order scheme: halving the step cuts the error well past 4x
        assert rep.ratio(10.0, 20, "err_x_inf") > 4.0

    def test_unrelaxed_columns(self):
        tab = builtin("imex-ssp2")
        rep = run_convergence(tab, [0.0], [10, 20], reference_n=40)
        assert rep.columns == ("F_inf", "err_x_inf", "err_p2_inf")
        assert all(r.status == "ok" for r in rep.rows)
        assert rep.observed_order(0.0, 20, "err_x_inf") == pytest.approx(2.0, abs=0.5)

    def test_interpolated_adjoint_tracks_stored(self):
        tab = builtin("imex-sa3")
        stored = run_convergence(tab, [1.0], [20], reference_n=80)
        poly = run_convergence(tab, [1.0], [20], reference_n=80, interp="poly3")
        a = stored.value(1.0, 20, "err_p2_inf")
        b = poly.value(1.0, 20, "err_p2_inf")
        # the cubic reconstruction shifts the adjoint error by its own
        # O(h^3) defect, which stays below the discretization error itself
        assert a / 2 <= b <= 2 * a

    def test_row_ordering_follows_input(self):
        tab = builtin("imex-ssp2")
        rep = run_convergence(tab, [1.0, 0.1], [10, 20], reference_n=40)
        assert [(r.eps, r.n_steps) for r in rep.rows] == [
            (1.0, 10), (1.0, 20), (0.1, 10), (0.1, 20)
        ]


class TestOptimizedStudy:
    def test_columns_and_convergence(self):
        tab = builtin("imex-ssp2")
        rep = run_convergence(
            tab, [0.0], [10, 20], reference_n=40, control_source=OPTIMIZED
        )
        assert rep.columns == ("norm_sq_F", "err_x_inf", "err_u_inf")
        for n in (10, 20):
            row = rep.row(0.0, n)
            assert row.status == "ok"
            assert row.values["norm_sq_F"] <= 1e-8
            assert row.values["err_u_inf"] > 0.0

    def test_unreachable_tolerance_marks_not_converged(self):
        tab = builtin("imex-ssp2")
        rep = run_convergence(
            tab, [0.0], [10], reference_n=20,
            control_source=OPTIMIZED, tol_norm_sq=0.0,
        )
        assert rep.row(0.0, 10).status == "not-converged"


class TestFailureHandling:
    def test_failed_cell_keeps_study_alive(self, monkeypatch):
        tab = builtin("imex-ssp2")
        real_forward = convergence.forward

        def flaky(tab_, prob, u, n_steps):
            if n_steps == 10:
                raise IntegrationError("stage solve diverged, badly", 3, 0, 1e2)
            return real_forward(tab_, prob, u, n_steps)

        monkeypatch.setattr(convergence, "forward", flaky)
        rep = run_convergence(tab, [1.0], [10, 20], reference_n=40)
        bad = rep.row(1.0, 10)
        assert bad.status.startswith("failed: stage solve diverged; badly")
        assert all(math.isnan(v) for v in bad.values.values())
        assert rep.row(1.0, 20).status == "ok"


class TestDeterminism:
    def test_csv_byte_stable_across_runs_and_thread_counts(self, monkeypatch):
        tab = builtin("imex-ssp2")
        first = run_convergence(tab, [1.0], [10, 20], reference_n=40).to_csv()
        second = run_convergence(tab, [1.0], [10, 20], reference_n=40).to_csv()
        assert first == second
        monkeypatch.setenv("IMEXCTRL_THREADS", "1")
        serial = run_convergence(tab, [1.0], [10, 20], reference_n=40).to_csv()
        assert serial == first
