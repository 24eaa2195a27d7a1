"""Grid-refinement studies on the relaxation benchmark.

Two study layouts over a list of stiffness values eps and grid sizes N,
each compared against a fine reference grid:

* ``exact_u_star``: the closed-form optimal control of the unrelaxed
  problem is sampled per stage; forward and adjoint runs on each grid are
  compared against the reference run in the max norm at shared grid
  points.  Columns: the stationarity residual ``F_inf`` plus state and
  adjoint errors.
* ``optimized``: each cell runs the reduced-gradient solver from u = 1;
  columns are the final squared residual plus state and control errors
  against the reference solve.

Ratios between successive grids and their base-2 logs (observed orders)
are derived from the error columns; the CSV rendering is byte-stable for
fixed inputs.  Cells run on a thread pool bounded by the IMEXCTRL_THREADS
environment variable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .integrate import (
    ControlGrid,
    IntegrationError,
    adjoint_backward,
    forward,
    interpolate_stage_states,
)
from .optimize import solve, stepwise_gradient
from .problems import hager_exact_control, hager_relaxed, hager_unrelaxed
from .tableau import ImexTableau

__all__ = [
    "ConvergenceRow",
    "ConvergenceReport",
    "run_convergence",
    "EXACT_CONTROL",
    "OPTIMIZED",
]

EXACT_CONTROL = "exact_u_star"
OPTIMIZED = "optimized"
_INTERP_ORDERS = {"stored": None, "poly2": 2, "poly3": 3}


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    n_steps: int
    status: str  # "ok" or a failure marker
    values: dict[str, float]


@dataclass(frozen=True)
class ConvergenceReport:
    """Study results with ratio/order accessors and CSV rendering."""

    scheme: str
    control_source: str
    interp: str
    reference_n: int
    columns: tuple[str, ...]
    rows: tuple[ConvergenceRow, ...]

    def row(self, eps: float, n_steps: int) -> ConvergenceRow:
        for r in self.rows:
            if r.eps == eps and r.n_steps == n_steps:
                return r
        raise KeyError(f"no row for eps={eps}, N={n_steps}")

    def value(self, eps: float, n_steps: int, column: str) -> float:
        return self.row(eps, n_steps).values[column]

    def ratio(self, eps: float, n_steps: int, column: str) -> float | None:
        """err(N/2) / err(N), when the N/2 row exists in the report."""
        if n_steps % 2:
            return None
        try:
            prev = self.value(eps, n_steps // 2, column)
            cur = self.value(eps, n_steps, column)
        except KeyError:
            return None
        if not (math.isfinite(prev) and math.isfinite(cur)) or cur == 0.0:
            return None
        return prev / cur

    def observed_order(self, eps: float, n_steps: int, column: str) -> float | None:
        r = self.ratio(eps, n_steps, column)
        if r is None or r <= 0.0:
            return None
        return math.log2(r)

    def mean_observed_order(self, eps: float, column: str, n_values) -> float:
        """Average observed order over the given rows (defined entries only)."""
        orders = [self.observed_order(eps, n, column) for n in n_values]
        orders = [o for o in orders if o is not None]
        if not orders:
            return math.nan
        return float(np.mean(orders))

    def to_csv(self) -> str:
        header = ["eps", "N", "status"]
        for col in self.columns:
            header += [col, f"ratio_{col}", f"observed_order_{col}"]
        lines = [",".join(header)]
        for r in self.rows:
            fields = [f"{r.eps:.17g}", str(r.n_steps), r.status]
            for col in self.columns:
                fields.append(f"{r.values[col]:.17g}")
                ratio = self.ratio(r.eps, r.n_steps, col)
                order = self.observed_order(r.eps, r.n_steps, col)
                fields.append("" if ratio is None else f"{ratio:.17g}")
                fields.append("" if order is None else f"{order:.17g}")
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"


def _worker_count(n_cells: int) -> int:
    env = os.environ.get("IMEXCTRL_THREADS", "").strip()
    if env:
        try:
            bound = int(env)
        except ValueError:
            raise ValueError(f"IMEXCTRL_THREADS must be an integer, got {env!r}") from None
        if bound < 1:
            raise ValueError(f"IMEXCTRL_THREADS must be >= 1, got {bound}")
    else:
        bound = os.cpu_count() or 1
    return max(1, min(bound, n_cells))


def _problem_for(eps: float):
    return hager_relaxed(eps) if eps > 0.0 else hager_unrelaxed()


def _forward_adjoint(tab, prob, n_steps, interp_order):
    u = ControlGrid.sample(hager_exact_control, n_steps, prob.horizon, tab)
    traj = forward(tab, prob, u, n_steps)
    states = (
        None
        if interp_order is None
        else interpolate_stage_states(traj, tab, interp_order)
    )
    adj_traj = adjoint_backward(tab, prob, traj, u, stage_states=states)
    return u, traj, adj_traj


def _exact_columns(state_dim: int) -> tuple[str, ...]:
    if state_dim == 3:
        return ("F_inf", "err_x_inf", "err_z_inf", "err_p2_inf", "err_p3_inf")
    return ("F_inf", "err_x_inf", "err_p2_inf")


def _exact_cell(tab, prob, n_steps, stride, ref, interp_order):
    u, traj, adj_traj = _forward_adjoint(tab, prob, n_steps, interp_order)
    _, ref_traj, ref_adj = ref
    f_vals = stepwise_gradient(prob, traj, adj_traj, u)
    vals = {"F_inf": float(np.max(np.abs(f_vals)))}
    y_ref = ref_traj.y[::stride]
    p_ref = ref_adj.p[::stride]
    vals["err_x_inf"] = float(np.max(np.abs(y_ref[:, 1] - traj.y[:, 1])))
    vals["err_p2_inf"] = float(np.max(np.abs(p_ref[:, 1] - adj_traj.p[:, 1])))
    if prob.state_dim == 3:
        vals["err_z_inf"] = float(np.max(np.abs(y_ref[:, 2] - traj.y[:, 2])))
        vals["err_p3_inf"] = float(np.max(np.abs(p_ref[:, 2] - adj_traj.p[:, 2])))
    return vals


_OPT_COLUMNS = ("norm_sq_F", "err_x_inf", "err_u_inf")


def _optimized_cell(tab, prob, n_steps, stride, ref_result, tol_norm_sq):
    u0 = ControlGrid.constant(1.0, n_steps, tab.s, prob.control_dim)
    res = solve(tab, prob, u0, tol_norm_sq=tol_norm_sq)
    x_ref = ref_result.trajectory.y[::stride, 1]
    u_ref = ref_result.u.step_values[::stride, 0]
    vals = {
        "norm_sq_F": res.final_norm_sq,
        "err_x_inf": float(np.max(np.abs(x_ref - res.trajectory.y[:, 1]))),
        # control comparison is left-aligned: coarse step n covers the same
        # interval start as fine step n * stride
        "err_u_inf": float(np.max(np.abs(u_ref - res.u.step_values[:, 0]))),
    }
    return vals, res.converged


def run_convergence(
    tab: ImexTableau,
    eps_values,
    n_values,
    reference_n: int = 640,
    control_source: str = EXACT_CONTROL,
    interp: str = "stored",
    tol_norm_sq: float = 1e-8,
) -> ConvergenceReport:
    """Run the study over all (eps, N) cells against the reference grid.

    ``n_values`` must be ascending divisors of ``reference_n`` (strictly
    smaller).  ``interp`` selects the adjoint stage-state source in
    exact-control mode: stored stages or degree-2/3 reconstruction.
    Failed cells are kept in the report with a failure marker and NaN
    values.
    """
    eps_values = [float(e) for e in eps_values]
    n_values = [int(n) for n in n_values]
    if sorted(n_values) != n_values:
        raise ValueError(f"n_values must be ascending, got {n_values}")
    for n in n_values:
        if n < 1 or reference_n % n != 0 or n >= reference_n:
            raise ValueError(
                f"each N must divide the reference grid {reference_n} and be "
                f"smaller, got {n}"
            )
    if control_source not in (EXACT_CONTROL, OPTIMIZED):
        raise ValueError(f"unknown control source {control_source!r}")
    if interp not in _INTERP_ORDERS:
        raise ValueError(f"unknown interpolation mode {interp!r}")
    if control_source == EXACT_CONTROL and any(e > 0 for e in eps_values) and any(
        e == 0 for e in eps_values
    ):
        raise ValueError(
            "cannot mix eps = 0 with eps > 0 in one exact-control study "
            "(different state dimensions)"
        )
    interp_order = _INTERP_ORDERS[interp]
    problems = {eps: _problem_for(eps) for eps in eps_values}

    if control_source == EXACT_CONTROL:
        columns = _exact_columns(problems[eps_values[0]].state_dim)
    else:
        columns = _OPT_COLUMNS

    def reference(eps):
        prob = problems[eps]
        if control_source == EXACT_CONTROL:
            return _forward_adjoint(tab, prob, reference_n, interp_order)
        u0 = ControlGrid.constant(1.0, reference_n, tab.s, prob.control_dim)
        return solve(tab, prob, u0, tol_norm_sq=tol_norm_sq)

    cells = [(eps, n) for eps in eps_values for n in n_values]
    with ThreadPoolExecutor(max_workers=_worker_count(len(cells))) as pool:
        refs = dict(zip(eps_values, pool.map(reference, eps_values)))

        def run_cell(cell):
            eps, n = cell
            stride = reference_n // n
            try:
                if control_source == EXACT_CONTROL:
                    vals = _exact_cell(
                        tab, problems[eps], n, stride, refs[eps], interp_order
                    )
                    status = "ok"
                else:
                    vals, converged = _optimized_cell(
                        tab, problems[eps], n, stride, refs[eps], tol_norm_sq
                    )
                    status = "ok" if converged else "not-converged"
            except IntegrationError as exc:
                vals = {col: math.nan for col in columns}
                status = "failed: " + str(exc).replace(",", ";")
            return ConvergenceRow(eps, n, status, vals)

        results = list(pool.map(run_cell, cells))

    rows = tuple(
        sorted(results, key=lambda r: (eps_values.index(r.eps), r.n_steps))
    )
    return ConvergenceReport(
        scheme=tab.name,
        control_source=control_source,
        interp=interp,
        reference_n=reference_n,
        columns=columns,
        rows=rows,
    )
