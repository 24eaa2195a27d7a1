"""Coupled state/adjoint one-step map and its symplecticity residual.

Eliminating the control through the stationarity feedback u = phi(y, p)
turns state plus adjoint into one Hamiltonian boundary problem.  Its
discretization by the forward scheme and the weight-rescaled adjoint
scheme is a single one-step map (y_n, p_n) -> (y_{n+1}, p_{n+1}):

    Y_i    = y_n + h sum_j (a_ex[i,j] f(Y_j, u_j) + a_im[i,j] g(Y_j, u_j))
    P_ex_i = p_n - h sum_j (alpha_ex[i,j] f_y(Y_j, u_j)^T P_ex_j
                          + alpha_im[i,j] g_y(Y_j, u_j)^T P_im_j)
    P_im_i = p_n - h sum_j (beta_ex[i,j] f_y^T P_ex_j + beta_im[i,j] g_y^T P_im_j)
    u_j    = phi(Y_j, P_ex_j)

with the updates y_{n+1} = y_n + h sum (w_ex f + w_im g) and
p_{n+1} = p_n - h sum (w_ex f_y^T P_ex + w_im g_y^T P_im).  The discrete
stationarity condition couples both adjoint stage families,
w_ex[i] f_u^T P_ex_i + w_im[i] g_u^T P_im_i = 0; evaluating the feedback
at the explicit-family stage satisfies it exactly whenever g is
control-independent, which covers the benchmark problems.  The adjoint
coefficient matrices are dense, so the stage system is solved as one
Newton iteration on the stacked stage vector with a finite-difference
Jacobian.

When the algebraic conditions of
:func:`imexctrl.order_check.symplectic_conditions` hold, the map preserves
the canonical two-form; numerically, M = d(y1, p1)/d(y0, p0) then satisfies
M^T Omega M = Omega to the accuracy of the differencing.  The residual
``max |M^T Omega M - Omega|`` is the measured quantity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import IntegrationError, UnsupportedStructureError
from .order_check import symplectic_conditions
from .problems import HamiltonianProblem
from .tableau import AdjointCoefficients, ImexTableau, Validity, adjoint_coefficients

__all__ = [
    "StepJacobian",
    "SymplecticReport",
    "coupled_step",
    "step_jacobian",
    "symplectic_residual",
    "symplectic_report_to_csv",
]

_COUPLED_TOL = 1e-13
_COUPLED_MAX_ITER = 50


@dataclass(frozen=True)
class StepJacobian:
    """Jacobian of the coupled one-step map at (y0, p0)."""

    matrix: np.ndarray  # (2K, 2K)
    h: float
    fd_step: float


@dataclass(frozen=True)
class SymplecticReport:
    """Symplecticity residuals over a step-size sweep.

    ``qualified`` mirrors the algebraic conditions; ``residuals`` pairs
    each h with max |M^T Omega M - Omega|.  ``residual`` is the largest
    value of the sweep.
    """

    scheme: str
    qualified: bool
    residuals: tuple[tuple[float, float], ...]

    @property
    def residual(self) -> float:
        return max(r for _, r in self.residuals)


def _require_full(tab: ImexTableau, adj: AdjointCoefficients) -> None:
    if adj.validity is not Validity.ALL_WEIGHTS_NONZERO:
        raise UnsupportedStructureError(
            "coupled step needs the full adjoint transform "
            f"(validity {adj.validity.value!r} for tableau {tab.name!r})"
        )


def _coupled_solve(
    tab: ImexTableau,
    adj: AdjointCoefficients,
    prob: HamiltonianProblem,
    y0: np.ndarray,
    p0: np.ndarray,
    h: float,
    start: np.ndarray | None,
):
    """Newton solve of the stacked stage system; returns the stage vector."""
    s, dim = tab.s, prob.state_dim
    size = 3 * s * dim

    def unpack(x):
        arr = x.reshape(3, s, dim)
        return arr[0], arr[1], arr[2]

    def residual(x: np.ndarray) -> np.ndarray:
        y_st, pex_st, pim_st = unpack(x)
        controls = [prob.feedback(y_st[j], pex_st[j]) for j in range(s)]
        f_vals = np.stack([prob.f(y_st[j], controls[j]) for j in range(s)])
        g_vals = np.stack([prob.g(y_st[j], controls[j]) for j in range(s)])
        fy_t = [prob.f_y(y_st[j], controls[j]).T for j in range(s)]
        gy_t = [prob.g_y(y_st[j], controls[j]).T for j in range(s)]
        jvp_ex = np.stack([fy_t[j] @ pex_st[j] for j in range(s)])
        jvp_im = np.stack([gy_t[j] @ pim_st[j] for j in range(s)])
        out = np.empty((3, s, dim))
        out[0] = y_st - y0 - h * (tab.a_ex @ f_vals + tab.a_im @ g_vals)
        out[1] = pex_st - p0 + h * (adj.alpha_ex @ jvp_ex + adj.alpha_im @ jvp_im)
        out[2] = pim_st - p0 + h * (adj.beta_ex @ jvp_ex + adj.beta_im @ jvp_im)
        return out.reshape(-1)

    x = (
        start.copy()
        if start is not None
        else np.concatenate([np.tile(y0, s), np.tile(p0, s), np.tile(p0, s)])
    )
    res = residual(x)
    res_norm = float(np.max(np.abs(res)))
    for _ in range(_COUPLED_MAX_ITER):
        if res_norm <= _COUPLED_TOL:
            return x
        jac = np.empty((size, size))
        for j in range(size):
            delta = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xm = x.copy()
            xp[j] += delta
            xm[j] -= delta
            jac[:, j] = (residual(xp) - residual(xm)) / (2.0 * delta)
        try:
            step_vec = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            raise IntegrationError(
                "singular coupled stage Jacobian", 0, None, res_norm
            ) from None
        t = 1.0
        while True:
            x_try = x + t * step_vec
            res_try = residual(x_try)
            try_norm = float(np.max(np.abs(res_try)))
            if try_norm < res_norm or t <= 1.0 / 1024.0:
                break
            t *= 0.5
        x, res, res_norm = x_try, res_try, try_norm
    if res_norm <= _COUPLED_TOL:
        return x
    raise IntegrationError("coupled stage iteration stalled", 0, None, res_norm)


def _advance(tab, adj, prob, y0, p0, h, stage_vec):
    s, dim = tab.s, prob.state_dim
    arr = stage_vec.reshape(3, s, dim)
    y_st, pex_st, pim_st = arr[0], arr[1], arr[2]
    controls = [prob.feedback(y_st[j], pex_st[j]) for j in range(s)]
    f_vals = np.stack([prob.f(y_st[j], controls[j]) for j in range(s)])
    g_vals = np.stack([prob.g(y_st[j], controls[j]) for j in range(s)])
    jvp_ex = np.stack(
        [prob.f_y(y_st[j], controls[j]).T @ pex_st[j] for j in range(s)]
    )
    jvp_im = np.stack(
        [prob.g_y(y_st[j], controls[j]).T @ pim_st[j] for j in range(s)]
    )
    y1 = y0 + h * (tab.w_ex @ f_vals + tab.w_im @ g_vals)
    p1 = p0 - h * (tab.w_ex @ jvp_ex + tab.w_im @ jvp_im)
    return y1, p1


def coupled_step(
    tab: ImexTableau,
    prob: HamiltonianProblem,
    y0: np.ndarray,
    p0: np.ndarray,
    h: float,
    adj: AdjointCoefficients | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One step of the coupled state/adjoint map; returns (y1, p1).

    Requires the full adjoint transform.  h = 0 returns the identity.
    """
    if adj is None:
        adj = adjoint_coefficients(tab)
    _require_full(tab, adj)
    y0 = np.asarray(y0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    stage_vec = _coupled_solve(tab, adj, prob, y0, p0, h, None)
    return _advance(tab, adj, prob, y0, p0, h, stage_vec)


def step_jacobian(
    tab: ImexTableau,
    prob: HamiltonianProblem,
    y0: np.ndarray,
    p0: np.ndarray,
    h: float,
    fd_step: float = 1e-5,
    adj: AdjointCoefficients | None = None,
) -> StepJacobian:
    """Central-difference Jacobian of the coupled step in (y, p).

    Perturbed solves are warm-started from the unperturbed stage solution,
    which keeps the differencing noise at the level of the stage tolerance
    divided by the step.
    """
    if adj is None:
        adj = adjoint_coefficients(tab)
    _require_full(tab, adj)
    y0 = np.asarray(y0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    dim = prob.state_dim
    base_stages = _coupled_solve(tab, adj, prob, y0, p0, h, None)

    def step_from(z: np.ndarray) -> np.ndarray:
        y_in, p_in = z[:dim], z[dim:]
        stages = _coupled_solve(tab, adj, prob, y_in, p_in, h, base_stages)
        y1, p1 = _advance(tab, adj, prob, y_in, p_in, h, stages)
        return np.concatenate([y1, p1])

    z0 = np.concatenate([y0, p0])
    mat = np.empty((2 * dim, 2 * dim))
    for j in range(2 * dim):
        zp = z0.copy()
        zm = z0.copy()
        zp[j] += fd_step
        zm[j] -= fd_step
        mat[:, j] = (step_from(zp) - step_from(zm)) / (2.0 * fd_step)
    return StepJacobian(matrix=mat, h=h, fd_step=fd_step)


def symplectic_residual(
    tab: ImexTableau,
    prob: HamiltonianProblem,
    y0: np.ndarray,
    p0: np.ndarray,
    h_values,
    fd_step: float = 1e-5,
    adj: AdjointCoefficients | None = None,
) -> SymplecticReport:
    """Residual max |M^T Omega M - Omega| of the step Jacobian over a sweep.

    ``qualified`` comes from the algebraic conditions
    (:func:`imexctrl.order_check.symplectic_conditions`); unqualified
    schemes still get their residuals measured, as exploratory data.
    """
    if adj is None:
        adj = adjoint_coefficients(tab)
    _require_full(tab, adj)
    qualified = symplectic_conditions(tab, adj).all_satisfied
    dim = prob.state_dim
    omega = np.block(
        [
            [np.zeros((dim, dim)), np.eye(dim)],
            [-np.eye(dim), np.zeros((dim, dim))],
        ]
    )
    rows = []
    for h in h_values:
        jac = step_jacobian(tab, prob, y0, p0, float(h), fd_step=fd_step, adj=adj)
        m = jac.matrix
        rows.append((float(h), float(np.max(np.abs(m.T @ omega @ m - omega)))))
    return SymplecticReport(scheme=tab.name, qualified=qualified, residuals=tuple(rows))


def symplectic_report_to_csv(report: SymplecticReport) -> str:
    """CSV rows h,residual,qualified for the sweep."""
    lines = ["h,residual,qualified"]
    flag = "true" if report.qualified else "false"
    for h, r in report.residuals:
        lines.append(f"{h:.17g},{r:.17g},{flag}")
    return "\n".join(lines) + "\n"
