"""Forward IMEX integration and the discrete adjoint in three equivalent forms.

Forward method (diagonally implicit tableaus only), step n with width h:

    Y_i = y_n + h sum_{j<i} a_ex[i,j] f(Y_j, u_j)
              + h sum_{j<=i} a_im[i,j] g(Y_j, u_j)
    y_{n+1} = y_n + h sum_i (w_ex[i] f(Y_i, u_i) + w_im[i] g(Y_i, u_i))

Each stage with a nonzero implicit diagonal is solved by a damped Newton
iteration; stages with a_im[i,i] = 0 reduce to explicit evaluation.

Differentiating the discrete objective j(y_N) with respect to the states
yields a backward recursion for multipliers (xi_ex, xi_im) attached to the
two tableau halves (the "multiplier form"):

    xi_ex_i = h w_ex[i] p_{n+1} + h sum_j a_ex[j,i] z_j
    xi_im_i = h w_im[i] p_{n+1} + h sum_j a_im[j,i] z_j
    z_j     = f_y(Y_j, u_j)^T xi_ex_j + g_y(Y_j, u_j)^T xi_im_j
    p_n     = p_{n+1} + sum_j z_j

Dividing the multipliers by h times their weights turns the recursion into
a Runge-Kutta scheme in stage variables (the "rescaled form") whose
coefficients are the alpha/beta matrices of
:func:`imexctrl.tableau.adjoint_coefficients`; run backward it uses the
back_* family.  Eliminating the stage split altogether gives one linear
block system per step in combined multipliers zeta = f_y^T xi_ex + g_y^T
xi_im (the "block form").  All three produce identical adjoint trajectories
up to roundoff; the rescaled form needs nonzero weights (or the ARS
extension) while the other two work for every diagonally implicit tableau.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problems import ControlProblem
from .tableau import (
    AdjointCoefficients,
    ImexTableau,
    Validity,
    adjoint_coefficients,
    classify,
)

__all__ = [
    "ControlGrid",
    "ControlMode",
    "Trajectory",
    "AdjointTrajectory",
    "IntegrationError",
    "UnsupportedStructureError",
    "forward",
    "adjoint_backward",
    "adjoint_rescaled",
    "adjoint_block",
    "transformed_stages",
    "interpolate_stage_states",
    "trajectory_to_csv",
    "adjoint_to_csv",
]

# Stage Newton iteration: absolute residual target, scaled rounding floor,
# and iteration cap.
STAGE_TOL = 1e-13
_STAGE_MAX_ITER = 50
_EPS = np.finfo(float).eps


class UnsupportedStructureError(ValueError):
    """Tableau lacks the structure an operation requires."""


class IntegrationError(RuntimeError):
    """Stage system could not be solved.  Carries step, stage, residual."""

    def __init__(self, message: str, step: int, stage: int | None, residual: float):
        stage_txt = "-" if stage is None else str(stage + 1)
        super().__init__(
            f"{message} (step {step}, stage {stage_txt}, residual {residual:.3e})"
        )
        self.step = step
        self.stage = stage
        self.residual = residual


class ControlMode(Enum):
    PER_STEP = "per-step"
    PER_STAGE = "per-stage"


@dataclass(frozen=True)
class ControlGrid:
    """Discrete control: one value per step and stage.

    ``values`` has shape (n_steps, s, m).  In PER_STEP mode all stage
    slices of a step are equal and the optimization variables are the
    (n_steps, m) step values; PER_STAGE treats every stage value as
    independent.
    """

    values: np.ndarray
    mode: ControlMode

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError(f"control values must be (n_steps, s, m), got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def stages(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def step_values(self) -> np.ndarray:
        """(n_steps, m) view of a PER_STEP grid."""
        if self.mode is not ControlMode.PER_STEP:
            raise ValueError("step_values only defined for PER_STEP grids")
        return self.values[:, 0, :]

    @staticmethod
    def per_step(values: np.ndarray, stages: int) -> "ControlGrid":
        """Broadcast (n_steps, m) or (n_steps,) step values to all stages."""
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError(f"per-step values must be (n_steps, m), got {v.shape}")
        grid = np.repeat(v[:, None, :], stages, axis=1)
        return ControlGrid(grid, ControlMode.PER_STEP)

    @staticmethod
    def per_stage(values: np.ndarray) -> "ControlGrid":
        return ControlGrid(np.asarray(values, dtype=float), ControlMode.PER_STAGE)

    @staticmethod
    def constant(value: float, n_steps: int, stages: int, dim: int = 1) -> "ControlGrid":
        return ControlGrid.per_step(np.full((n_steps, dim), value), stages)

    @staticmethod
    def sample(fn, n_steps: int, horizon: float, tab: ImexTableau) -> "ControlGrid":
        """PER_STAGE grid with u[n, i] = fn(t_n + c_ex[i] h).

        Stage times follow the explicit abscissae, which is where the
        control-dependent non-stiff part is consistent with the continuous
        dynamics.  ``fn`` maps a scalar time to a scalar or (m,) array.
        """
        h = horizon / n_steps
        c_ex = tab.c_ex
        probe = np.atleast_1d(np.asarray(fn(0.0), dtype=float))
        vals = np.empty((n_steps, tab.s, probe.size))
        for n in range(n_steps):
            for i in range(tab.s):
                vals[n, i] = np.atleast_1d(np.asarray(fn(n * h + c_ex[i] * h), float))
        return ControlGrid.per_stage(vals)

    def replace_step_values(self, values: np.ndarray) -> "ControlGrid":
        """New PER_STEP grid with the same shape metadata."""
        return ControlGrid.per_step(
            np.asarray(values, float).reshape(self.n_steps, self.dim), self.stages
        )


@dataclass(frozen=True)
class Trajectory:
    """Forward solution: grid states plus all stage data of every step."""

    times: np.ndarray  # (N+1,)
    y: np.ndarray  # (N+1, K)
    stages_y: np.ndarray  # (N, s, K)
    rates_ex: np.ndarray  # (N, s, K): f at the stages
    rates_im: np.ndarray  # (N, s, K): g at the stages

    @property
    def n_steps(self) -> int:
        return self.y.shape[0] - 1

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class AdjointTrajectory:
    """Backward solution: grid adjoints and per-step stage multipliers.

    ``mult_ex`` / ``mult_im`` hold the multipliers attached to the
    explicit/implicit tableau half.  ``stage_mult`` carries the combined
    multipliers of the block form where that form produced the data.
    ``stages_ex`` / ``stages_im`` hold the weight-rescaled stage variables
    where a form computed them directly.
    """

    times: np.ndarray  # (N+1,)
    p: np.ndarray  # (N+1, K)
    mult_ex: np.ndarray  # (N, s, K)
    mult_im: np.ndarray  # (N, s, K)
    stage_mult: np.ndarray | None = None  # (N, s, K) combined multipliers
    stages_ex: np.ndarray | None = None  # (N, s, K) rescaled explicit family
    stages_im: np.ndarray | None = None  # (N, s, K) rescaled implicit family

    @property
    def n_steps(self) -> int:
        return self.p.shape[0] - 1

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])


def _require_dirk(tab: ImexTableau) -> None:
    if not classify(tab).diagonally_implicit:
        raise UnsupportedStructureError(
            f"tableau {tab.name!r} is not diagonally implicit"
        )


def _check_grid(tab: ImexTableau, prob: ControlProblem, u: ControlGrid, n_steps: int):
    if u.values.shape != (n_steps, tab.s, prob.control_dim):
        raise ValueError(
            f"control grid shape {u.values.shape} does not match "
            f"(n_steps, s, m) = ({n_steps}, {tab.s}, {prob.control_dim})"
        )


def _solve_stage(
    prob: ControlProblem,
    rhs: np.ndarray,
    u: np.ndarray,
    hd: float,
    step: int,
    stage: int,
) -> np.ndarray:
    """Solve Y = rhs + hd * g(Y, u) by damped Newton.

    Converges when the residual infinity norm drops below STAGE_TOL or
    below a rounding floor scaled to the magnitudes entering the residual;
    the floor is what makes very stiff stages (|hd| * |g_y| >> 1) solvable
    in double precision at all.
    """
    identity = np.eye(prob.state_dim)
    y = rhs.copy()
    res = y - rhs - hd * prob.g(y, u)
    res_norm = float(np.max(np.abs(res)))
    for _ in range(_STAGE_MAX_ITER):
        jac_g = prob.g_y(y, u)
        row_scale = float(np.max(np.sum(np.abs(jac_g), axis=1))) if jac_g.size else 0.0
        floor = (
            64.0
            * _EPS
            * (
                (1.0 + abs(hd) * row_scale) * max(1.0, float(np.max(np.abs(y))))
                + float(np.max(np.abs(rhs)))
            )
        )
        if res_norm <= max(STAGE_TOL, floor):
            return y
        try:
            delta = np.linalg.solve(identity - hd * jac_g, -res)
        except np.linalg.LinAlgError:
            raise IntegrationError(
                "singular stage Jacobian", step, stage, res_norm
            ) from None
        # Damping: halve the step while the residual grows.
        t = 1.0
        while True:
            y_try = y + t * delta
            res_try = y_try - rhs - hd * prob.g(y_try, u)
            try_norm = float(np.max(np.abs(res_try)))
            if try_norm < res_norm or t <= 1.0 / 1024.0:
                break
            t *= 0.5
        y, res, res_norm = y_try, res_try, try_norm
    if res_norm <= max(STAGE_TOL, floor):
        return y
    raise IntegrationError("stage iteration did not converge", step, stage, res_norm)


def _step_stages(
    tab: ImexTableau,
    prob: ControlProblem,
    y_n: np.ndarray,
    u_n: np.ndarray,
    h: float,
    step: int,
):
    """All stages of one forward step; returns (stages, rates_ex, rates_im, y_next)."""
    s, dim = tab.s, prob.state_dim
    stages = np.empty((s, dim))
    rates_ex = np.empty((s, dim))
    rates_im = np.empty((s, dim))
    for i in range(s):
        rhs = y_n.copy()
        for j in range(i):
            if tab.a_ex[i, j] != 0.0:
                rhs += (h * tab.a_ex[i, j]) * rates_ex[j]
            if tab.a_im[i, j] != 0.0:
                rhs += (h * tab.a_im[i, j]) * rates_im[j]
        dii = tab.a_im[i, i]
        if dii == 0.0:
            y_stage = rhs
        else:
            y_stage = _solve_stage(prob, rhs, u_n[i], h * dii, step, i)
        stages[i] = y_stage
        rates_ex[i] = prob.f(y_stage, u_n[i])
        rates_im[i] = prob.g(y_stage, u_n[i])
    y_next = y_n + h * (tab.w_ex @ rates_ex + tab.w_im @ rates_im)
    return stages, rates_ex, rates_im, y_next


def forward(
    tab: ImexTableau, prob: ControlProblem, u: ControlGrid, n_steps: int
) -> Trajectory:
    """Integrate the split ODE over ``n_steps`` uniform steps.

    The tableau must be diagonally implicit.  Raises
    :class:`IntegrationError` when a stage iteration fails.
    """
    _require_dirk(tab)
    if n_steps < 1:
        raise ValueError(f"n_steps must be positive, got {n_steps}")
    _check_grid(tab, prob, u, n_steps)
    h = prob.horizon / n_steps
    dim = prob.state_dim
    y = np.empty((n_steps + 1, dim))
    y[0] = prob.y0
    stages_y = np.empty((n_steps, tab.s, dim))
    rates_ex = np.empty((n_steps, tab.s, dim))
    rates_im = np.empty((n_steps, tab.s, dim))
    for n in range(n_steps):
        stages_y[n], rates_ex[n], rates_im[n], y[n + 1] = _step_stages(
            tab, prob, y[n], u.values[n], h, n
        )
    times = np.linspace(0.0, prob.horizon, n_steps + 1)
    return Trajectory(times, y, stages_y, rates_ex, rates_im)


def _stage_jacobians(prob, stage_states, u_n, s):
    """Transposed Jacobians f_y^T, g_y^T at the stages of one step."""
    f_t = [np.ascontiguousarray(prob.f_y(stage_states[i], u_n[i]).T) for i in range(s)]
    g_t = [np.ascontiguousarray(prob.g_y(stage_states[i], u_n[i]).T) for i in range(s)]
    return f_t, g_t


def adjoint_backward(
    tab: ImexTableau,
    prob: ControlProblem,
    traj: Trajectory,
    u: ControlGrid,
    stage_states: np.ndarray | None = None,
) -> AdjointTrajectory:
    """Multiplier-form adjoint sweep from p_N = terminal_gradient(y_N).

    ``stage_states`` optionally replaces the stored stage states when
    evaluating the Jacobians (e.g. interpolated values from
    :func:`interpolate_stage_states`).  Works for every diagonally implicit
    tableau; nothing divides by a weight.
    """
    _require_dirk(tab)
    n_steps, s, dim = traj.n_steps, tab.s, prob.state_dim
    _check_grid(tab, prob, u, n_steps)
    states = traj.stages_y if stage_states is None else stage_states
    h = traj.h
    identity = np.eye(dim)
    p = np.empty((n_steps + 1, dim))
    p[n_steps] = prob.terminal_gradient(traj.y[n_steps])
    mult_ex = np.empty((n_steps, s, dim))
    mult_im = np.empty((n_steps, s, dim))
    for n in range(n_steps - 1, -1, -1):
        p_next = p[n + 1]
        f_t, g_t = _stage_jacobians(prob, states[n], u.values[n], s)
        combined = np.zeros((s, dim))  # z_j once stage j is finished
        for i in range(s - 1, -1, -1):
            acc_ex = h * tab.w_ex[i] * p_next
            acc_im = h * tab.w_im[i] * p_next
            for j in range(i + 1, s):
                if tab.a_ex[j, i] != 0.0:
                    acc_ex = acc_ex + (h * tab.a_ex[j, i]) * combined[j]
                if tab.a_im[j, i] != 0.0:
                    acc_im = acc_im + (h * tab.a_im[j, i]) * combined[j]
            mult_ex[n, i] = acc_ex
            dii = tab.a_im[i, i]
            if dii == 0.0:
                mult_im[n, i] = acc_im
            else:
                rhs = acc_im + (h * dii) * (f_t[i] @ acc_ex)
                try:
                    mult_im[n, i] = np.linalg.solve(identity - (h * dii) * g_t[i], rhs)
                except np.linalg.LinAlgError:
                    raise IntegrationError(
                        "singular adjoint stage matrix", n, i, float("nan")
                    ) from None
            combined[i] = f_t[i] @ mult_ex[n, i] + g_t[i] @ mult_im[n, i]
        p[n] = p_next + combined.sum(axis=0)
    return AdjointTrajectory(traj.times.copy(), p, mult_ex, mult_im)


def adjoint_rescaled(
    tab: ImexTableau,
    prob: ControlProblem,
    traj: Trajectory,
    u: ControlGrid,
    adj: AdjointCoefficients | None = None,
    stage_states: np.ndarray | None = None,
) -> AdjointTrajectory:
    """Rescaled-form adjoint sweep in stage variables (P_ex, P_im).

    Runs the weight-rescaled adjoint scheme backward using the back_*
    coefficient family; under the ARS extension the first implicit-family
    stage is pinned to p_{n+1}.  Raises
    :class:`UnsupportedStructureError` when the transform is unavailable.
    Multipliers are recovered as mult = h * weight * stage value.
    """
    _require_dirk(tab)
    if adj is None:
        adj = adjoint_coefficients(tab)
    if adj.validity is Validity.UNAVAILABLE:
        raise UnsupportedStructureError(
            f"adjoint coefficients unavailable for tableau {tab.name!r}"
        )
    n_steps, s, dim = traj.n_steps, tab.s, prob.state_dim
    _check_grid(tab, prob, u, n_steps)
    states = traj.stages_y if stage_states is None else stage_states
    h = traj.h
    identity = np.eye(dim)
    p = np.empty((n_steps + 1, dim))
    p[n_steps] = prob.terminal_gradient(traj.y[n_steps])
    stages_ex = np.empty((n_steps, s, dim))
    stages_im = np.empty((n_steps, s, dim))
    for n in range(n_steps - 1, -1, -1):
        p_next = p[n + 1]
        f_t, g_t = _stage_jacobians(prob, states[n], u.values[n], s)
        jvp_ex = np.zeros((s, dim))  # f_y^T P_ex per finished stage
        jvp_im = np.zeros((s, dim))  # g_y^T P_im per finished stage
        for i in range(s - 1, -1, -1):
            acc = p_next.copy()
            for j in range(i + 1, s):
                acc += h * (
                    adj.back_alpha_ex[i, j] * jvp_ex[j]
                    + adj.back_alpha_im[i, j] * jvp_im[j]
                )
            stages_ex[n, i] = acc
            jvp_ex[i] = f_t[i] @ acc
            rhs = p_next.copy()
            for j in range(i + 1, s):
                rhs += h * (
                    adj.back_beta_ex[i, j] * jvp_ex[j]
                    + adj.back_beta_im[i, j] * jvp_im[j]
                )
            rhs += h * adj.back_beta_ex[i, i] * jvp_ex[i]
            dii = adj.back_beta_im[i, i]
            if dii == 0.0:
                stages_im[n, i] = rhs
            else:
                try:
                    stages_im[n, i] = np.linalg.solve(identity - h * dii * g_t[i], rhs)
                except np.linalg.LinAlgError:
                    raise IntegrationError(
                        "singular adjoint stage matrix", n, i, float("nan")
                    ) from None
            jvp_im[i] = g_t[i] @ stages_im[n, i]
        p[n] = p_next + h * (tab.w_ex @ jvp_ex + tab.w_im @ jvp_im)
    mult_ex = h * tab.w_ex[None, :, None] * stages_ex
    mult_im = h * tab.w_im[None, :, None] * stages_im
    return AdjointTrajectory(
        traj.times.copy(),
        p,
        mult_ex,
        mult_im,
        stages_ex=stages_ex,
        stages_im=stages_im,
    )


def adjoint_block(
    tab: ImexTableau,
    prob: ControlProblem,
    traj: Trajectory,
    u: ControlGrid,
    stage_states: np.ndarray | None = None,
) -> AdjointTrajectory:
    """Block-form adjoint sweep: one linear solve per step.

    Per step the combined multipliers zeta solve (I - h B) zeta = h C p_{n+1}
    with block (i, j) of B equal to a_ex[j,i] f_y(Y_i)^T + a_im[j,i]
    g_y(Y_i)^T and block i of C equal to w_ex[i] f_y(Y_i)^T + w_im[i]
    g_y(Y_i)^T; then p_n = p_{n+1} + sum_i zeta_i.  The per-half multipliers
    are recovered from zeta afterwards.  Weight-pattern agnostic.
    """
    _require_dirk(tab)
    n_steps, s, dim = traj.n_steps, tab.s, prob.state_dim
    _check_grid(tab, prob, u, n_steps)
    states = traj.stages_y if stage_states is None else stage_states
    h = traj.h
    p = np.empty((n_steps + 1, dim))
    p[n_steps] = prob.terminal_gradient(traj.y[n_steps])
    mult_ex = np.empty((n_steps, s, dim))
    mult_im = np.empty((n_steps, s, dim))
    stage_mult = np.empty((n_steps, s, dim))
    big = np.empty((s * dim, s * dim))
    for n in range(n_steps - 1, -1, -1):
        p_next = p[n + 1]
        f_t, g_t = _stage_jacobians(prob, states[n], u.values[n], s)
        rhs = np.empty(s * dim)
        for i in range(s):
            rows = slice(i * dim, (i + 1) * dim)
            rhs[rows] = h * ((tab.w_ex[i] * f_t[i] + tab.w_im[i] * g_t[i]) @ p_next)
            for j in range(s):
                block = -h * (tab.a_ex[j, i] * f_t[i] + tab.a_im[j, i] * g_t[i])
                if i == j:
                    block = block + np.eye(dim)
                big[rows, j * dim : (j + 1) * dim] = block
        try:
            zeta = np.linalg.solve(big, rhs).reshape(s, dim)
        except np.linalg.LinAlgError:
            raise IntegrationError(
                "singular block adjoint system", n, None, float("nan")
            ) from None
        stage_mult[n] = zeta
        for i in range(s):
            mult_ex[n, i] = h * tab.w_ex[i] * p_next
            mult_im[n, i] = h * tab.w_im[i] * p_next
            for j in range(s):
                if tab.a_ex[j, i] != 0.0:
                    mult_ex[n, i] += h * tab.a_ex[j, i] * zeta[j]
                if tab.a_im[j, i] != 0.0:
                    mult_im[n, i] += h * tab.a_im[j, i] * zeta[j]
        p[n] = p_next + zeta.sum(axis=0)
    return AdjointTrajectory(
        traj.times.copy(), p, mult_ex, mult_im, stage_mult=stage_mult
    )


def transformed_stages(
    adj_traj: AdjointTrajectory,
    tab: ImexTableau,
    adj: AdjointCoefficients | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Weight-rescaled stage variables (P_ex, P_im) of an adjoint trajectory.

    Returns the stored stage arrays when the sweep produced them, otherwise
    divides the multipliers by h * weight.  Under the ARS extension the
    first implicit-family stage is p_{n+1}.  Raises
    :class:`UnsupportedStructureError` when the transform is unavailable.
    """
    if adj is None:
        adj = adjoint_coefficients(tab)
    if adj.validity is Validity.UNAVAILABLE:
        raise UnsupportedStructureError(
            f"adjoint coefficients unavailable for tableau {tab.name!r}"
        )
    if adj_traj.stages_ex is not None and adj_traj.stages_im is not None:
        return adj_traj.stages_ex, adj_traj.stages_im
    h = adj_traj.h
    stages_ex = adj_traj.mult_ex / (h * tab.w_ex[None, :, None])
    if adj.validity is Validity.ALL_WEIGHTS_NONZERO:
        stages_im = adj_traj.mult_im / (h * tab.w_im[None, :, None])
    else:
        stages_im = np.empty_like(adj_traj.mult_im)
        stages_im[:, 1:] = adj_traj.mult_im[:, 1:] / (h * tab.w_im[None, 1:, None])
        stages_im[:, 0] = adj_traj.p[1:]  # pinned to the step's adjoint value
    return stages_ex, stages_im


def interpolate_stage_states(
    traj: Trajectory, tab: ImexTableau, order: int
) -> np.ndarray:
    """Stage states reconstructed from grid values by local Lagrange polynomials.

    For each stage the target time is t_n + c_ex[i] h.  The interpolant of
    degree ``order`` uses the order+1 nearest grid points, shifted inside
    the grid near the boundaries.  Stage abscissae that coincide with grid
    nodes reproduce the grid values exactly.  Requires n_steps >= order.
    """
    if order < 1:
        raise ValueError(f"interpolation order must be >= 1, got {order}")
    n_steps = traj.n_steps
    if n_steps < order:
        raise ValueError(
            f"need at least {order} steps for order-{order} interpolation, "
            f"got {n_steps}"
        )
    h = traj.h
    pts = order + 1
    out = np.empty_like(traj.stages_y)
    for i, ci in enumerate(tab.c_ex):
        for n in range(n_steps):
            t = traj.times[n] + ci * h
            k0 = int(np.floor(t / h)) - (pts - 1) // 2
            k0 = min(max(k0, 0), n_steps + 1 - pts)
            nodes = traj.times[k0 : k0 + pts]
            vals = traj.y[k0 : k0 + pts]
            acc = np.zeros(traj.y.shape[1])
            for k in range(pts):
                basis = 1.0
                for l in range(pts):
                    if l != k:
                        basis *= (t - nodes[l]) / (nodes[k] - nodes[l])
                acc += basis * vals[k]
            out[n, i] = acc
    return out


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def trajectory_to_csv(traj: Trajectory) -> str:
    """Grid states as CSV with header t,y1..yK (17 significant digits)."""
    dim = traj.y.shape[1]
    lines = ["t," + ",".join(f"y{k + 1}" for k in range(dim))]
    for t, row in zip(traj.times, traj.y):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def adjoint_to_csv(adj_traj: AdjointTrajectory) -> str:
    """Grid adjoints as CSV with header t,p1..pK (17 significant digits)."""
    dim = adj_traj.p.shape[1]
    lines = ["t," + ",".join(f"p{k + 1}" for k in range(dim))]
    for t, row in zip(adj_traj.times, adj_traj.p):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"
