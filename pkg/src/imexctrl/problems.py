"""Benchmark control problems with hand-coded derivatives.

Each problem is an autonomous split ODE

    y' = f(y, u) + g(y, u),    y(0) = y0,    t in [0, horizon],

with a terminal cost j(y(T)) to be minimized over the control u.  The
stiff part g carries everything that should be treated implicitly.

The main benchmark is a singularly perturbed variant of a classical
quadratic model problem: the running cost (u^2 + x^2 + 4 z^2) / 2 is
accumulated in an auxiliary first state c, the controlled state x obeys
x' = z + u, and the fast variable z relaxes toward x / 2 on the time scale
eps through the stiff relaxation term (x / 2 - z) / eps.  In the eps -> 0
limit z = x / 2 and the problem reduces to the two-state form
c' = (u^2 + 2 x^2) / 2, x' = x / 2 + u, whose optimal control is known in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "ControlProblem",
    "HamiltonianProblem",
    "SingularControlError",
    "hager_relaxed",
    "hager_unrelaxed",
    "hager_exact_control",
    "hager_hamiltonian",
    "linear_split_problem",
    "derivative_check",
]

Array = np.ndarray
_DEFAULT_SEED = 0x5EED


class SingularControlError(ZeroDivisionError):
    """Feedback law evaluated where it is undefined (p1 = 0)."""


@dataclass(frozen=True)
class ControlProblem:
    """Split-ODE optimal control problem with terminal cost.

    The callables take plain 1-D numpy arrays: states of length
    ``state_dim``, controls of length ``control_dim``.  Jacobians are dense
    2-D arrays with states indexing rows.
    """

    name: str
    state_dim: int
    control_dim: int
    horizon: float
    y0: Array
    f: Callable[[Array, Array], Array]
    g: Callable[[Array, Array], Array]
    f_y: Callable[[Array, Array], Array]
    g_y: Callable[[Array, Array], Array]
    f_u: Callable[[Array, Array], Array]
    g_u: Callable[[Array, Array], Array]
    terminal_cost: Callable[[Array], float]
    terminal_gradient: Callable[[Array], Array]


@dataclass(frozen=True)
class HamiltonianProblem(ControlProblem):
    """Control problem plus the stationarity feedback u = feedback(y, p).

    The feedback eliminates the control from the coupled state/adjoint
    system, turning the two-point boundary problem into a Hamiltonian ODE
    in (y, p).
    """

    feedback: Callable[[Array, Array], Array]


def hager_relaxed(eps: float) -> ControlProblem:
    """Three-state relaxation benchmark; ``eps > 0`` is the stiffness scale.

    States y = (c, x, z) with cost accumulator c, controlled state x, fast
    variable z:

        c' = (u^2 + x^2 + 4 z^2) / 2
        x' = z + u
        z' = (x / 2 - z) / eps    (stiff part g)

    y(0) = (0, 1, 1/2), horizon 1, objective j(y(T)) = c(T).
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    inv_eps = 1.0 / eps

    def f(y: Array, u: Array) -> Array:
        return np.array(
            [
                0.5 * (u[0] * u[0] + y[1] * y[1] + 4.0 * y[2] * y[2]),
                y[2] + u[0],
                0.0,
            ]
        )

    def g(y: Array, u: Array) -> Array:
        return np.array([0.0, 0.0, inv_eps * (0.5 * y[1] - y[2])])

    def f_y(y: Array, u: Array) -> Array:
        return np.array(
            [[0.0, y[1], 4.0 * y[2]], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]
        )

    def g_y(y: Array, u: Array) -> Array:
        return np.array(
            [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.5 * inv_eps, -inv_eps]]
        )

    def f_u(y: Array, u: Array) -> Array:
        return np.array([[u[0]], [1.0], [0.0]])

    def g_u(y: Array, u: Array) -> Array:
        return np.zeros((3, 1))

    return ControlProblem(
        name=f"hager-relaxed(eps={eps:g})",
        state_dim=3,
        control_dim=1,
        horizon=1.0,
        y0=np.array([0.0, 1.0, 0.5]),
        f=f,
        g=g,
        f_y=f_y,
        g_y=g_y,
        f_u=f_u,
        g_u=g_u,
        terminal_cost=lambda y: float(y[0]),
        terminal_gradient=lambda y: np.array([1.0, 0.0, 0.0]),
    )


def hager_unrelaxed() -> ControlProblem:
    """Reduced two-state limit of :func:`hager_relaxed` (z = x / 2 inserted).

    States y = (c, x):

        c' = (u^2 + 2 x^2) / 2
        x' = x / 2 + u

    with g identically zero; y(0) = (0, 1), horizon 1, objective c(T).
    """

    def f(y: Array, u: Array) -> Array:
        return np.array(
            [0.5 * (u[0] * u[0] + 2.0 * y[1] * y[1]), 0.5 * y[1] + u[0]]
        )

    def g(y: Array, u: Array) -> Array:
        return np.zeros(2)

    def f_y(y: Array, u: Array) -> Array:
        return np.array([[0.0, 2.0 * y[1]], [0.0, 0.5]])

    def g_y(y: Array, u: Array) -> Array:
        return np.zeros((2, 2))

    def f_u(y: Array, u: Array) -> Array:
        return np.array([[u[0]], [1.0]])

    def g_u(y: Array, u: Array) -> Array:
        return np.zeros((2, 1))

    return ControlProblem(
        name="hager-unrelaxed",
        state_dim=2,
        control_dim=1,
        horizon=1.0,
        y0=np.array([0.0, 1.0]),
        f=f,
        g=g,
        f_y=f_y,
        g_y=g_y,
        f_u=f_u,
        g_u=g_u,
        terminal_cost=lambda y: float(y[0]),
        terminal_gradient=lambda y: np.array([1.0, 0.0]),
    )


def hager_exact_control(t):
    """Closed-form optimal control of the unrelaxed problem on [0, 1].

    u*(t) = 2 (exp(3t) - exp(3)) / (exp(3t/2) (2 + exp(3))).  Accepts a
    scalar or an ndarray of times.
    """
    t = np.asarray(t, dtype=float)
    e3 = np.exp(3.0)
    out = 2.0 * (np.exp(3.0 * t) - e3) / (np.exp(1.5 * t) * (2.0 + e3))
    if out.ndim == 0:
        return float(out)
    return out


def hager_hamiltonian(eps: float) -> HamiltonianProblem:
    """Relaxed benchmark with the control eliminated by stationarity.

    The Hamiltonian p . (f + g) is stationary in u at u = -p2 / p1, which
    is the feedback used by the coupled state/adjoint map.  Evaluating it
    at p1 = 0 raises :class:`SingularControlError`.
    """
    base = hager_relaxed(eps)

    def feedback(y: Array, p: Array) -> Array:
        if p[0] == 0.0:
            raise SingularControlError("feedback -p2/p1 undefined at p1 = 0")
        return np.array([-p[1] / p[0]])

    return HamiltonianProblem(
        name=f"hager-hamiltonian(eps={eps:g})",
        state_dim=base.state_dim,
        control_dim=base.control_dim,
        horizon=base.horizon,
        y0=base.y0,
        f=base.f,
        g=base.g,
        f_y=base.f_y,
        g_y=base.g_y,
        f_u=base.f_u,
        g_u=base.g_u,
        terminal_cost=base.terminal_cost,
        terminal_gradient=base.terminal_gradient,
        feedback=feedback,
    )


def linear_split_problem(lam: float, mu: float) -> HamiltonianProblem:
    """Scalar control-free test equation y' = lam*y + mu*y, split additively.

    lam goes to the explicit part, mu to the implicit part.  The control
    dimension is 1 with zero sensitivities so that the problem fits the
    common interfaces; the feedback returns 0.  Objective is y(T) itself.
    """

    def f(y: Array, u: Array) -> Array:
        return lam * y

    def g(y: Array, u: Array) -> Array:
        return mu * y

    def f_y(y: Array, u: Array) -> Array:
        return np.array([[lam]])

    def g_y(y: Array, u: Array) -> Array:
        return np.array([[mu]])

    def zero_sens(y: Array, u: Array) -> Array:
        return np.zeros((1, 1))

    return HamiltonianProblem(
        name=f"linear-split(lam={lam:g},mu={mu:g})",
        state_dim=1,
        control_dim=1,
        horizon=1.0,
        y0=np.array([1.0]),
        f=f,
        g=g,
        f_y=f_y,
        g_y=g_y,
        f_u=zero_sens,
        g_u=zero_sens,
        terminal_cost=lambda y: float(y[0]),
        terminal_gradient=lambda y: np.array([1.0]),
        feedback=lambda y, p: np.zeros(1),
    )


def derivative_check(
    prob: ControlProblem,
    samples: int = 20,
    step: float = 1e-5,
    seed: int = _DEFAULT_SEED,
) -> float:
    """Worst relative mismatch between coded Jacobians and central differences.

    Samples ``samples`` pseudo-random points around y0 (unit normal offsets,
    fixed seed) and compares f_y, g_y, f_u, g_u, and the terminal gradient
    column by column against central differences of f, g, and the terminal
    cost.  The discrepancy of each block is measured as
    ``max|coded - fd| / max(1, max|fd|)``; the worst value is returned.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0

    def fd_columns(fun, x, dim_out):
        cols = np.empty((dim_out, x.size))
        for j in range(x.size):
            xp = x.copy()
            xm = x.copy()
            xp[j] += step
            xm[j] -= step
            cols[:, j] = (fun(xp) - fun(xm)) / (2.0 * step)
        return cols

    for _ in range(samples):
        y = prob.y0 + rng.standard_normal(prob.state_dim)
        u = rng.standard_normal(prob.control_dim)
        blocks = [
            (prob.f_y(y, u), fd_columns(lambda v: prob.f(v, u), y, prob.state_dim)),
            (prob.g_y(y, u), fd_columns(lambda v: prob.g(v, u), y, prob.state_dim)),
            (prob.f_u(y, u), fd_columns(lambda v: prob.f(y, v), u, prob.state_dim)),
            (prob.g_u(y, u), fd_columns(lambda v: prob.g(y, v), u, prob.state_dim)),
            (
                prob.terminal_gradient(y)[None, :],
                fd_columns(lambda v: np.array([prob.terminal_cost(v)]), y, 1),
            ),
        ]
        for coded, fd in blocks:
            scale = max(1.0, float(np.max(np.abs(fd))))
            disc = float(np.max(np.abs(coded - fd))) / scale
            worst = max(worst, disc)
    return worst
