"""Shared builders for custom tableaus and small control problems."""

import numpy as np
import pytest

from imexctrl import ControlProblem, ImexTableau


@pytest.fixture
def heun_tab():
    """Purely explicit two-stage method; the implicit half is zero."""
    return ImexTableau(
        name="heun-explicit",
        a_ex=[[0.0, 0.0], [1.0, 0.0]],
        a_im=[[0.0, 0.0], [0.0, 0.0]],
        w_ex=[0.5, 0.5],
        w_im=[0.0, 0.0],
    )


@pytest.fixture
def ars_tab():
    """First implicit weight zero, the rest nonzero: the extension path."""
    return ImexTableau(
        name="ars-11",
        a_ex=[[0.0, 0.0], [1.0, 0.0]],
        a_im=[[0.0, 0.0], [0.0, 1.0]],
        w_ex=[0.5, 0.5],
        w_im=[0.0, 1.0],
    )


@pytest.fixture
def uneq_tab():
    """Full transform available but the two weight vectors differ."""
    return ImexTableau(
        name="uneq",
        a_ex=[[0.0, 0.0], [0.6, 0.0]],
        a_im=[[0.3, 0.0], [0.2, 0.4]],
        w_ex=[0.5, 0.5],
        w_im=[0.6, 0.4],
    )


@pytest.fixture
def lq_prob():
    """Accumulator plus integrator: c' = u^2/2, x' = u, j = c_T + x_T^2/2.

    For any consistent scheme and per-step control the discrete objective is
    sum_n h u_n^2 / 2 + (1 + sum_n h u_n)^2 / 2, so the exact discrete
    gradient is h (u_n + x_N), the minimizer is u = -1/2, and the optimal
    value is 1/4 on every grid.
    """
    return ControlProblem(
        name="lq-toy",
        state_dim=2,
        control_dim=1,
        horizon=1.0,
        y0=np.array([0.0, 1.0]),
        f=lambda y, u: np.array([0.5 * u[0] ** 2, u[0]]),
        g=lambda y, u: np.zeros(2),
        f_y=lambda y, u: np.zeros((2, 2)),
        g_y=lambda y, u: np.zeros((2, 2)),
        f_u=lambda y, u: np.array([[u[0]], [1.0]]),
        g_u=lambda y, u: np.zeros((2, 1)),
        terminal_cost=lambda y: float(y[0] + 0.5 * y[1] ** 2),
        terminal_gradient=lambda y: np.array([1.0, y[1]]),
    )


@pytest.fixture
def sine_prob():
    """Scalar dynamics with non-quadratic control dependence."""
    return ControlProblem(
        name="sine-control",
        state_dim=1,
        control_dim=1,
        horizon=1.0,
        y0=np.array([1.0]),
        f=lambda y, u: np.array([np.sin(u[0]) * y[0]]),
        g=lambda y, u: np.array([-0.5 * y[0]]),
        f_y=lambda y, u: np.array([[np.sin(u[0])]]),
        g_y=lambda y, u: np.array([[-0.5]]),
        f_u=lambda y, u: np.array([[np.cos(u[0]) * y[0]]]),
        g_u=lambda y, u: np.array([[0.0]]),
        terminal_cost=lambda y: float(y[0]),
        terminal_gradient=lambda y: np.array([1.0]),
    )
