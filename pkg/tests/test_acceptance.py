"""Acceptance gate: one test and one printed pass/fail line per criterion.

Every test measures its own wall time against the stated budget, so a
criterion fails either on substance or on runtime.  Residual bounds are
asserted exactly as stated; "non-growing" for the symplectic sweep means
the residual stays below the bound uniformly over the h values rather
than deteriorating as h shrinks.
"""

import dataclasses
import time

import numpy as np
import pytest

from imexctrl import (
    BUILTIN_SCHEMES,
    OPTIMIZED,
    ControlGrid,
    adjoint_backward,
    adjoint_block,
    adjoint_coefficients,
    adjoint_coupling_conditions,
    adjoint_rescaled,
    builtin,
    discrete_hamiltonian_gradient_check,
    fd_objective_gradient,
    forward,
    forward_conditions,
    hager_hamiltonian,
    hager_relaxed,
    linear_split_problem,
    reduced_gradient,
    run_convergence,
    symplectic_residual,
)


def _report(number: int, label: str, ok: bool, elapsed: float, budget: float,
            detail: str = "") -> None:
    within = elapsed < budget
    verdict = "PASS" if (ok and within) else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    print(f"{verdict} criterion {number}: {label} "
          f"({elapsed:.2f}s of {budget:.0f}s budget){suffix}")
    assert ok, f"criterion {number} failed: {label}{suffix}"
    assert within, f"criterion {number} exceeded budget: {elapsed:.2f}s >= {budget}s"


def test_criterion_1_order_condition_suite():
    start = time.perf_counter()
    ok = True
    worst = 0.0
    for name, order in (("imex-ssp2", 2), ("imex-gsa", 2),
                        ("imex-hag", 3), ("imex-sa3", 3)):
        tab = builtin(name)
        for rep in (forward_conditions(tab, order),
                    adjoint_coupling_conditions(tab, order)):
            ok = ok and rep.all_satisfied
            worst = max(worst, max(c.residual for c in rep.conditions))
    ok = ok and worst <= 1e-12
    _report(1, "order and coupling conditions", ok,
            time.perf_counter() - start, 1.0, f"max residual {worst:.3e}")


def test_criterion_2_gradient_commutes_with_discretization():
    start = time.perf_counter()
    n_steps = 20
    rng = np.random.default_rng(0x5EED)
    ok = True
    worst = 0.0
    for name in BUILTIN_SCHEMES:
        tab = builtin(name)
        controls = [
            ControlGrid.constant(1.0, n_steps, tab.s, 1),
            ControlGrid.per_step(rng.standard_normal((n_steps, 1)), tab.s),
        ]
        for eps in (0.1, 1.0):
            prob = hager_relaxed(eps)
            for u in controls:
                grad = reduced_gradient(tab, prob, u).values
                fd = fd_objective_gradient(tab, prob, u)
                diff = np.abs(grad - fd)
                ok = ok and bool(np.all(diff <= 1e-6 + 1e-4 * np.abs(fd)))
                worst = max(worst, float(diff.max()))
    _report(2, "adjoint gradient vs finite differences", ok,
            time.perf_counter() - start, 10.0, f"max diff {worst:.3e}")


def test_criterion_3_adjoint_form_equivalence():
    start = time.perf_counter()
    prob = hager_relaxed(0.1)
    n_steps = 40
    ok = True
    worst = 0.0
    for name in BUILTIN_SCHEMES:
        tab = builtin(name)
        u = ControlGrid.constant(1.0, n_steps, tab.s, 1)
        traj = forward(tab, prob, u, n_steps)
        base = adjoint_backward(tab, prob, traj, u)
        scale = float(np.max(np.abs(base.p)))
        others = [adjoint_block(tab, prob, traj, u)]
        if adjoint_coefficients(tab).alpha_ex is not None:
            others.append(adjoint_rescaled(tab, prob, traj, u))
        for other in others:
            rel = float(np.max(np.abs(other.p - base.p))) / scale
            ok = ok and rel <= 1e-11
            worst = max(worst, rel)
    _report(3, "three adjoint formulations agree", ok,
            time.perf_counter() - start, 5.0, f"max rel diff {worst:.3e}")


def test_criterion_4_third_order_convergence_and_stiff_loss():
    start = time.perf_counter()
    tab = builtin("imex-sa3")
    smooth = run_convergence(tab, [10.0], [10, 20, 40, 80, 160, 320])
    mean_order = smooth.mean_observed_order(10.0, "err_x_inf", [20, 40, 80, 160])
    err10 = smooth.value(10.0, 10, "err_x_inf")
    anchor = 3.1890e-05
    ok = (
        all(r.status == "ok" for r in smooth.rows)
        and mean_order >= 2.9
        and anchor / 3.0 <= err10 <= anchor * 3.0
    )
    stiff = run_convergence(tab, [1e-4], [40, 80, 160, 320])
    stiff_order = stiff.mean_observed_order(1e-4, "err_z_inf", [80, 160, 320])
    ok = ok and all(r.status == "ok" for r in stiff.rows) and stiff_order <= 1.0
    _report(4, "third-order scheme convergence with stiff order loss", ok,
            time.perf_counter() - start, 60.0,
            f"x-order {mean_order:.2f}, err(N=10) {err10:.3e}, "
            f"stiff z-order {stiff_order:.2f}")


def test_criterion_5_stiffly_accurate_scheme_keeps_order_two():
    start = time.perf_counter()
    tab = builtin("imex-gsa")
    rep = run_convergence(tab, [1e-8], [10, 20, 40, 80, 160, 320])
    mean_order = rep.mean_observed_order(1e-8, "err_x_inf", [20, 40, 80, 160, 320])
    ok = all(r.status == "ok" for r in rep.rows) and abs(mean_order - 2.0) <= 0.3
    _report(5, "no stiff order loss for the globally stiffly accurate scheme",
            ok, time.perf_counter() - start, 60.0, f"x-order {mean_order:.2f}")


def test_criterion_6_optimizer_reproduces_reference_solution():
    start = time.perf_counter()
    tab = builtin("imex-ssp2")
    rep = run_convergence(
        tab, [0.0], [320], reference_n=640,
        control_source=OPTIMIZED, tol_norm_sq=1e-8,
    )
    row = rep.row(0.0, 320)
    ok = (
        row.status == "ok"
        and row.values["norm_sq_F"] <= 1e-8
        and row.values["err_x_inf"] <= 3.3e-3
        and row.values["err_u_inf"] <= 2.9e-3
    )
    _report(6, "full optimization run against the fine-grid solve", ok,
            time.perf_counter() - start, 120.0,
            f"err_x {row.values['err_x_inf']:.3e}, "
            f"err_u {row.values['err_u_inf']:.3e}")


def test_criterion_7_symplectic_map_and_perturbation_sensitivity():
    start = time.perf_counter()
    h_values = [0.2, 0.1, 0.05]
    cases = [
        (linear_split_problem(0.7, -1.3), np.array([1.0])),
        (hager_hamiltonian(1.0), np.array([1.0, 0.2, 0.1])),
    ]
    ok = True
    worst = 0.0
    for name in ("imex-ssp2", "imex-sa3"):
        tab = builtin(name)
        for prob, p0 in cases:
            rep = symplectic_residual(tab, prob, prob.y0, p0, h_values)
            ok = ok and rep.qualified and rep.residual <= 1e-6
            worst = max(worst, rep.residual)
    tab = builtin("imex-ssp2")
    adj = adjoint_coefficients(tab)
    beta = adj.beta_im.copy()
    beta[0, 0] += 0.01
    pert = symplectic_residual(
        tab, cases[0][0], cases[0][0].y0, cases[0][1], h_values,
        adj=dataclasses.replace(adj, beta_im=beta),
    )
    rs = [r for _, r in pert.residuals]
    rates = [np.log2(rs[0] / rs[1]), np.log2(rs[1] / rs[2])]
    ok = ok and rs[1] >= 1e-5 and all(abs(r - 2.0) <= 0.3 for r in rates)
    _report(7, "coupled map symplecticity and perturbation response", ok,
            time.perf_counter() - start, 30.0,
            f"max residual {worst:.3e}, perturbed rates "
            f"{rates[0]:.2f}/{rates[1]:.2f}")


def test_criterion_8_discrete_hamiltonian_gradient():
    start = time.perf_counter()
    tab = builtin("imex-ssp2")
    prob = hager_relaxed(0.1)
    rng = np.random.default_rng(0x5EED)
    u = ControlGrid.per_step(rng.standard_normal((20, 1)), tab.s)
    worst = 0.0
    for step_index in rng.integers(0, 20, size=5):
        worst = max(
            worst,
            discrete_hamiltonian_gradient_check(tab, prob, u, int(step_index)),
        )
    _report(8, "closed-form step Hamiltonian gradient matches differencing",
            worst <= 1e-6, time.perf_counter() - start, 5.0,
            f"max diff {worst:.3e}")
