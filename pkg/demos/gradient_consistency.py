"""Check that differentiating commutes with discretizing, two ways.

First the global statement: the reduced gradient assembled from one
forward/adjoint pair equals central differences of the discrete objective,
component by component.  Then the local statement: the closed-form
stage-control gradient of the per-step Hamiltonian matches differencing
that Hamiltonian directly, at a handful of random steps.
"""

import numpy as np

from imexctrl import (
    ControlGrid,
    builtin,
    discrete_hamiltonian_gradient_check,
    fd_objective_gradient,
    hager_relaxed,
    reduced_gradient,
)


def main() -> None:
    tab = builtin("imex-ssp2")
    prob = hager_relaxed(0.1)
    n_steps = 20
    rng = np.random.default_rng(0x5EED)
    u = ControlGrid.per_step(rng.standard_normal((n_steps, 1)), tab.s)

    grad = reduced_gradient(tab, prob, u)
    fd = fd_objective_gradient(tab, prob, u)
    print(f"scheme {tab.name}, {prob.name}, N = {n_steps}, random control")
    print(f"  |F|_inf                  = {grad.norm_inf:.6e}")
    print(f"  max |adjoint - FD|       = {float(np.max(np.abs(grad.values - fd))):.3e}")

    print("step Hamiltonian gradient, closed form vs FD:")
    for step_index in sorted(rng.integers(0, n_steps, size=5)):
        diff = discrete_hamiltonian_gradient_check(tab, prob, u, int(step_index))
        print(f"  step {step_index:2d}: max discrepancy = {diff:.3e}")


if __name__ == "__main__":
    main()
