"""Show the three adjoint formulations producing one and the same sequence.

The multiplier form solves small per-stage systems backward, the rescaled
form runs the transformed coefficient scheme, the block form solves one
stacked linear system per step.  Algebraically they are the same discrete
adjoint; this prints the worst pairwise deviation on the relaxation
benchmark for each builtin scheme.  The rescaled form needs the full
coefficient transform, so the zero-weight scheme reports it as undefined.
"""

import numpy as np

from imexctrl import (
    BUILTIN_SCHEMES,
    ControlGrid,
    UnsupportedStructureError,
    adjoint_backward,
    adjoint_block,
    adjoint_rescaled,
    builtin,
    forward,
    hager_relaxed,
)


def main() -> None:
    prob = hager_relaxed(0.1)
    n_steps = 40
    print(f"problem: {prob.name}, N = {n_steps}, u = 1")
    print(f"{'scheme':<12} {'|block - mult|':>16} {'|rescaled - mult|':>18}")
    for name in BUILTIN_SCHEMES:
        tab = builtin(name)
        u = ControlGrid.constant(1.0, n_steps, tab.s, 1)
        traj = forward(tab, prob, u, n_steps)
        mult = adjoint_backward(tab, prob, traj, u)
        block = adjoint_block(tab, prob, traj, u)
        d_block = float(np.max(np.abs(block.p - mult.p)))
        try:
            rescaled = adjoint_rescaled(tab, prob, traj, u)
            d_res = f"{float(np.max(np.abs(rescaled.p - mult.p))):16.3e}"
        except UnsupportedStructureError:
            d_res = f"{'undefined':>16}"
        print(f"{name:<12} {d_block:16.3e} {d_res:>18}")
    print()
    print("adjoint terminal/initial values (imex-ssp2):")
    tab = builtin("imex-ssp2")
    u = ControlGrid.constant(1.0, n_steps, tab.s, 1)
    traj = forward(tab, prob, u, n_steps)
    adj = adjoint_backward(tab, prob, traj, u)
    with np.printoptions(precision=6):
        print(f"  p(T) = {adj.p[-1]}")
        print(f"  p(0) = {adj.p[0]}")


if __name__ == "__main__":
    main()
