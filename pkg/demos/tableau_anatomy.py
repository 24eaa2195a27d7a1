"""Walk through the builtin tableau pairs and their machine-checked structure.

For each scheme this prints the classification flags, the validity of the
weight-rescaled adjoint transform, and the order-condition verdicts for the
forward scheme and the state/adjoint coupling sums.  The point to notice:
the two second-order schemes fail the third-order coupling sums in
different ways (imex-gsa keeps them finite via the 0/0 skip convention,
a zero weight under a nonzero coefficient would make them blow up).
"""

from imexctrl import (
    BUILTIN_SCHEMES,
    adjoint_coefficients,
    adjoint_coupling_conditions,
    builtin,
    classify,
    forward_conditions,
)


def max_satisfied_order(tab) -> int:
    order = 0
    for k in (1, 2, 3):
        rep = forward_conditions(tab, k)
        if k >= 2:
            coupling = adjoint_coupling_conditions(tab, k)
            if not coupling.all_satisfied:
                break
        if not rep.all_satisfied:
            break
        order = k
    return order


def main() -> None:
    for name in BUILTIN_SCHEMES:
        tab = builtin(name)
        cls = classify(tab)
        adj = adjoint_coefficients(tab)
        print(f"{name}  (s = {tab.s})")
        print(f"  diagonally implicit:       {cls.diagonally_implicit}")
        print(f"  globally stiffly accurate: {cls.globally_stiffly_accurate}")
        print(f"  equal weight vectors:      {cls.weights_equal}")
        print(f"  ARS type:                  {cls.ars_type}")
        print(f"  adjoint transform:         {adj.validity.value}")
        print(f"  order incl. coupling:      {max_satisfied_order(tab)}")
        third = adjoint_coupling_conditions(tab, 3)
        worst = max(c.residual for c in third.conditions)
        print(f"  worst 3rd-order coupling residual: {worst:.3e}")
        print()


if __name__ == "__main__":
    main()
