"""Machine verification of order and structure conditions for IMEX tableaus.

Four condition families are covered:

* classical order conditions of the forward method up to order 3, stated
  for both weight vectors and both abscissae families;
* coupling conditions that make the weight-rescaled adjoint scheme
  consistent of order 2, ``sum_i (w_im[i]/w_ex[i]) d_im[i] = 1/2`` and its
  three siblings, with the convention that a term whose dividing weight and
  multiplying coefficient both vanish is skipped (a zero denominator under
  a nonzero coefficient fails the condition with residual infinity);
* third-order sums ``sum_i d_im[i]^2 / w_im[i] = 1/3`` (and the e/cross
  variants) plus the gamma/delta row-sum conditions of the adjoint scheme;
* the algebraic symplecticity conditions: four matrices built from tableau,
  weights, and adjoint coefficients that must vanish entrywise, together
  with equality of the two weight vectors.

Every check produces a :class:`ConditionReport` whose rows carry the label,
both sides, the residual, and a pass flag, so reports can be rendered as
text or CSV without recomputation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tableau import (
    STRUCT_TOL,
    AdjointCoefficients,
    ImexTableau,
    Validity,
    adjoint_coefficients,
    derive_coefficients,
)

__all__ = [
    "Condition",
    "ConditionReport",
    "forward_conditions",
    "adjoint_coupling_conditions",
    "adjoint_gamma_conditions",
    "symplectic_conditions",
]

DEFAULT_TOL = 1e-12

# Zero test for the skip convention in weighted sums.
_ZERO_TOL = 1e-14


@dataclass(frozen=True)
class Condition:
    """One scalar condition: lhs compared against rhs at a tolerance."""

    label: str
    order: int
    lhs: float
    rhs: float
    residual: float
    satisfied: bool


@dataclass(frozen=True)
class ConditionReport:
    """Evaluated condition set with the tolerance used.

    ``max_order_satisfied`` is the largest k such that every condition of
    order <= k holds (0 when even the order-1 conditions fail; structural
    conditions carry order 0 and do not take part).
    """

    conditions: tuple[Condition, ...]
    tolerance: float

    @property
    def max_order_satisfied(self) -> int:
        orders = sorted({c.order for c in self.conditions if c.order > 0})
        reached = 0
        for o in orders:
            if all(c.satisfied for c in self.conditions if c.order == o):
                reached = o
            else:
                break
        return reached

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def failed(self) -> tuple[Condition, ...]:
        return tuple(c for c in self.conditions if not c.satisfied)

    def to_csv(self) -> str:
        lines = ["label,lhs,rhs,residual,satisfied"]
        for c in self.conditions:
            lines.append(
                f"{c.label},{c.lhs:.17g},{c.rhs:.17g},{c.residual:.17g},"
                f"{'true' if c.satisfied else 'false'}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(len(c.label) for c in self.conditions) if self.conditions else 8
        lines = []
        for c in self.conditions:
            mark = "ok  " if c.satisfied else "FAIL"
            lines.append(
                f"{mark} [{c.order}] {c.label:<{width}} "
                f"lhs={c.lhs: .15e} rhs={c.rhs: .15e} resid={c.residual:.3e}"
            )
        lines.append(
            f"tolerance {self.tolerance:g}; max order satisfied: "
            f"{self.max_order_satisfied}"
        )
        return "\n".join(lines)


def _condition(label: str, order: int, lhs: float, rhs: float, tol: float) -> Condition:
    if math.isfinite(lhs):
        residual = abs(lhs - rhs)
    else:
        residual = math.inf
    return Condition(label, order, float(lhs), float(rhs), residual, residual <= tol)


def forward_conditions(
    tab: ImexTableau, up_to_order: int = 3, tol: float = DEFAULT_TOL
) -> ConditionReport:
    """Classical order conditions of the forward IMEX method, orders 1..3.

    Every condition is stated for each admissible combination of the two
    weight vectors, the two abscissae families, and (at order 3) the two
    coefficient matrices.
    """
    if not 1 <= up_to_order <= 3:
        raise ValueError(f"up_to_order must be 1, 2, or 3, got {up_to_order}")
    weights = {"w_ex": tab.w_ex, "w_im": tab.w_im}
    abscissae = {"c_ex": tab.c_ex, "c_im": tab.c_im}
    matrices = {"a_ex": tab.a_ex, "a_im": tab.a_im}

    conds: list[Condition] = []
    for wn, w in weights.items():
        conds.append(_condition(f"sum({wn})", 1, float(np.sum(w)), 1.0, tol))
    if up_to_order >= 2:
        for wn, w in weights.items():
            for cn, c in abscissae.items():
                conds.append(_condition(f"{wn}.{cn}", 2, float(w @ c), 0.5, tol))
    if up_to_order >= 3:
        pairs = [("c_ex", "c_ex"), ("c_ex", "c_im"), ("c_im", "c_im")]
        for wn, w in weights.items():
            for xn, yn in pairs:
                lhs = float(w @ (abscissae[xn] * abscissae[yn]))
                conds.append(_condition(f"{wn}.({xn}*{yn})", 3, lhs, 1.0 / 3.0, tol))
        for wn, w in weights.items():
            for an, a in matrices.items():
                for cn, c in abscissae.items():
                    lhs = float(w @ (a @ c))
                    conds.append(_condition(f"{wn}.{an}.{cn}", 3, lhs, 1.0 / 6.0, tol))
    return ConditionReport(tuple(conds), tol)


def _weighted_ratio_sum(num_w: np.ndarray, den_w: np.ndarray, coef: np.ndarray) -> float:
    """sum_i (num_w[i] / den_w[i]) * coef[i] under the 0/0 skip convention."""
    total = 0.0
    for wn, wd, c in zip(num_w, den_w, coef):
        if abs(wd) <= _ZERO_TOL:
            if abs(c) <= _ZERO_TOL:
                continue  # 0/0 term contributes nothing
            return math.inf
        total += wn / wd * c
    return total


def _ratio_square_sum(num: np.ndarray, den_w: np.ndarray) -> float:
    """sum_i num[i] / den_w[i] under the same skip convention."""
    total = 0.0
    for n, wd in zip(num, den_w):
        if abs(wd) <= _ZERO_TOL:
            if abs(n) <= _ZERO_TOL:
                continue
            return math.inf
        total += n / wd
    return total


def adjoint_coupling_conditions(
    tab: ImexTableau, up_to_order: int = 3, tol: float = DEFAULT_TOL
) -> ConditionReport:
    """Conditions tying the two tableau halves together through the adjoint.

    Order 2: the four weight-ratio sums over d/e equal 1/2.  Order 3: the
    three quotient sums over d_im, e_im equal 1/3.  Terms with vanishing
    denominator weight are skipped when the multiplying coefficient also
    vanishes and otherwise fail the condition with residual infinity.
    """
    if not 2 <= up_to_order <= 3:
        raise ValueError(f"up_to_order must be 2 or 3, got {up_to_order}")
    der = derive_coefficients(tab)
    conds = [
        _condition(
            "(w_im/w_ex).d_im",
            2,
            _weighted_ratio_sum(tab.w_im, tab.w_ex, der.d_im),
            0.5,
            tol,
        ),
        _condition(
            "(w_im/w_ex).d_ex",
            2,
            _weighted_ratio_sum(tab.w_im, tab.w_ex, der.d_ex),
            0.5,
            tol,
        ),
        _condition(
            "(w_ex/w_im).e_im",
            2,
            _weighted_ratio_sum(tab.w_ex, tab.w_im, der.e_im),
            0.5,
            tol,
        ),
        _condition(
            "(w_ex/w_im).e_ex",
            2,
            _weighted_ratio_sum(tab.w_ex, tab.w_im, der.e_ex),
            0.5,
            tol,
        ),
    ]
    if up_to_order >= 3:
        third = 1.0 / 3.0
        conds.extend(
            [
                _condition(
                    "d_im^2/w_im",
                    3,
                    _ratio_square_sum(der.d_im * der.d_im, tab.w_im),
                    third,
                    tol,
                ),
                _condition(
                    "e_im^2/w_im",
                    3,
                    _ratio_square_sum(der.e_im * der.e_im, tab.w_im),
                    third,
                    tol,
                ),
                _condition(
                    "d_im*e_im/w_im",
                    3,
                    _ratio_square_sum(der.d_im * der.e_im, tab.w_im),
                    third,
                    tol,
                ),
            ]
        )
    return ConditionReport(tuple(conds), tol)


def adjoint_gamma_conditions(
    tab: ImexTableau,
    adj: AdjointCoefficients | None = None,
    tol: float = DEFAULT_TOL,
) -> ConditionReport:
    """Order conditions of the adjoint scheme in its own coefficients.

    Second order: the eight weighted sums of the row-sum vectors gamma/delta
    equal 1/2.  Third order: quadratic sums of row-sum vectors and abscissae
    (1/3) and double sums through the coefficient matrices (1/6), stated for
    the implicit weight vector.  Requires adjoint coefficients; raises
    ValueError when the transform is unavailable.
    """
    if adj is None:
        adj = adjoint_coefficients(tab)
    if adj.validity is Validity.UNAVAILABLE:
        raise ValueError(
            f"adjoint coefficients unavailable for tableau {tab.name!r}"
        )
    gamma_ex = adj.alpha_ex.sum(axis=1)
    gamma_im = adj.alpha_im.sum(axis=1)
    delta_ex = adj.beta_ex.sum(axis=1)
    delta_im = adj.beta_im.sum(axis=1)
    vectors = {
        "gamma_ex": gamma_ex,
        "gamma_im": gamma_im,
        "delta_ex": delta_ex,
        "delta_im": delta_im,
    }
    conds: list[Condition] = []
    for wn, w in (("w_im", tab.w_im), ("w_ex", tab.w_ex)):
        for vn, v in vectors.items():
            conds.append(_condition(f"{wn}.{vn}", 2, float(w @ v), 0.5, tol))

    third = 1.0 / 3.0
    sixth = 1.0 / 6.0
    w = tab.w_im
    quad_pairs = [
        ("gamma_im*gamma_im", gamma_im * gamma_im),
        ("delta_im*delta_im", delta_im * delta_im),
        ("gamma_im*delta_im", gamma_im * delta_im),
        ("c_im*gamma_im", tab.c_im * gamma_im),
        ("c_ex*gamma_im", tab.c_ex * gamma_im),
        ("c_im*delta_im", tab.c_im * delta_im),
        ("c_ex*delta_im", tab.c_ex * delta_im),
    ]
    for label, vec in quad_pairs:
        conds.append(_condition(f"w_im.({label})", 3, float(w @ vec), third, tol))
    double_sums = [
        ("beta_im.gamma_im", adj.beta_im, gamma_im),
        ("beta_im.delta_im", adj.beta_im, delta_im),
        ("alpha_im.gamma_im", adj.alpha_im, gamma_im),
        ("alpha_im.delta_im", adj.alpha_im, delta_im),
        ("beta_im.c_im", adj.beta_im, tab.c_im),
        ("beta_im.c_ex", adj.beta_im, tab.c_ex),
        ("alpha_im.c_im", adj.alpha_im, tab.c_im),
        ("alpha_im.c_ex", adj.alpha_im, tab.c_ex),
        ("a_im.gamma_im", tab.a_im, gamma_im),
        ("a_im.delta_im", tab.a_im, delta_im),
        ("a_ex.gamma_im", tab.a_ex, gamma_im),
        ("a_ex.delta_im", tab.a_ex, delta_im),
    ]
    for label, mat, vec in double_sums:
        conds.append(_condition(f"w_im.{label}", 3, float(w @ (mat @ vec)), sixth, tol))
    return ConditionReport(tuple(conds), tol)


def symplectic_conditions(
    tab: ImexTableau,
    adj: AdjointCoefficients | None = None,
    tol: float = DEFAULT_TOL,
) -> ConditionReport:
    """Algebraic symplecticity conditions of the coupled one-step map.

    The four matrices

        M1[i,j] = w_ex[i] w_ex[j] - w_ex[j] a_ex[j,i] - w_ex[i] alpha_ex[i,j]
        M2[i,j] = w_im[i] w_ex[j] - w_ex[j] a_im[j,i] - w_im[i] beta_ex[i,j]
        M3[i,j] = w_ex[i] w_im[j] - w_im[j] a_ex[j,i] - w_ex[i] alpha_im[i,j]
        M4[i,j] = w_im[i] w_im[j] - w_im[j] a_im[j,i] - w_im[i] beta_im[i,j]

    must vanish entrywise, and the two weight vectors must agree.  The map
    is declared symplecticity-qualified iff all five rows pass
    (``report.all_satisfied``).  Requires the full adjoint transform.
    """
    if adj is None:
        adj = adjoint_coefficients(tab)
    if adj.validity is not Validity.ALL_WEIGHTS_NONZERO:
        raise ValueError(
            "symplecticity conditions need the full adjoint transform "
            f"(validity {adj.validity.value!r} for tableau {tab.name!r})"
        )
    w_ex, w_im = tab.w_ex, tab.w_im
    aeT, aiT = tab.a_ex.T, tab.a_im.T
    m1 = w_ex[:, None] * w_ex[None, :] - w_ex[None, :] * aeT - w_ex[:, None] * adj.alpha_ex
    m2 = w_im[:, None] * w_ex[None, :] - w_ex[None, :] * aiT - w_im[:, None] * adj.beta_ex
    m3 = w_ex[:, None] * w_im[None, :] - w_im[None, :] * aeT - w_ex[:, None] * adj.alpha_im
    m4 = w_im[:, None] * w_im[None, :] - w_im[None, :] * aiT - w_im[:, None] * adj.beta_im
    # weight equality is a structural flag, tested at the classify tolerance
    conds = [
        _condition(
            "weights_equal", 0, float(np.max(np.abs(w_ex - w_im))), 0.0, STRUCT_TOL
        )
    ]
    for label, m in (("M1", m1), ("M2", m2), ("M3", m3), ("M4", m4)):
        conds.append(
            _condition(f"max|{label}|", 0, float(np.max(np.abs(m))), 0.0, tol)
        )
    return ConditionReport(tuple(conds), tol)
