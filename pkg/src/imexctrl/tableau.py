"""IMEX Runge-Kutta coefficient sets and their adjoint-scheme transforms.

An IMEX (implicit-explicit) additive Runge-Kutta method integrates

    y' = f(y, u) + g(y, u),

treating the non-stiff part f with an explicit tableau (a_ex, w_ex) and the
stiff part g with a diagonally implicit tableau (a_im, w_im).  Both tableaus
share the stage count s.  The method is diagonally implicit when a_ex is
strictly lower triangular and a_im is lower triangular.

Differentiating the step map of such a method produces a second additive
scheme that propagates adjoint variables backward.  Rescaling its stage
multipliers by the quadrature weights gives four coefficient matrices

    alpha_ex[i, j] = w_ex[j] - (w_ex[j] / w_ex[i]) * a_ex[j, i]
    alpha_im[i, j] = w_im[j] - (w_im[j] / w_ex[i]) * a_ex[j, i]
    beta_ex[i, j]  = w_ex[j] - (w_ex[j] / w_im[i]) * a_im[j, i]
    beta_im[i, j]  = w_im[j] - (w_im[j] / w_im[i]) * a_im[j, i]

together with the complementary "backward" family obtained by dropping the
leading weight, e.g. back_alpha_ex[i, j] = (w_ex[j] / w_ex[i]) * a_ex[j, i],
so that forward + backward = weight in every entry.  The transform needs
nonzero weights; a partial extension covers tableaus whose implicit weight
vector starts with a single zero (the classical ARS layout).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ImexTableau",
    "DerivedCoefficients",
    "AdjointCoefficients",
    "StructuralClassification",
    "Validity",
    "TableauParseError",
    "BUILTIN_SCHEMES",
    "builtin",
    "parse_tableau",
    "serialize_tableau",
    "derive_coefficients",
    "adjoint_coefficients",
    "classify",
]

# Tolerance for structural zero / equality tests on tableau entries.
STRUCT_TOL = 1e-14

# The one irrational entry used by the builtin schemes, kept as a named
# constant so that parse/serialize can round-trip it exactly.
_GAMMA_SSP2 = 1.0 - 1.0 / math.sqrt(2.0)
_GAMMA_TOKEN = "1-1/sqrt(2)"


class TableauParseError(ValueError):
    """Malformed tableau text.  Carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Validity(Enum):
    """Weight pattern under which the adjoint coefficient transform exists."""

    ALL_WEIGHTS_NONZERO = "AllWeightsNonzero"
    ARS_EXTENSION = "ArsExtension"
    UNAVAILABLE = "Unavailable"


@dataclass(frozen=True)
class ImexTableau:
    """Coefficient pair of an IMEX Runge-Kutta method.

    Attributes
    ----------
    name : str
        Identifier, e.g. ``imex-ssp2``.
    a_ex : (s, s) ndarray
        Explicit-part coefficient matrix (applied to f).
    a_im : (s, s) ndarray
        Implicit-part coefficient matrix (applied to g).
    w_ex, w_im : (s,) ndarray
        Quadrature weights of the explicit and implicit part.
    """

    name: str
    a_ex: np.ndarray
    a_im: np.ndarray
    w_ex: np.ndarray
    w_im: np.ndarray

    def __post_init__(self):
        a_ex = np.ascontiguousarray(np.asarray(self.a_ex, dtype=float))
        a_im = np.ascontiguousarray(np.asarray(self.a_im, dtype=float))
        w_ex = np.ascontiguousarray(np.asarray(self.w_ex, dtype=float))
        w_im = np.ascontiguousarray(np.asarray(self.w_im, dtype=float))
        s = w_ex.shape[0]
        if a_ex.shape != (s, s) or a_im.shape != (s, s) or w_im.shape != (s,):
            raise ValueError(
                f"inconsistent tableau shapes: a_ex {a_ex.shape}, "
                f"a_im {a_im.shape}, w_ex {w_ex.shape}, w_im {w_im.shape}"
            )
        for label, arr in (("a_ex", a_ex), ("a_im", a_im), ("w_ex", w_ex), ("w_im", w_im)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {label}")
        object.__setattr__(self, "a_ex", a_ex)
        object.__setattr__(self, "a_im", a_im)
        object.__setattr__(self, "w_ex", w_ex)
        object.__setattr__(self, "w_im", w_im)

    @property
    def s(self) -> int:
        """Stage count."""
        return self.w_ex.shape[0]

    @property
    def c_ex(self) -> np.ndarray:
        """Explicit abscissae (row sums of a_ex)."""
        return self.a_ex.sum(axis=1)

    @property
    def c_im(self) -> np.ndarray:
        """Implicit abscissae (row sums of a_im)."""
        return self.a_im.sum(axis=1)


@dataclass(frozen=True)
class DerivedCoefficients:
    """Vectors derived from a tableau that drive the adjoint order conditions.

    All entries follow directly from the tableau:

    * ``c_ex``, ``c_im``: abscissae (row sums of a_ex, a_im);
    * ``d_ex = w_ex @ a_ex``, ``d_im = w_im @ a_ex``: weighted column sums
      of the explicit matrix;
    * ``e_ex = w_ex @ a_im``, ``e_im = w_im @ a_im``: same for the implicit
      matrix;
    * ``gamma_ex = 1 - d_ex / w_ex``, ``gamma_im = 1 - d_im / w_ex``,
      ``delta_ex = 1 - e_ex / w_im``, ``delta_im = 1 - e_im / w_im``:
      row sums of the adjoint matrices alpha_ex, alpha_im, beta_ex, beta_im.
      Entries are NaN (or +-inf) where the dividing weight vanishes.
    """

    c_ex: np.ndarray
    c_im: np.ndarray
    d_ex: np.ndarray
    d_im: np.ndarray
    e_ex: np.ndarray
    e_im: np.ndarray
    gamma_ex: np.ndarray
    gamma_im: np.ndarray
    delta_ex: np.ndarray
    delta_im: np.ndarray


@dataclass(frozen=True)
class AdjointCoefficients:
    """Coefficient matrices of the weight-rescaled adjoint scheme.

    ``alpha_*`` matrices enter the stage equation of the explicit-family
    adjoint stages, ``beta_*`` the implicit-family stages; the ``_ex`` /
    ``_im`` suffix names the vector field part whose Jacobian the matrix
    multiplies.  ``back_*`` are the complementary backward-run coefficients
    with ``back + forward = weight`` entrywise.  When ``validity`` is
    ``UNAVAILABLE`` every matrix is None.
    """

    validity: Validity
    alpha_ex: np.ndarray | None
    alpha_im: np.ndarray | None
    beta_ex: np.ndarray | None
    beta_im: np.ndarray | None
    back_alpha_ex: np.ndarray | None
    back_alpha_im: np.ndarray | None
    back_beta_ex: np.ndarray | None
    back_beta_im: np.ndarray | None


@dataclass(frozen=True)
class StructuralClassification:
    """Boolean structure flags of a tableau (tested entrywise at 1e-14)."""

    diagonally_implicit: bool
    globally_stiffly_accurate: bool
    weights_equal: bool
    ars_type: bool


def _builtin_ssp2() -> ImexTableau:
    g = _GAMMA_SSP2
    return ImexTableau(
        name="imex-ssp2",
        a_ex=[[0.0, 0.0], [1.0, 0.0]],
        a_im=[[g, 0.0], [1.0 - 2.0 * g, g]],
        w_ex=[0.5, 0.5],
        w_im=[0.5, 0.5],
    )


def _builtin_gsa() -> ImexTableau:
    return ImexTableau(
        name="imex-gsa",
        a_ex=[
            [0.0, 0.0, 0.0, 0.0],
            [3.0 / 2.0, 0.0, 0.0, 0.0],
            [5.0 / 6.0, -1.0 / 3.0, 0.0, 0.0],
            [1.0 / 3.0, 1.0 / 6.0, 1.0 / 2.0, 0.0],
        ],
        a_im=[
            [1.0 / 2.0, 0.0, 0.0, 0.0],
            [3.0 / 4.0, 1.0 / 2.0, 0.0, 0.0],
            [-1.0 / 4.0, 0.0, 1.0 / 2.0, 0.0],
            [1.0 / 6.0, -1.0 / 6.0, 1.0 / 2.0, 1.0 / 2.0],
        ],
        w_ex=[1.0 / 3.0, 1.0 / 6.0, 1.0 / 2.0, 0.0],
        w_im=[1.0 / 6.0, -1.0 / 6.0, 1.0 / 2.0, 1.0 / 2.0],
    )


def _builtin_hag() -> ImexTableau:
    return ImexTableau(
        name="imex-hag",
        a_ex=[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [-1.0, 2.0, 0.0]],
        a_im=[[0.0, 0.0, 0.0], [0.25, 0.25, 0.0], [0.0, 1.0, 0.0]],
        w_ex=[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        w_im=[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    )


def _builtin_sa3() -> ImexTableau:
    w = [0.25, 0.75, -0.5, 0.5]
    return ImexTableau(
        name="imex-sa3",
        a_ex=[
            [0.0, 0.0, 0.0, 0.0],
            [2.0 / 3.0, 0.0, 0.0, 0.0],
            [0.75, 0.25, 0.0, 0.0],
            [0.25, 0.75, 0.0, 0.0],
        ],
        a_im=[
            [0.0, 0.0, 0.0, 0.0],
            [-1.0 / 3.0, 1.0, 0.0, 0.0],
            [-0.25, 0.25, 1.0, 0.0],
            [0.25, 0.75, -0.5, 0.5],
        ],
        w_ex=w,
        w_im=w,
    )


_BUILTINS = {
    "imex-ssp2": _builtin_ssp2,
    "imex-gsa": _builtin_gsa,
    "imex-hag": _builtin_hag,
    "imex-sa3": _builtin_sa3,
}

BUILTIN_SCHEMES = tuple(sorted(_BUILTINS))


def builtin(name: str) -> ImexTableau:
    """Return a builtin scheme by name.

    Raises ValueError listing the available names when the lookup fails.
    """
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(
            f"unknown scheme {name!r}; available: {', '.join(BUILTIN_SCHEMES)}"
        ) from None


_RATIONAL = re.compile(r"^([+-]?\d+)/(\d+)$")


def _parse_value(token: str, line: int) -> float:
    if token == _GAMMA_TOKEN:
        return _GAMMA_SSP2
    m = _RATIONAL.match(token)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise TableauParseError(f"zero denominator in {token!r}", line)
        return num / den
    try:
        return float(token)
    except ValueError:
        raise TableauParseError(f"cannot parse value {token!r}", line) from None


def _parse_row(body: str, line: int, expect: int, what: str) -> list[float]:
    values = [_parse_value(tok, line) for tok in body.split()]
    if len(values) != expect:
        raise TableauParseError(
            f"{what} expects {expect} values, got {len(values)}", line
        )
    return values


def parse_tableau(text: str) -> ImexTableau:
    """Parse the plain-text tableau format.

    The format is line oriented::

        name: <identifier>
        s: <stage count>
        tilde_a:
        <s rows of s whitespace-separated values>    # explicit matrix
        a:
        <s rows>                                     # implicit matrix
        tilde_w: <s values>                          # explicit weights
        w: <s values>                                # implicit weights

    ``#`` starts a comment; blank lines are skipped.  Values are decimal
    literals, rationals ``p/q``, or the token ``1-1/sqrt(2)``.  Errors raise
    :class:`TableauParseError` carrying the offending line number.
    """
    # Non-blank lines with their original 1-based numbers, comments stripped.
    lines: list[tuple[int, str]] = []
    for num, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((num, stripped))

    pos = 0

    def take(key: str) -> tuple[int, str]:
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 1
            raise TableauParseError(f"unexpected end of input, wanted {key!r}", last)
        num, content = lines[pos]
        if not content.startswith(key + ":"):
            raise TableauParseError(f"expected {key!r}, got {content!r}", num)
        pos += 1
        return num, content[len(key) + 1 :].strip()

    def take_matrix(key: str, s: int) -> np.ndarray:
        nonlocal pos
        num, trailing = take(key)
        if trailing:
            raise TableauParseError(f"{key!r} header must not carry values", num)
        rows = []
        for r in range(s):
            if pos >= len(lines):
                raise TableauParseError(
                    f"matrix {key!r} row {r + 1} missing", lines[-1][0]
                )
            rnum, body = lines[pos]
            pos += 1
            rows.append(_parse_row(body, rnum, s, f"matrix {key!r} row"))
        return np.array(rows)

    num, name = take("name")
    if not name:
        raise TableauParseError("empty scheme name", num)
    num, s_text = take("s")
    try:
        s = int(s_text)
    except ValueError:
        raise TableauParseError(f"stage count {s_text!r} is not an integer", num) from None
    if s < 1:
        raise TableauParseError(f"stage count must be positive, got {s}", num)

    a_ex = take_matrix("tilde_a", s)
    a_im = take_matrix("a", s)
    num, body = take("tilde_w")
    w_ex = np.array(_parse_row(body, num, s, "'tilde_w'"))
    num, body = take("w")
    w_im = np.array(_parse_row(body, num, s, "'w'"))
    if pos < len(lines):
        raise TableauParseError(f"trailing content {lines[pos][1]!r}", lines[pos][0])
    return ImexTableau(name=name, a_ex=a_ex, a_im=a_im, w_ex=w_ex, w_im=w_im)


def _format_value(v: float) -> str:
    if v == _GAMMA_SSP2:
        return _GAMMA_TOKEN
    return repr(float(v))


def serialize_tableau(tab: ImexTableau) -> str:
    """Emit the plain-text format; ``parse_tableau`` round-trips bit-exactly."""
    out = [f"name: {tab.name}", f"s: {tab.s}"]
    for key, mat in (("tilde_a", tab.a_ex), ("a", tab.a_im)):
        out.append(f"{key}:")
        for row in mat:
            out.append(" ".join(_format_value(v) for v in row))
    out.append("tilde_w: " + " ".join(_format_value(v) for v in tab.w_ex))
    out.append("w: " + " ".join(_format_value(v) for v in tab.w_im))
    return "\n".join(out) + "\n"


def derive_coefficients(tab: ImexTableau) -> DerivedCoefficients:
    """Compute abscissae, weighted column sums, and adjoint row sums.

    The gamma/delta vectors divide by the weights; entries where the
    dividing weight vanishes come out as NaN or +-inf.
    """
    d_ex = tab.w_ex @ tab.a_ex
    d_im = tab.w_im @ tab.a_ex
    e_ex = tab.w_ex @ tab.a_im
    e_im = tab.w_im @ tab.a_im
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma_ex = 1.0 - d_ex / tab.w_ex
        gamma_im = 1.0 - d_im / tab.w_ex
        delta_ex = 1.0 - e_ex / tab.w_im
        delta_im = 1.0 - e_im / tab.w_im
    return DerivedCoefficients(
        c_ex=tab.c_ex,
        c_im=tab.c_im,
        d_ex=d_ex,
        d_im=d_im,
        e_ex=e_ex,
        e_im=e_im,
        gamma_ex=gamma_ex,
        gamma_im=gamma_im,
        delta_ex=delta_ex,
        delta_im=delta_im,
    )


def adjoint_coefficients(tab: ImexTableau, tol: float = STRUCT_TOL) -> AdjointCoefficients:
    """Build the adjoint coefficient matrices where the weight pattern allows.

    Full transform: every weight of both families nonzero.  ARS extension:
    all explicit weights nonzero, ``w_im[0] == 0`` and the remaining
    implicit weights nonzero; the first beta row is then fixed to
    ``beta_ex[0] = w_ex``, ``beta_im[0] = w_im`` (backward rows zero), which
    pins the corresponding implicit-family stage to the step's adjoint
    value.  Any other zero pattern yields ``Validity.UNAVAILABLE`` with all
    matrices None.
    """
    w_ex, w_im = tab.w_ex, tab.w_im
    ex_nonzero = np.all(np.abs(w_ex) > tol)
    im_nonzero = np.all(np.abs(w_im) > tol)

    if ex_nonzero and im_nonzero:
        validity = Validity.ALL_WEIGHTS_NONZERO
    elif ex_nonzero and abs(w_im[0]) <= tol and np.all(np.abs(w_im[1:]) > tol):
        validity = Validity.ARS_EXTENSION
    else:
        return AdjointCoefficients(
            Validity.UNAVAILABLE, None, None, None, None, None, None, None, None
        )

    # back_*[i, j] = (weight_j / own_weight_i) * transposed tableau entry.
    back_alpha_ex = (w_ex[None, :] / w_ex[:, None]) * tab.a_ex.T
    back_alpha_im = (w_im[None, :] / w_ex[:, None]) * tab.a_ex.T
    if validity is Validity.ALL_WEIGHTS_NONZERO:
        back_beta_ex = (w_ex[None, :] / w_im[:, None]) * tab.a_im.T
        back_beta_im = (w_im[None, :] / w_im[:, None]) * tab.a_im.T
    else:
        back_beta_ex = np.zeros((tab.s, tab.s))
        back_beta_im = np.zeros((tab.s, tab.s))
        back_beta_ex[1:] = (w_ex[None, :] / w_im[1:, None]) * tab.a_im.T[1:]
        back_beta_im[1:] = (w_im[None, :] / w_im[1:, None]) * tab.a_im.T[1:]

    return AdjointCoefficients(
        validity=validity,
        alpha_ex=w_ex[None, :] - back_alpha_ex,
        alpha_im=w_im[None, :] - back_alpha_im,
        beta_ex=w_ex[None, :] - back_beta_ex,
        beta_im=w_im[None, :] - back_beta_im,
        back_alpha_ex=back_alpha_ex,
        back_alpha_im=back_alpha_im,
        back_beta_ex=back_beta_ex,
        back_beta_im=back_beta_im,
    )


def classify(tab: ImexTableau, tol: float = STRUCT_TOL) -> StructuralClassification:
    """Structure flags: DIRK shape, stiff accuracy, weight equality, ARS layout."""
    s = tab.s
    upper_ex = np.triu(tab.a_ex, k=0)  # includes diagonal
    upper_im = np.triu(tab.a_im, k=1)
    diagonally_implicit = bool(
        np.all(np.abs(upper_ex) <= tol) and np.all(np.abs(upper_im) <= tol)
    )
    globally_stiffly_accurate = bool(
        np.all(np.abs(tab.a_ex[s - 1] - tab.w_ex) <= tol)
        and np.all(np.abs(tab.a_im[s - 1] - tab.w_im) <= tol)
    )
    weights_equal = bool(np.all(np.abs(tab.w_ex - tab.w_im) <= tol))
    ars_type = bool(
        np.all(np.abs(tab.w_ex) > tol)
        and abs(tab.w_im[0]) <= tol
        and np.all(np.abs(tab.w_im[1:]) > tol)
    )
    return StructuralClassification(
        diagonally_implicit=diagonally_implicit,
        globally_stiffly_accurate=globally_stiffly_accurate,
        weights_equal=weights_equal,
        ars_type=ars_type,
    )
