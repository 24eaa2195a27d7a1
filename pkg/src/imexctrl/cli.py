"""Command-line front end.

Subcommands: ``tableau show``, ``order-check``, ``solve``, ``convergence``,
``symplectic-check``, ``gradient-check``.  All file outputs are CSV with a
header row, 17 significant digits, and newline line endings, so repeated
runs with identical flags produce byte-identical files.

Exit codes: 0 success; 1 a requested condition check failed; 2 solver
non-convergence or a failed integration step; 64 usage errors (bad flags,
unknown scheme names, malformed tableau files).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .convergence import EXACT_CONTROL, OPTIMIZED, run_convergence
from .integrate import (
    ControlGrid,
    IntegrationError,
    adjoint_to_csv,
    trajectory_to_csv,
)
from .optimize import (
    fd_objective_gradient,
    reduced_gradient,
    solve,
    solve_log_to_csv,
)
from .order_check import (
    DEFAULT_TOL,
    ConditionReport,
    adjoint_coupling_conditions,
    adjoint_gamma_conditions,
    forward_conditions,
)
from .problems import (
    hager_hamiltonian,
    hager_relaxed,
    hager_unrelaxed,
    linear_split_problem,
)
from .symplectic import symplectic_report_to_csv, symplectic_residual
from .tableau import (
    TableauParseError,
    Validity,
    adjoint_coefficients,
    builtin,
    classify,
    derive_coefficients,
    parse_tableau,
    serialize_tableau,
)

__all__ = ["main"]

USAGE_EXIT = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage code instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _load_tableau(token: str):
    if os.path.isfile(token):
        try:
            with open(token, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise _UsageError(f"cannot read tableau file {token}: {exc}")
        try:
            return parse_tableau(text)
        except TableauParseError as exc:
            raise _UsageError(f"{token}: line {exc.line}: {exc}")
    try:
        return builtin(token)
    except ValueError as exc:
        if os.sep in token or token.endswith(".txt"):
            raise _UsageError(f"no such tableau file: {token}")
        raise _UsageError(str(exc))


def _float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} expects comma-separated numbers, got {text!r}")


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} expects comma-separated integers, got {text!r}")


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _hager_for(eps: float):
    if eps < 0.0:
        raise _UsageError(f"--eps must be >= 0, got {eps:g}")
    return hager_relaxed(eps) if eps > 0.0 else hager_unrelaxed()


def _matrix_text(a: np.ndarray, indent: str = "  ") -> str:
    body = np.array2string(
        np.asarray(a), formatter={"float_kind": lambda v: f"{v:.17g}"}
    )
    return "\n".join(indent + line for line in body.splitlines())


def cmd_tableau_show(args) -> int:
    tab = _load_tableau(args.scheme)
    cls = classify(tab)
    adj = adjoint_coefficients(tab)
    out = serialize_tableau(tab)
    out += (
        f"# diagonally_implicit: {str(cls.diagonally_implicit).lower()}\n"
        f"# globally_stiffly_accurate: {str(cls.globally_stiffly_accurate).lower()}\n"
        f"# weights_equal: {str(cls.weights_equal).lower()}\n"
        f"# ars_type: {str(cls.ars_type).lower()}\n"
        f"# adjoint_transform: {adj.validity.value}\n"
    )
    sys.stdout.write(out)
    if args.full:
        der = derive_coefficients(tab)
        print("derived coefficients")
        for label in (
            "c_ex",
            "c_im",
            "d_ex",
            "d_im",
            "e_ex",
            "e_im",
            "gamma_ex",
            "gamma_im",
            "delta_ex",
            "delta_im",
        ):
            print(f"  {label}:")
            print(_matrix_text(getattr(der, label), indent="    "))
        print(f"adjoint transform ({adj.validity.value})")
        if adj.validity is not Validity.UNAVAILABLE:
            for label in (
                "alpha_ex",
                "alpha_im",
                "beta_ex",
                "beta_im",
                "back_alpha_ex",
                "back_alpha_im",
                "back_beta_ex",
                "back_beta_im",
            ):
                print(f"  {label}:")
                print(_matrix_text(getattr(adj, label), indent="    "))
    return 0


def cmd_order_check(args) -> int:
    tab = _load_tableau(args.scheme)
    order, tol = args.order, args.tol
    sections: list[tuple[str, ConditionReport]] = [
        ("forward order conditions", forward_conditions(tab, order, tol))
    ]
    notes: list[str] = []
    if order >= 2:
        sections.append(
            ("adjoint coupling conditions", adjoint_coupling_conditions(tab, order, tol))
        )
        adj = adjoint_coefficients(tab)
        if adj.validity is Validity.UNAVAILABLE:
            notes.append(
                "note: adjoint scheme conditions skipped "
                "(transformed coefficients unavailable: zero weight)"
            )
        else:
            gamma = adjoint_gamma_conditions(tab, adj, tol)
            kept = tuple(c for c in gamma.conditions if c.order <= order)
            sections.append(("adjoint scheme conditions", ConditionReport(kept, tol)))
    for name, rep in sections:
        print(f"{tab.name}: {name}")
        print(rep.to_text())
    for note in notes:
        print(note)
    ok = all(rep.all_satisfied for _, rep in sections)
    if args.csv:
        merged = ConditionReport(
            tuple(c for _, rep in sections for c in rep.conditions), tol
        )
        _write_text(args.csv, merged.to_csv())
        print(f"wrote {args.csv}")
    print(f"result: {'pass' if ok else 'fail'} (conditions up to order {order})")
    return 0 if ok else 1


def cmd_solve(args) -> int:
    tab = _load_tableau(args.scheme)
    prob = _hager_for(args.eps)
    u0 = ControlGrid.constant(args.u0, args.n, tab.s, prob.control_dim)
    res = solve(tab, prob, u0, tol_norm_sq=args.tol, max_iter=args.max_iter)
    print(f"scheme={tab.name} problem={prob.name} eps={args.eps:.17g} N={args.n}")
    print(f"iterations={res.iterations} converged={str(res.converged).lower()}")
    print(f"norm_sq_F={res.final_norm_sq:.17g}")
    print(f"objective={prob.terminal_cost(res.trajectory.y[args.n]):.17g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        outputs = {
            "state.csv": trajectory_to_csv(res.trajectory),
            "adjoint.csv": adjoint_to_csv(res.adjoint),
            "control.csv": _control_csv(res),
            "solve_log.csv": solve_log_to_csv(res),
        }
        for fname, text in outputs.items():
            path = os.path.join(args.out, fname)
            _write_text(path, text)
            print(f"wrote {path}")
    if not res.converged:
        sys.stderr.write(
            f"imexctrl solve: not converged after {res.iterations} iterations "
            f"(norm_sq_F={res.final_norm_sq:.17g} > tol {args.tol:.17g})\n"
        )
        return 2
    return 0


def _control_csv(res) -> str:
    u, h = res.u, res.trajectory.h
    lines = ["t," + ",".join(f"u{i + 1}" for i in range(u.dim))]
    for n in range(u.n_steps):
        vals = [n * h, *res.u.step_values[n]]
        lines.append(",".join(f"{v:.17g}" for v in vals))
    return "\n".join(lines) + "\n"


def cmd_convergence(args) -> int:
    tab = _load_tableau(args.scheme)
    eps_values = _float_list(args.eps_list, "--eps-list")
    n_values = _int_list(args.n_list, "--n-list")
    try:
        rep = run_convergence(
            tab,
            eps_values,
            n_values,
            reference_n=args.reference_n,
            control_source=args.control,
            interp=args.interp,
        )
    except ValueError as exc:
        raise _UsageError(str(exc))
    csv = rep.to_csv()
    if args.out:
        _write_text(args.out, csv)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv)
    return 0 if all(r.status == "ok" for r in rep.rows) else 2


def cmd_symplectic_check(args) -> int:
    tab = _load_tableau(args.scheme)
    if args.problem == "linear-split":
        prob = linear_split_problem(args.lam, args.mu)
        p0 = np.array([1.0])
    else:
        if args.eps <= 0.0:
            raise _UsageError(f"--eps must be > 0 for the hager problem, got {args.eps:g}")
        prob = hager_hamiltonian(args.eps)
        p0 = np.array([1.0, 0.2, 0.1])
    if args.p0 is not None:
        p0 = np.array(_float_list(args.p0, "--p0"))
        if p0.shape != (prob.state_dim,):
            raise _UsageError(
                f"--p0 needs {prob.state_dim} components for {prob.name}, got {p0.size}"
            )
    h_values = _float_list(args.h_list, "--h-list")
    adj = adjoint_coefficients(tab)
    if adj.validity is not Validity.ALL_WEIGHTS_NONZERO:
        print(
            f"note: {tab.name} has no full adjoint transform "
            f"(validity: {adj.validity.value}); the coupled state-adjoint map "
            "is undefined, no residuals computed"
        )
        return 0
    rep = symplectic_residual(
        tab, prob, prob.y0, p0, h_values, fd_step=args.fd_step, adj=adj
    )
    if not rep.qualified:
        print(
            f"note: {tab.name} is not symplecticity-qualified; "
            "residuals are exploratory"
        )
    csv = symplectic_report_to_csv(rep)
    if args.out:
        _write_text(args.out, csv)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv)
    if args.bound is not None and rep.qualified and rep.residual > args.bound:
        print(f"result: fail (max residual {rep.residual:.17g} > bound {args.bound:.17g})")
        return 1
    return 0


def cmd_gradient_check(args) -> int:
    tab = _load_tableau(args.scheme)
    prob = _hager_for(args.eps)
    variants = []
    if args.control in ("ones", "both"):
        variants.append(
            ("ones", ControlGrid.constant(1.0, args.n, tab.s, prob.control_dim))
        )
    if args.control in ("random", "both"):
        rng = np.random.default_rng(args.seed)
        vals = rng.standard_normal((args.n, prob.control_dim))
        variants.append(("random", ControlGrid.per_step(vals, tab.s)))
    ok = True
    print(f"scheme={tab.name} problem={prob.name} eps={args.eps:.17g} N={args.n}")
    for name, u in variants:
        grad = reduced_gradient(tab, prob, u).values
        fd = fd_objective_gradient(tab, prob, u, step=args.fd_step)
        diff = np.abs(grad - fd)
        passed = bool(np.all(diff <= args.atol + args.rtol * np.abs(fd)))
        ok = ok and passed
        print(
            f"control={name} max_abs_diff={float(diff.max()):.17g} "
            f"pass={str(passed).lower()}"
        )
    print(f"result: {'pass' if ok else 'fail'}")
    return 0 if ok else 1


def _build_parser() -> _Parser:
    p = _Parser(
        prog="imexctrl",
        description="IMEX Runge-Kutta discretization of ODE-constrained "
        "optimal control: tableaus, condition checks, solves, grid studies.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    pt = sub.add_parser("tableau", help="inspect tableau definitions")
    tsub = pt.add_subparsers(dest="action", metavar="ACTION")
    tsub.required = True
    ps = tsub.add_parser("show", help="print a tableau in the exchange format")
    ps.add_argument("scheme", help="builtin scheme name or tableau file path")
    ps.add_argument(
        "--full",
        action="store_true",
        help="also print derived and adjoint coefficient blocks",
    )
    ps.set_defaults(func=cmd_tableau_show)

    po = sub.add_parser(
        "order-check", help="evaluate order and coupling conditions"
    )
    po.add_argument("scheme", help="builtin scheme name or tableau file path")
    po.add_argument("--order", type=int, choices=(1, 2, 3), default=3)
    po.add_argument("--tol", type=float, default=DEFAULT_TOL)
    po.add_argument("--csv", metavar="PATH", help="write all conditions as CSV")
    po.set_defaults(func=cmd_order_check)

    pv = sub.add_parser(
        "solve", help="reduced-gradient solve of the benchmark problem"
    )
    pv.add_argument("--scheme", required=True)
    pv.add_argument(
        "--eps",
        type=float,
        default=0.0,
        help="relaxation parameter; 0 selects the unrelaxed variant",
    )
    pv.add_argument("--n", type=int, default=320, help="number of steps")
    pv.add_argument(
        "--tol", type=float, default=1e-8, help="stop when ||F||^2 <= tol"
    )
    pv.add_argument("--max-iter", type=int, default=500)
    pv.add_argument("--u0", type=float, default=1.0, help="initial control value")
    pv.add_argument(
        "--out", metavar="DIR", help="write state/adjoint/control/log CSV files"
    )
    pv.set_defaults(func=cmd_solve)

    pc = sub.add_parser("convergence", help="grid-refinement study")
    pc.add_argument("--scheme", required=True)
    pc.add_argument(
        "--eps-list", required=True, help="comma-separated relaxation parameters"
    )
    pc.add_argument("--n-list", default="10,20,40,80,160,320")
    pc.add_argument("--reference-n", type=int, default=640)
    pc.add_argument(
        "--control", choices=(EXACT_CONTROL, OPTIMIZED), default=EXACT_CONTROL
    )
    pc.add_argument("--interp", choices=("stored", "poly2", "poly3"), default="stored")
    pc.add_argument("--out", metavar="PATH", help="write the report CSV here")
    pc.set_defaults(func=cmd_convergence)

    py = sub.add_parser(
        "symplectic-check", help="residual of the coupled one-step map"
    )
    py.add_argument("--scheme", required=True)
    py.add_argument("--problem", choices=("linear-split", "hager"), default="linear-split")
    py.add_argument("--h-list", default="0.2,0.1,0.05")
    py.add_argument("--fd-step", type=float, default=1e-5)
    py.add_argument("--eps", type=float, default=1.0, help="hager problem only")
    py.add_argument("--lam", type=float, default=0.7, help="linear-split rate (explicit)")
    py.add_argument("--mu", type=float, default=-1.3, help="linear-split rate (implicit)")
    py.add_argument("--p0", help="comma-separated initial adjoint components")
    py.add_argument(
        "--bound",
        type=float,
        help="fail (exit 1) if a qualified scheme exceeds this residual",
    )
    py.add_argument("--out", metavar="PATH", help="write the report CSV here")
    py.set_defaults(func=cmd_symplectic_check)

    pg = sub.add_parser(
        "gradient-check", help="adjoint gradient vs finite differences"
    )
    pg.add_argument("--scheme", required=True)
    pg.add_argument("--eps", type=float, default=0.1)
    pg.add_argument("--n", type=int, default=20)
    pg.add_argument("--control", choices=("ones", "random", "both"), default="both")
    pg.add_argument("--seed", type=int, default=0x5EED)
    pg.add_argument("--fd-step", type=float, default=1e-6)
    pg.add_argument("--atol", type=float, default=1e-6)
    pg.add_argument("--rtol", type=float, default=1e-4)
    pg.set_defaults(func=cmd_gradient_check)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"imexctrl: error: {exc}\n")
        return USAGE_EXIT
    except IntegrationError as exc:
        sys.stderr.write(f"imexctrl: solver failure: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
