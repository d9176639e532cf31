"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or expression
syntax error, 3 non-positive f, 4 family/order/parameter mismatch,
5 convergence guard violated.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import liealg
from .coeffs import (
    CoefficientProfile,
    ExprSyntaxError,
    NonPositiveCoefficient,
    classify,
    parse,
)
from .fraccalc import FracOrder
from .solutions import (
    FAMILIES,
    FAMILY_CLASS,
    FamilyError,
    OmegaRangeError,
    build,
    pde_residual_numeric,
    reduced_residual_termwise,
)
from .specfun import (
    FoxHSpec,
    GenWrightSpec,
    PoleError,
    SpecfunError,
    fox_h_contour,
    fox_h_residues,
    gen_wright,
    mittag_leffler,
    wright,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_F, EXIT_FAMILY, EXIT_GUARD = 0, 1, 2, 3, 4, 5
DEFAULT_GRID = "1,2,5,0.1,1,5"
TERMWISE_TOL = 1e-10


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


@dataclass(frozen=True)
class Grid:
    xmin: float
    xmax: float
    nx: int
    tmin: float
    tmax: float
    nt: int

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(",")
        if len(parts) != 6:
            raise CliError(EXIT_USAGE, "--grid needs xmin,xmax,nx,tmin,tmax,nt")
        try:
            g = cls(float(parts[0]), float(parts[1]), int(parts[2]), float(parts[3]), float(parts[4]), int(parts[5]))
        except ValueError as exc:
            raise CliError(EXIT_USAGE, f"--grid: {exc}") from None
        if g.nx < 2 or g.nt < 2:
            raise CliError(EXIT_USAGE, "--grid needs nx, nt >= 2")
        if not g.xmin < g.xmax or not 0 < g.tmin < g.tmax:
            raise CliError(EXIT_USAGE, "--grid needs xmin < xmax and 0 < tmin < tmax")
        return g

    @property
    def x(self):
        return np.linspace(self.xmin, self.xmax, self.nx)

    @property
    def t(self):
        return np.linspace(self.tmin, self.tmax, self.nt)


def _floats(text: str | None, flag: str) -> tuple[float, ...]:
    if text is None or text == "":
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(EXIT_USAGE, f"{flag} expects a comma-separated list of numbers") from None


def _pairs(text: str | None, flag: str) -> tuple[tuple[float, float], ...]:
    if not text:
        return ()
    out = []
    for item in text.split(";"):
        vals = _floats(item, flag)
        if len(vals) != 2:
            raise CliError(EXIT_USAGE, f"{flag} expects 'a,A;b,B;...'")
        out.append(vals)
    return tuple(out)


def _expr(text: str, flag: str):
    try:
        return parse(text)
    except ExprSyntaxError as exc:
        raise CliError(EXIT_USAGE, f"{flag}: {exc}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    f = _expr(args.f, "--f")
    g = _expr(args.g, "--g")
    grid = Grid.parse(args.grid) if args.grid else None
    domain = (grid.xmin, grid.xmax) if grid else (1.0, 2.0)
    try:
        c = classify(f, g, beta=args.beta, domain=domain, tol=args.tol or 1e-9)
    except NonPositiveCoefficient as exc:
        raise CliError(EXIT_F, str(exc)) from None
    out = {"class": c.short, "lambda1": c.lambda1, "lambda2": c.lambda2, "domain_used": list(c.domain),
           "beta": c.beta}
    print(json.dumps(out))
    return EXIT_OK


def _solution(args):
    if args.family is None:
        raise CliError(EXIT_USAGE, "--family is required")
    if args.alpha is None:
        raise CliError(EXIT_USAGE, "--alpha is required")
    try:
        order = FracOrder(args.alpha)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"--alpha: {exc}") from None
    grid = Grid.parse(args.grid or DEFAULT_GRID)
    f = _expr(args.f, "--f")
    need = FAMILY_CLASS[args.family]
    l1, l2 = args.lambda1, args.lambda2
    try:
        if args.g is not None:
            c = classify(f, _expr(args.g, "--g"), beta=args.beta, domain=(grid.xmin, grid.xmax))
            if c.class_tag != need:
                raise CliError(EXIT_FAMILY, f"{args.family} needs a {need} pair (f, g); g classifies as {c.class_tag}")
            l1 = c.lambda1 if l1 is None and c.lambda1 is not None else l1
            l2 = c.lambda2 if l2 is None and c.lambda2 is not None else l2
        # CaseII needs omega_lambda1 != 0 and both II and III need lambda2 != 0
        if need in ("CaseII", "CaseIII") and l2 is None:
            l2 = 1.0
        if need == "CaseII" and l1 is None:
            l1 = 1.0
        profile = CoefficientProfile(f, beta=args.beta, lambda1=l1 or 0.0, lambda2=l2 or 0.0,
                                     domain=(grid.xmin, grid.xmax), class_tag=need)
    except NonPositiveCoefficient as exc:
        raise CliError(EXIT_F, str(exc)) from None
    except CliError:
        raise
    except ValueError as exc:
        raise CliError(EXIT_FAMILY, str(exc)) from None
    c1 = _floats(args.c1, "--c1") or (1.0,) + (0.0,) * (order.n - 1)
    c2 = _floats(args.c2, "--c2") or (0.0,) * order.n
    sol = build(args.family, order, profile, a=args.a, a1=args.a1, a2=args.a2, c1=c1, c2=c2,
                perturb=args.perturb)
    return sol, grid


def _write_table(rows: np.ndarray, fmt: str, out: str | None):
    buf = io.StringIO()
    if fmt == "csv":
        buf.write("x,t,u,v\n")
        for r in rows:
            buf.write(",".join(f"{v:.17g}" for v in r) + "\n")
    else:
        cols = {k: [float(f"{v:.17g}") for v in rows[:, i]] for i, k in enumerate("xtuv")}
        json.dump({"columns": list("xtuv"), **cols}, buf)
        buf.write("\n")
    text = buf.getvalue()
    if out:
        with open(out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    sol, grid = _solution(args)
    rows = sol.grid(grid.x, grid.t)
    if not np.all(np.isfinite(rows)):
        raise CliError(EXIT_GUARD, "non-finite values on the grid")
    _write_table(rows, args.format, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    sol, grid = _solution(args)
    tol = args.tol if args.tol is not None else 1e-3
    reports = []
    failures = []
    if sol.is_series:
        r = reduced_residual_termwise(sol)
        reports.append(r.as_dict() | {"tol": TERMWISE_TOL})
        if not r.passed(TERMWISE_TOL):
            failures.append(f"termwise residual {r.relative:.3e} > {TERMWISE_TOL:g}")
    if sol.order.n == 1:
        r = pde_residual_numeric(sol, grid.x, grid.t, h=args.h)
        reports.append(r.as_dict() | {"tol": tol})
        if not r.passed(tol):
            failures.append(f"numeric residual {r.relative:.3e} x scale > {tol:g}")
    out = {"family": sol.family, "alpha": sol.order.alpha, "passed": not failures, "reports": reports}
    print(json.dumps(out, default=float))
    for msg in failures:
        print(f"verify failed: {msg}", file=sys.stderr)
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_liealg(args) -> int:
    alpha = args.alpha if args.alpha is not None else 0.5
    fields = None
    if args.negate:
        fields = liealg.basis(alpha)
        fields[args.negate] = -fields[args.negate]
    check = liealg.verify_table(alpha, fields)
    print(check.render())
    if args.representatives:
        for case in ("CaseII", "CaseIII", "CaseIV"):
            print(f"\n{case}:")
            for rep in liealg.optimal_representatives(case):
                extra = f"  [{rep.parameters}]" if rep.parameters else ""
                note = f"  ({rep.note})" if rep.note else ""
                print(f"  {rep.label} = {rep.combination}{extra}{note}")
    if not check.passed:
        i, j = check.mismatch
        print(f"mismatch at ({i},{j}): {check.detail}", file=sys.stderr)
        return EXIT_VERIFY
    print("table matches")
    return EXIT_OK


def cmd_specfun_eval(args) -> int:
    z = _floats(args.z, "--z")
    if not z:
        raise CliError(EXIT_USAGE, "--z is required")
    zz = np.array(z)
    fn = args.function
    if fn == "ml":
        vals = mittag_leffler(args.alpha, args.beta, zz)
    elif fn == "wright":
        vals = wright(zz, args.a, args.b)
    elif fn == "genwright":
        vals = gen_wright(GenWrightSpec(_pairs(args.upper, "--upper"), _pairs(args.lower, "--lower")), zz)
    else:
        spec = FoxHSpec(args.m, args.l, _pairs(args.upper, "--upper"), _pairs(args.lower, "--lower"))
        if args.method == "residues":
            vals = np.array([fox_h_residues(spec, v) for v in zz])
        else:
            vals = fox_h_contour(spec, zz)
    print(json.dumps({"function": fn, "z": list(z), "value": [float(v) for v in np.real(vals)]}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_problem(p: argparse.ArgumentParser):
    p.add_argument("--f", default="1", help="f(x) expression (default 1)")
    p.add_argument("--g", help="g(x); when given it must classify into the family's class")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, help="lower limit of the omega integral (default xmin)")
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--a1", type=float, default=0.0)
    p.add_argument("--a2", type=float, default=0.0)
    p.add_argument("--c1", help="c_{k,1}, k = 1..n (comma list); the single c for Fox H and Wright families")
    p.add_argument("--c2", help="c_{k,2}, k = 1..n (comma list)")
    p.add_argument("--grid", help="xmin,xmax,nx,tmin,tmax,nt (default %s)" % DEFAULT_GRID)
    p.add_argument("--tol", type=float)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fractel", description="Invariant solutions of time-fractional telegraph systems")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="symmetry class of (f, g)")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--grid")
    p.add_argument("--tol", type=float)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("solve", help="evaluate a solution family on a grid")
    _add_problem(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("verify", help="termwise and numeric residuals of a solution family")
    _add_problem(p)
    p.add_argument("--h", type=float, default=1 / 128, help="widest cell of the RL mesh")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("liealg", help="commutator table of V1..V4")
    p.add_argument("--alpha", type=float)
    p.add_argument("--representatives", action="store_true", help="also list the optimal systems")
    p.add_argument("--negate", choices=("V1", "V2", "V3", "V4"), help=argparse.SUPPRESS)
    p.set_defaults(run=cmd_liealg)

    p = sub.add_parser("specfun", help="special functions")
    ssub = p.add_subparsers(dest="specfun_command", required=True)
    e = ssub.add_parser("eval")
    e.add_argument("--function", choices=("ml", "wright", "genwright", "foxh"), required=True)
    e.add_argument("--z", required=True, help="comma list of arguments")
    e.add_argument("--alpha", type=float, default=1.0)
    e.add_argument("--beta", type=float, default=1.0)
    e.add_argument("--a", type=float, default=-0.5)
    e.add_argument("--b", type=float, default=1.0)
    e.add_argument("--m", type=int, default=1)
    e.add_argument("--l", type=int, default=0)
    e.add_argument("--upper", help="pairs 'a,A;b,B'")
    e.add_argument("--lower", help="pairs 'b,B;...'")
    e.add_argument("--method", choices=("contour", "residues"), default="contour")
    e.set_defaults(run=cmd_specfun_eval)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.run(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NonPositiveCoefficient as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_F
    except (FamilyError, OmegaRangeError, PoleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAMILY
    except SpecfunError as exc:
        print(f"error: convergence guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAMILY


if __name__ == "__main__":
    sys.exit(main())
