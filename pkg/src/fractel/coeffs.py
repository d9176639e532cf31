"""Coefficient expressions f(x), g(x), the integral omega and class detection.

Grammar (standard precedence, ``^`` right associative and binding tighter
than unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | 'x' | fn '(' expr ')' | '(' expr ')'
    fn     := exp | ln | sqrt
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "ExprSyntaxError",
    "UnknownIdentifier",
    "CoeffDomainError",
    "NonPositiveCoefficient",
    "Num",
    "Var",
    "Neg",
    "Call",
    "BinOp",
    "CoeffExpr",
    "parse",
    "eval_d",
    "CLASSES",
    "CoefficientProfile",
    "omega",
    "omega0",
    "omega_inverse",
    "g_for_class",
    "GCoefficient",
    "Classification",
    "classify",
]


class ExprSyntaxError(ValueError):
    """Malformed expression; ``offset`` is the byte offset of the problem."""

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class CoeffDomainError(ValueError):
    """Expression evaluated outside its real domain."""


class NonPositiveCoefficient(CoeffDomainError):
    """f(x) <= 0 where positivity is required."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Neg, Call, BinOp]

FUNCTIONS = ("exp", "ln", "sqrt")
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    toks = []
    pos = 0
    raw = text.encode()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            off = len(text[:pos].encode()) + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[pos:].lstrip()[0]!r}", off)
        kind = m.lastgroup
        start = len(text[: m.start(kind)].encode())
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", len(raw)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "x":
                return Var()
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifier(val, off)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", off)


def _fmt_num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _print(node: Node, parent: int = 0, right: bool = False) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Call):
        return f"{node.fn}({_print(node.arg)})"
    if isinstance(node, Neg):
        s = "-" + _print(node.arg, _PREC["neg"])
        prec = _PREC["neg"]
    else:
        prec = _PREC[node.op]
        if node.op == "^":
            s = f"{_print(node.left, prec + 1)}^{_print(node.right, prec)}"
        else:
            s = f"{_print(node.left, prec)}{node.op}{_print(node.right, prec, True)}"
    # left-associative ops need parentheses on the right at equal precedence
    need = prec < parent or (right and prec == parent and prec in (1, 2))
    return f"({s})" if need else s


def _eval(node: Node, x: np.ndarray, dx: np.ndarray | None):
    """Value and (optionally) forward-mode derivative of a node."""
    if isinstance(node, Num):
        v = np.full(x.shape, node.value)
        return v, (None if dx is None else np.zeros(x.shape))
    if isinstance(node, Var):
        return x, dx
    if isinstance(node, Neg):
        v, d = _eval(node.arg, x, dx)
        return -v, (None if d is None else -d)
    if isinstance(node, Call):
        v, d = _eval(node.arg, x, dx)
        if node.fn == "exp":
            out = np.exp(v)
            return out, (None if d is None else out * d)
        if node.fn == "ln":
            if np.any(v <= 0):
                raise CoeffDomainError("ln of a nonpositive value")
            return np.log(v), (None if d is None else d / v)
        if np.any(v < 0):
            raise CoeffDomainError("sqrt of a negative value")
        out = np.sqrt(v)
        if d is None:
            return out, None
        if np.any(out == 0):
            raise CoeffDomainError("sqrt is not differentiable at 0")
        return out, 0.5 * d / out
    a, da = _eval(node.left, x, dx)
    b, db = _eval(node.right, x, dx)
    op = node.op
    if op == "+":
        return a + b, (None if dx is None else da + db)
    if op == "-":
        return a - b, (None if dx is None else da - db)
    if op == "*":
        return a * b, (None if dx is None else da * b + a * db)
    if op == "/":
        if np.any(b == 0):
            raise CoeffDomainError("division by zero")
        return a / b, (None if dx is None else (da * b - a * db) / (b * b))
    # power
    if isinstance(node.right, Num):
        n = node.right.value
        if not float(n).is_integer() and np.any(a < 0):
            raise CoeffDomainError("non-integer power of a negative value")
        if n < 0 and np.any(a == 0):
            raise CoeffDomainError("negative power of zero")
        out = a ** n
        if dx is None:
            return out, None
        return out, (n * a ** (n - 1) * da if n != 0 else np.zeros(x.shape))
    if np.any(a <= 0):
        raise CoeffDomainError("variable exponent needs a positive base")
    out = a ** b
    return out, (None if dx is None else out * (db * np.log(a) + b * da / a))


class CoeffExpr:
    """Parsed expression in x; call it on scalars or arrays."""

    __slots__ = ("ast", "text")

    def __init__(self, ast: Node, text: str | None = None):
        self.ast = ast
        self.text = text if text is not None else _print(ast)

    def __repr__(self):
        return f"CoeffExpr({self.canonical()!r})"

    def __eq__(self, other):
        return isinstance(other, CoeffExpr) and self.ast == other.ast

    def __hash__(self):
        return hash(self.ast)

    def canonical(self) -> str:
        return _print(self.ast)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        v, _ = _eval(self.ast, arr, None)
        return float(v) if arr.ndim == 0 else v

    def eval_d(self, x):
        arr = np.asarray(x, dtype=float)
        v, d = _eval(self.ast, arr, np.ones(arr.shape))
        if arr.ndim == 0:
            return float(v), float(d)
        return v, d

    def derivative(self, x):
        return self.eval_d(x)[1]


def parse(text: str) -> CoeffExpr:
    """Parse an expression in x."""
    return CoeffExpr(_Parser(text).parse(), text)


def eval_d(e: CoeffExpr, x):
    """(e(x), e'(x)) by forward-mode propagation through the tree."""
    return e.eval_d(x)


def _as_expr(e) -> CoeffExpr:
    return parse(e) if isinstance(e, str) else e


# ---------------------------------------------------------------------------
# omega


CLASSES = ("Generic", "CaseII", "CaseIII", "CaseIV")
_GRID = 65


def _inv_sqrt(f: Callable, r):
    fr = f(r)
    if not fr > 0:
        raise NonPositiveCoefficient(f"f({r:.6g}) = {fr:.6g} is not positive")
    return 1.0 / math.sqrt(fr)


def _segment(f: Callable, a: float, b: float) -> float:
    if a == b:
        return 0.0
    val, err = integrate.quad(lambda r: _inv_sqrt(f, r), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    if err > 1e-10:
        raise CoeffDomainError(f"omega quadrature error {err:.3g} on [{a}, {b}]")
    return val


def _omega_from(f: Callable, beta: float, x) -> np.ndarray | float:
    """int_beta^x dr / sqrt(f(r)) for scalar or array x."""
    arr = np.asarray(x, dtype=float)
    flat = arr.reshape(-1)
    pts = np.unique(np.concatenate([flat, [beta]]))
    k0 = int(np.searchsorted(pts, beta))
    cum = np.zeros(pts.size)
    for k in range(k0 + 1, pts.size):
        cum[k] = cum[k - 1] + _segment(f, pts[k - 1], pts[k])
    for k in range(k0 - 1, -1, -1):
        cum[k] = cum[k + 1] - _segment(f, pts[k], pts[k + 1])
    out = cum[np.searchsorted(pts, flat)].reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class CoefficientProfile:
    """f with the base point beta, class parameters and the domain."""

    f: CoeffExpr
    beta: float | None = None
    lambda1: float = 0.0
    lambda2: float = 0.0
    domain: tuple[float, float] = (0.0, 1.0)
    class_tag: str = "Generic"

    def __post_init__(self):
        object.__setattr__(self, "f", _as_expr(self.f))
        lo, hi = map(float, self.domain)
        if not lo < hi:
            raise ValueError(f"empty domain [{lo}, {hi}]")
        object.__setattr__(self, "domain", (lo, hi))
        if self.beta is None:
            object.__setattr__(self, "beta", lo)
        object.__setattr__(self, "beta", float(self.beta))
        if self.class_tag not in CLASSES:
            raise ValueError(f"class_tag must be one of {CLASSES}")
        xs = self.grid()
        try:
            fx = self.f(xs)
        except CoeffDomainError as exc:
            raise NonPositiveCoefficient(f"f is undefined on the domain: {exc}") from None
        if np.any(~(fx > 0)):
            bad = xs[~(fx > 0)][0]
            raise NonPositiveCoefficient(f"f({bad:.6g}) = {self.f(bad):.6g} is not positive")
        if self.class_tag in ("CaseII", "CaseIII") and self.lambda2 == 0:
            raise ValueError(f"{self.class_tag} requires lambda2 != 0")
        if self.class_tag == "CaseII":
            w = omega(self, xs[1:-1])
            if np.any(w == 0) or (np.any(w > 0) and np.any(w < 0)):
                raise ValueError("CaseII requires omega_lambda1 != 0 inside the domain")

    def grid(self, n: int = _GRID) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], n)

    def with_class(self, tag: str, **kw) -> "CoefficientProfile":
        args = dict(f=self.f, beta=self.beta, lambda1=self.lambda1, lambda2=self.lambda2,
                    domain=self.domain, class_tag=tag)
        args.update(kw)
        return CoefficientProfile(**args)


def omega0(profile: CoefficientProfile, x):
    """int_beta^x dr / sqrt(f(r))."""
    return _omega_from(profile.f, profile.beta, x)


def omega(profile: CoefficientProfile, x):
    """omega_lambda1(x) = int_beta^x dr / sqrt(f(r)) + lambda1."""
    return omega0(profile, x) + profile.lambda1


def omega_inverse(profile: CoefficientProfile, y, lambda1: bool = True):
    """x with omega(x) = y (or omega0 when ``lambda1`` is False), inside the domain."""
    shift = profile.lambda1 if lambda1 else 0.0
    arr = np.asarray(y, dtype=float) - shift
    lo, hi = profile.domain
    nodes = np.linspace(lo, hi, 257)
    table = omega0(profile, nodes)
    if np.any(arr < table[0] - 1e-12) or np.any(arr > table[-1] + 1e-12):
        raise ValueError(
            f"omega value outside the invertible range [{table[0] + shift:.6g}, {table[-1] + shift:.6g}]"
        )
    flat = arr.reshape(-1)
    out = np.empty(flat.size)
    for i, yi in enumerate(flat):
        k = int(np.clip(np.searchsorted(table, yi) - 1, 0, len(nodes) - 2))
        a, b = nodes[k], nodes[k + 1]
        base = table[k]
        g = lambda s: base + _segment(profile.f, a, s) - yi  # noqa: E731
        ga, gb = g(a), g(b)
        if ga >= 0:
            out[i] = a
        elif gb <= 0:
            out[i] = b
        else:
            out[i] = optimize.brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# g for each class


class GCoefficient:
    """g(x) of a symmetry class, evaluated from f, f' and (CaseII) omega."""

    def __init__(self, profile: CoefficientProfile):
        if profile.class_tag == "Generic":
            raise ValueError("g_for_class needs CaseII, CaseIII or CaseIV")
        self.profile = profile

    def __repr__(self):
        p = self.profile
        f = p.f.canonical()
        if p.class_tag == "CaseIV":
            return f"g = ({f})'/2"
        if p.class_tag == "CaseIII":
            return f"g = {p.lambda2:g}*sqrt({f}) + ({f})'/2"
        return f"g = {p.lambda2:g}*sqrt({f})/omega_{p.lambda1:g}(x) + ({f})'/2"

    def __call__(self, x):
        p = self.profile
        fx, dfx = p.f.eval_d(np.asarray(x, dtype=float))
        out = 0.5 * np.asarray(dfx)
        if p.class_tag == "CaseIII":
            out = out + p.lambda2 * np.sqrt(fx)
        elif p.class_tag == "CaseII":
            out = out + p.lambda2 * np.sqrt(fx) / omega(p, x)
        return float(out) if np.ndim(out) == 0 else out


def g_for_class(profile: CoefficientProfile) -> GCoefficient:
    """g(x) in the closed form of the profile's class."""
    return GCoefficient(profile)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    class_tag: str
    lambda1: float | None
    lambda2: float | None
    domain: tuple[float, float]
    beta: float

    @property
    def short(self) -> str:
        return {"CaseII": "ii", "CaseIII": "iii", "CaseIV": "iv"}.get(self.class_tag, "generic")


def classify(f, g, beta: float | None = None, domain=(0.0, 1.0), tol: float = 1e-9,
             n: int = _GRID) -> Classification:
    """Place (f, g) in the symmetry class ladder CaseIV, CaseIII, CaseII, Generic.

    ``g`` may be an expression or any vectorised callable.
    """
    f = _as_expr(f)
    g = _as_expr(g)
    lo, hi = map(float, domain)
    beta = lo if beta is None else float(beta)
    xs = np.linspace(lo, hi, max(n, _GRID))
    try:
        fx, dfx = f.eval_d(xs)
    except CoeffDomainError as exc:
        raise NonPositiveCoefficient(f"f is undefined on the domain: {exc}") from None
    if np.any(~(fx > 0)):
        bad = xs[~(fx > 0)][0]
        raise NonPositiveCoefficient(f"f({bad:.6g}) = {f(bad):.6g} is not positive")
    gx = np.asarray(g(xs), dtype=float) * np.ones(xs.shape)
    scale = 1.0 + float(np.max(np.abs(gx)))
    thr = tol * scale
    d = gx - 0.5 * dfx
    out = lambda tag, l1=None, l2=None: Classification(tag, l1, l2, (lo, hi), beta)  # noqa: E731
    if np.max(np.abs(d)) <= thr:
        return out("CaseIV")
    r = d / np.sqrt(fx)
    if np.max(r) - np.min(r) <= thr:
        return out("CaseIII", None, float(np.mean(r)))
    # r (omega0 + lambda1) = lambda2, linear in (lambda2, lambda1)
    w0 = _omega_from(f, beta, xs)
    A = np.column_stack([np.ones_like(r), -r])
    (l2, l1), *_ = np.linalg.lstsq(A, r * w0, rcond=None)
    wl = w0 + l1
    inner = wl[1:-1]
    if l2 != 0 and np.all(inner != 0) and not (np.any(inner > 0) and np.any(inner < 0)):
        with np.errstate(divide="ignore", invalid="ignore"):
            rebuilt = l2 * np.sqrt(fx) / wl + 0.5 * dfx
        ok = np.isfinite(rebuilt)
        if ok.all() and np.max(np.abs(rebuilt - gx)) <= thr:
            return out("CaseII", float(l1), float(l2))
    return out("Generic")
