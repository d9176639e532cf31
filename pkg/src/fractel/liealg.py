"""Symmetry generators as polynomial vector fields in canonical coordinates.

Coordinates are (y, t, U, V) with y = omega, U = sqrt(f) u.  In them the
generators of the system read

    X1 = V3 = U d/dU + V d/dV
    X2 = X4 = -V1 = y d/dy + (t/alpha) d/dt
    X3 = X5 = -V2 = d/dy
    X6 = V4 = V d/dU + U d/dV

All arithmetic is over ``fractions.Fraction``; alpha is converted through its
decimal string, so 0.1 becomes exactly 1/10.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping

__all__ = [
    "VARS",
    "Poly",
    "PolyVectorField",
    "commutator",
    "basis",
    "x_generators",
    "TABLE1",
    "expected_table",
    "TableCheck",
    "verify_table",
    "express",
    "format_combination",
    "jacobi",
    "abelian_check",
    "Representative",
    "optimal_representatives",
]

VARS = ("y", "t", "U", "V")
Monomial = tuple[int, int, int, int]


def rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


class Poly:
    """Sparse polynomial in y, t, U, V with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms = {m: rational(c) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def var(cls, name: str, c=1) -> "Poly":
        m = [0, 0, 0, 0]
        m[VARS.index(name)] = 1
        return cls({tuple(m): c})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, k) -> "Poly":
        k = rational(k)
        return Poly({m: k * c for m, c in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict = {}
        for (m1, c1), (m2, c2) in product(self.terms.items(), other.terms.items()):
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def diff(self, i: int) -> "Poly":
        out = {}
        for m, c in self.terms.items():
            if m[i]:
                d = list(m)
                d[i] -= 1
                out[tuple(d)] = c * m[i]
        return Poly(out)

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in zip(VARS, m) if e)
            parts.append(f"{c}" if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts)


@dataclass(frozen=True)
class PolyVectorField:
    """Sum of components[i] * d/d(VARS[i])."""

    components: tuple[Poly, Poly, Poly, Poly]

    @classmethod
    def of(cls, **comps) -> "PolyVectorField":
        return cls(tuple(comps.get(v, Poly()) for v in VARS))

    def apply(self, p: Poly) -> Poly:
        out = Poly()
        for i, c in enumerate(self.components):
            if not c.is_zero():
                out = out + c * p.diff(i)
        return out

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k) -> "PolyVectorField":
        return PolyVectorField(tuple(c.scale(k) for c in self.components))

    __rmul__ = scale

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __repr__(self):
        parts = [f"({c})d/d{v}" for c, v in zip(self.components, VARS) if not c.is_zero()]
        return " + ".join(parts) or "0"


ZERO = PolyVectorField.of()


def commutator(A: PolyVectorField, B: PolyVectorField) -> PolyVectorField:
    """[A, B] with components A(B_k) - B(A_k)."""
    return PolyVectorField(tuple(A.apply(b) - B.apply(a) for a, b in zip(A.components, B.components)))


def jacobi(A, B, C) -> PolyVectorField:
    return commutator(A, commutator(B, C)) + commutator(B, commutator(C, A)) + commutator(C, commutator(A, B))


def basis(alpha=Fraction(1, 2)) -> dict[str, PolyVectorField]:
    """V1..V4 in canonical coordinates."""
    inv = 1 / rational(alpha)
    return {
        "V1": PolyVectorField.of(y=Poly.var("y", -1), t=Poly.var("t", -inv)),
        "V2": PolyVectorField.of(y=Poly.const(-1)),
        "V3": PolyVectorField.of(U=Poly.var("U"), V=Poly.var("V")),
        "V4": PolyVectorField.of(U=Poly.var("V"), V=Poly.var("U")),
    }


def x_generators(alpha=Fraction(1, 2)) -> dict[str, PolyVectorField]:
    """Images of X1..X6 (X2 and X4 coincide, as do X3 and X5)."""
    V = basis(alpha)
    return {"X1": V["V3"], "X2": -V["V1"], "X3": -V["V2"], "X4": -V["V1"], "X5": -V["V2"], "X6": V["V4"]}


# [V_i, V_j] as coefficient vectors over (V1, V2, V3, V4); absent entries are 0
TABLE1: dict[tuple[int, int], tuple[int, int, int, int]] = {
    (1, 2): (0, 1, 0, 0),
    (2, 1): (0, -1, 0, 0),
}


def expected_table(alpha=Fraction(1, 2)) -> dict[tuple[int, int], PolyVectorField]:
    V = list(basis(alpha).values())
    out = {}
    for i, j in product(range(1, 5), repeat=2):
        coeffs = TABLE1.get((i, j), (0, 0, 0, 0))
        field = ZERO
        for k, c in enumerate(coeffs):
            if c:
                field = field + V[k].scale(c)
        out[(i, j)] = field
    return out


def express(F: PolyVectorField, fields: Iterable[PolyVectorField]) -> tuple[Fraction, ...] | None:
    """Exact coefficients of F over ``fields``, or None when F is outside their span."""
    fields = list(fields)
    keys = sorted({(i, m) for G in fields + [F] for i, c in enumerate(G.components) for m in c.terms})
    rows = [[G.components[i].terms.get(m, Fraction(0)) for G in fields] + [F.components[i].terms.get(m, Fraction(0))]
            for i, m in keys]
    n = len(fields)
    pivots = []
    r = 0
    for col in range(n):
        piv = next((k for k in range(r, len(rows)) if rows[k][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][col]
        rows[r] = [x / p for x in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][col] != 0:
                f = rows[k][col]
                rows[k] = [a - f * b for a, b in zip(rows[k], rows[r])]
        pivots.append(col)
        r += 1
    if any(row[-1] != 0 for row in rows[r:]):
        return None
    out = [Fraction(0)] * n
    for k, col in enumerate(pivots):
        out[col] = rows[k][-1]
    return tuple(out)


def format_combination(coeffs: Iterable, names=("V1", "V2", "V3", "V4")) -> str:
    parts = []
    for c, nm in zip(coeffs, names):
        if c == 0:
            continue
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        parts.append(("-" if c < 0 else "+") + mag + nm)
    if not parts:
        return "0"
    s = "".join(parts)
    return s[1:] if s[0] == "+" else s


@dataclass(frozen=True)
class TableCheck:
    passed: bool
    mismatch: tuple[int, int] | None
    entries: dict
    detail: str = ""

    def render(self) -> str:
        names = ["V1", "V2", "V3", "V4"]
        width = 8
        lines = ["[Vi,Vj]".ljust(width) + "".join(n.ljust(width) for n in names)]
        for i in range(1, 5):
            row = [self.entries[(i, j)] for j in range(1, 5)]
            lines.append(names[i - 1].ljust(width) + "".join(e.ljust(width) for e in row))
        return "\n".join(lines)


def verify_table(alpha=Fraction(1, 2), fields: Mapping[str, PolyVectorField] | None = None) -> TableCheck:
    """Compare all 16 brackets of ``fields`` (default: the canonical basis) with Table 1."""
    alpha = rational(alpha)
    V = dict(fields) if fields is not None else basis(alpha)
    Vs = [V[k] for k in ("V1", "V2", "V3", "V4")]
    canon = list(basis(alpha).values())
    expected = expected_table(alpha)
    entries = {}
    first = None
    detail = ""
    for i, j in product(range(1, 5), repeat=2):
        got = commutator(Vs[i - 1], Vs[j - 1])
        coeffs = express(got, canon)
        entries[(i, j)] = format_combination(coeffs) if coeffs is not None else "?"
        if first is None and got != expected[(i, j)]:
            first = (i, j)
            detail = f"[V{i},V{j}] = {got!r}, table gives {format_combination(TABLE1.get((i, j), (0,) * 4))}"
    return TableCheck(first is None, first, entries, detail)


def abelian_check(case: str, alpha=Fraction(1, 2)) -> bool:
    """CaseII and CaseIII algebras are abelian: [X1, X2] = [X1, X3] = 0."""
    X = x_generators(alpha)
    other = {"CaseII": "X2", "CaseIII": "X3"}[case]
    return commutator(X["X1"], X[other]).is_zero()


@dataclass(frozen=True)
class Representative:
    label: str
    combination: str
    x_form: str
    parameters: str
    invariant_solutions: bool
    families: tuple[str, ...] = ()
    note: str = ""


_REPS = {
    "CaseII": (
        Representative("W1", "X1", "X1", "", False, (), "no invariant solutions"),
        Representative("W2", "X2 + a X1", "X2 + a X1", "a real", True, ("Case1SmallAlpha", "Case1LargeAlpha")),
    ),
    "CaseIII": (
        Representative("W1", "X1", "X1", "", False, (), "no invariant solutions"),
        Representative("W3", "X3 + a X1", "X3 + a X1", "a real", True, ("Case2",)),
    ),
    "CaseIV": (
        Representative("W1", "V3", "X1", "", False, (), "no invariant solutions"),
        Representative("W4", "V1 - a1 V3 - a2 V4", "-a1 X1 - X4 - a2 X6", "a1, a2 real", True,
                       ("Case3W4Small", "Case3W4Large")),
        Representative("W5", "V2 - a1 V3 - a2 V4", "-a1 X1 - X5 - a2 X6",
                       "(a1, a2) in {(+-1, a), (0, +-1), (0, 0) | a real}", True, ("Case3W5",)),
        Representative("W6", "a1 V3 + V4", "a1 X1 + X6", "a1 real", False, (), "no invariant solutions"),
    ),
}


def optimal_representatives(case: str) -> tuple[Representative, ...]:
    """One-dimensional optimal system of the class, as listed for the reductions."""
    try:
        return _REPS[case]
    except KeyError:
        raise ValueError(f"no optimal system for {case!r}; expected CaseII, CaseIII or CaseIV") from None
