"""Invariant solution families, similarity transforms, symmetry action and residual checks.

Every solution is stored through its canonical fields: with ``y`` equal to
omega_lambda1 (CaseII) or omega_0 (CaseIII, CaseIV) and ``U = sqrt(f) u``
the system becomes

    CaseII   D^a U = V_y,  D^a V = U_y + (lambda2 / y) U
    CaseIII  D^a U = V_y,  D^a V = U_y + lambda2 U
    CaseIV   D^a U = V_y,  D^a V = U_y

and ``u(x, t) = U(y(x), t) / sqrt(f(x))``, ``v(x, t) = V(y(x), t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special as sc

from .coeffs import CoefficientProfile, g_for_class, omega, omega0, omega_inverse
from .fraccalc import EXPONENT_TOL, FracOrder, FracPowerSeries, rl_numeric, rl_series
from .specfun import (
    FoxHSpec,
    GenWrightSpec,
    OutsideRadius,
    PoleError,
    fox_h_contour,
    gen_wright,
    mittag_leffler,
    wright,
)

__all__ = [
    "FAMILIES",
    "FAMILY_CLASS",
    "SERIES_FAMILIES",
    "FamilyError",
    "OmegaRangeError",
    "FieldSolution",
    "InvariantSolution",
    "SymmetryImage",
    "ResidualReport",
    "build_case2",
    "build_case1_small_alpha",
    "build_case1_large_alpha",
    "build_case3_w4_small",
    "build_case3_w4_large",
    "build_case3_w5",
    "build",
    "similarity_transform",
    "reduced_residual_termwise",
    "reduced_residual_numeric",
    "pde_residual_numeric",
    "apply_symmetry",
    "canonical_reduction",
    "canonical_residual_numeric",
    "W5_ADMISSIBLE",
]

FAMILIES = ("Case1SmallAlpha", "Case1LargeAlpha", "Case2", "Case3W4Small", "Case3W4Large", "Case3W5")
FAMILY_CLASS = {
    "Case1SmallAlpha": "CaseII",
    "Case1LargeAlpha": "CaseII",
    "Case2": "CaseIII",
    "Case3W4Small": "CaseIV",
    "Case3W4Large": "CaseIV",
    "Case3W5": "CaseIV",
}
SERIES_FAMILIES = ("Case1LargeAlpha", "Case2", "Case3W4Large", "Case3W5")
W5_ADMISSIBLE = "{(+-1, a), (0, +-1), (0, 0) | a real}"
DEFAULT_TERMS = 30


class FamilyError(ValueError):
    """Family incompatible with the class, the order or its parameters."""


class OmegaRangeError(ValueError):
    """A requested point needs omega outside its admissible range."""


# ---------------------------------------------------------------------------
# series blocks


@dataclass(frozen=True)
class _Block:
    """weight * z^e0 * sum_j ratio^j prod Gamma(a_i + j) / Gamma(b + step j) z^(step j).

    With no ``ups`` this is z^e0 E_{step,b}(ratio z^step); otherwise it is a
    generalized Wright function with upper pairs (a_i, 1), (1, 1) and the
    lower pair (b, step).  ``perturb`` is added to the weight of the j = 1
    term only (mutation hook).
    """

    weight: float
    e0: float
    step: float
    ratio: float
    ups: tuple[float, ...]
    b: float
    perturb: float = 0.0

    def coefficients(self, n: int) -> np.ndarray:
        j = np.arange(n, dtype=float)
        for a in self.ups:
            if a <= 0 and a == round(a):
                raise PoleError(f"Gamma({a} + j) has a pole: series coefficients are undefined")
        logc = np.zeros(n)
        sign = np.ones(n)
        for a in self.ups:
            logc += sc.gammaln(a + j)
            sign *= sc.gammasgn(a + j)
        den = self.b + self.step * j
        pole = (den <= 0) & (den == np.round(den))
        logc -= np.where(pole, 0.0, sc.gammaln(np.where(pole, 1.0, den)))
        sign *= np.where(pole, 0.0, sc.gammasgn(np.where(pole, 1.0, den)))
        if self.ratio == 0:
            sign[1:] = 0.0
        else:
            logc += j * math.log(abs(self.ratio))
            if self.ratio < 0:
                sign *= (-1.0) ** j
        c = sign * np.exp(logc)
        w = np.full(n, self.weight)
        if n > 1:
            w[1] += self.perturb
        return w * c

    def series(self, n: int) -> FracPowerSeries:
        c = self.coefficients(n)
        e = self.e0 + self.step * np.arange(n)
        return FracPowerSeries(tuple(zip(c, e)), self.e0 + self.step * n)

    def spec(self) -> GenWrightSpec:
        return GenWrightSpec(tuple((a, 1.0) for a in self.ups) + ((1.0, 1.0),), ((self.b, self.step),))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0):
            raise OmegaRangeError("series solutions are evaluated for z > 0")
        arg = self.ratio * z ** self.step
        if not self.ups:
            core = mittag_leffler(self.step, self.b, arg)
        else:
            spec = self.spec()
            try:
                core = gen_wright(spec, arg)
            except OutsideRadius as exc:
                bound = (spec.radius / abs(self.ratio)) ** (1.0 / self.step)
                raise OutsideRadius(
                    f"Delta = -1 guard: the {len(self.ups) + 1}Psi1 series needs "
                    f"|{self.ratio:g} z^{self.step:g}| < {spec.radius:g}, i.e. z < {bound:.6g}; "
                    f"got z = {float(np.max(z)):.6g}",
                    bound,
                    float(np.max(z)),
                ) from exc
        out = self.weight * z ** self.e0 * core
        if self.perturb:
            out = out + self._perturb_term(z)
        return out

    def _perturb_term(self, z):
        base = _Block(1.0, self.e0, self.step, self.ratio, self.ups, self.b).coefficients(2)[1]
        return self.perturb * base * z ** (self.e0 + self.step)


def _unique_eval(fn: Callable, z) -> np.ndarray:
    """fn on the distinct entries of z only (time meshes repeat across x)."""
    z = np.asarray(z, dtype=float)
    if z.size < 64:
        return fn(z)
    u, inv = np.unique(z.reshape(-1), return_inverse=True)
    return np.asarray(fn(u))[inv].reshape(z.shape)


def _sum_blocks(blocks: Sequence[_Block], z) -> np.ndarray:
    def total(w):
        out = np.zeros(w.shape)
        for b in blocks:
            out = out + b(w)
        return out

    return _unique_eval(total, z)


def _series_blocks(blocks: Sequence[_Block], n: int) -> FracPowerSeries:
    out = FracPowerSeries()
    for b in blocks:
        out = out + b.series(n)
    return out


# ---------------------------------------------------------------------------
# solution objects


class FieldSolution:
    """Common evaluation for anything with canonical fields (U, V)(y, t)."""

    order: FracOrder
    profile: CoefficientProfile

    def canonical(self, y, t):
        raise NotImplementedError

    @property
    def leading_power(self):
        """Declared power of t at 0 for numeric RL (scalar or per-y callable)."""
        return 0.0

    def canonical_y(self, x):
        if self.profile.class_tag == "CaseII":
            return omega(self.profile, x)
        return omega0(self.profile, x)

    def y_range(self) -> tuple[float, float]:
        lo, hi = self.profile.domain
        ys = self.canonical_y(np.array([lo, hi]))
        return float(ys[0]), float(ys[1])

    def evaluate(self, x, t):
        """(u, v) at broadcast points (x, t)."""
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        if np.any(t <= 0):
            raise ValueError("solutions are evaluated for t > 0")
        ux, inv = np.unique(x.reshape(-1), return_inverse=True)
        y = np.asarray(self.canonical_y(ux))[inv].reshape(x.shape)
        sf = np.sqrt(np.asarray(self.profile.f(ux)))[inv].reshape(x.shape)
        U, V = self.canonical(y, t)
        return U / sf, V

    def u(self, x, t):
        return self.evaluate(x, t)[0]

    def v(self, x, t):
        return self.evaluate(x, t)[1]

    def grid(self, x, t):
        """Row-major (x outer, t inner) table of x, t, u, v."""
        X, T = np.meshgrid(np.asarray(x, float), np.asarray(t, float), indexing="ij")
        u, v = self.evaluate(X, T)
        return np.column_stack([X.ravel(), T.ravel(), u.ravel(), v.ravel()])


def _positive(y, what: str):
    if np.any(np.asarray(y) <= 0):
        raise OmegaRangeError(f"{what} must be positive where real powers of it are taken")


def similarity_transform(family: str, profile: CoefficientProfile, params, phi: Callable, psi: Callable,
                         order: FracOrder | float):
    """Canonical fields (U, V)(y, t) assembled from (phi, psi) by the family's transform."""
    order = _order(order)
    al = order.alpha
    if family.startswith("Case1"):
        (a,) = params

        def canon(y, t):
            _positive(y, "omega_lambda1")
            w = y ** a
            z = y ** (-1.0 / al) * t
            return w * phi(z), w * psi(z)
    elif family == "Case2":
        (a,) = params

        def canon(y, t):
            e = np.exp(a * y)
            return e * phi(t), e * psi(t)
    elif family.startswith("Case3W4"):
        a1, a2 = params

        def canon(y, t):
            _positive(y, "omega_0")
            z = y ** (-1.0 / al) * t
            p, q = y ** (a1 + a2) * phi(z), y ** (a1 - a2) * psi(z)
            return p + q, p - q
    elif family == "Case3W5":
        a1, a2 = params

        def canon(y, t):
            p = np.exp((a1 + a2) * y) * phi(t)
            q = np.exp((a1 - a2) * y) * psi(t)
            return p + q, p - q
    else:
        raise FamilyError(f"unknown family {family!r}")
    return canon


@dataclass(frozen=True, eq=False)
class InvariantSolution(FieldSolution):
    """A solution family with its parameters and reduced functions phi, psi."""

    family: str
    order: FracOrder
    profile: CoefficientProfile
    params: tuple
    constants: tuple
    phi: Callable
    psi: Callable
    phi_blocks: tuple = ()
    psi_blocks: tuple = ()
    perturb: float = 0.0
    _canon: Callable | None = field(default=None, repr=False)

    def canonical(self, y, t):
        y, t = np.broadcast_arrays(np.asarray(y, float), np.asarray(t, float))
        if self._canon is not None:
            return self._canon(y, t)
        return similarity_transform(self.family, self.profile, self.params, self.phi, self.psi,
                                    self.order)(y, t)

    @property
    def is_series(self) -> bool:
        return self.family in SERIES_FAMILIES

    @property
    def leading_power(self):
        if self.family in ("Case2", "Case3W5"):
            return self.order.alpha - 1
        if self.family == "Case3W4Small":
            kappa = (self.params[0] - self.params[1]) * self.order.alpha
            return lambda y: np.where(np.asarray(y) > 0, 0.0, kappa)
        return 0.0

    def expand(self, n: int = DEFAULT_TERMS) -> tuple[FracPowerSeries, FracPowerSeries]:
        """phi and psi as truncated power series (n terms per block)."""
        if not self.is_series:
            raise FamilyError(f"{self.family} has no power series representation")
        return _series_blocks(self.phi_blocks, n), _series_blocks(self.psi_blocks, n)

    def describe(self) -> dict:
        return {
            "family": self.family,
            "alpha": self.order.alpha,
            "n": self.order.n,
            "params": list(self.params),
            "constants": [list(c) if isinstance(c, tuple) else c for c in self.constants],
            "class": self.profile.class_tag,
        }


def _order(order) -> FracOrder:
    return order if isinstance(order, FracOrder) else FracOrder(float(order))


def _check_class(family: str, profile: CoefficientProfile):
    need = FAMILY_CLASS[family]
    if profile.class_tag != need:
        raise FamilyError(f"{family} needs a {need} profile, got {profile.class_tag}")


def _lists(order: FracOrder, c1, c2):
    c1 = tuple(float(c) for c in c1)
    c2 = tuple(float(c) for c in c2)
    if len(c1) != order.n or len(c2) != order.n:
        raise FamilyError(
            f"alpha = {order.alpha:g} needs n = {order.n} constants per list, got {len(c1)} and {len(c2)}"
        )
    return c1, c2


def _nonzero(blocks):
    return tuple(b for b in blocks if b.weight != 0 or b.perturb != 0)


def _make(family, order, profile, params, constants, phi_blocks, psi_blocks, perturb):
    pb, sb = _nonzero(phi_blocks), _nonzero(psi_blocks)
    return InvariantSolution(
        family, order, profile, tuple(params), constants,
        lambda z: _sum_blocks(pb, z), lambda z: _sum_blocks(sb, z), pb, sb, perturb,
    )


def _perturb_first(blocks: list[_Block], delta: float) -> list[_Block]:
    if delta and blocks:
        b = blocks[0]
        blocks[0] = _Block(b.weight, b.e0, b.step, b.ratio, b.ups, b.b, delta)
    return blocks


def build_case2(order, profile: CoefficientProfile, a: float, c1, c2, perturb: float = 0.0) -> InvariantSolution:
    """Mittag-Leffler solution for g = lambda2 sqrt(f) + f'/2."""
    order = _order(order)
    _check_class("Case2", profile)
    c1, c2 = _lists(order, c1, c2)
    al, l2 = order.alpha, profile.lambda2
    A = a * (a + l2)
    phi, psi = [], []
    for k in range(1, order.n + 1):
        i = k - 1
        phi.append(_Block(c1[i], al - k, 2 * al, A, (), 1 + al - k))
        phi.append(_Block(a * c2[i], 2 * al - k, 2 * al, A, (), 1 + 2 * al - k))
        psi.append(_Block((a + l2) * c1[i], 2 * al - k, 2 * al, A, (), 1 + 2 * al - k))
        psi.append(_Block(c2[i], al - k, 2 * al, A, (), 1 + al - k))
    return _make("Case2", order, profile, (a,), (c1, c2), _perturb_first(phi, perturb), psi, perturb)


def _sol1_specs(al: float, a: float, l2: float) -> tuple[FoxHSpec, FoxHSpec]:
    up = ((1.0, 2 * al),)
    return (
        FoxHSpec(2, 0, up, ((0.5 - a / 2, 1.0), (-(a + l2) / 2, 1.0))),
        FoxHSpec(2, 0, up, ((-a / 2, 1.0), (0.5 - (a + l2) / 2, 1.0))),
    )


def build_case1_small_alpha(order, profile: CoefficientProfile, a: float, c: float,
                            perturb: float = 0.0) -> InvariantSolution:
    """Fox H solution for 0 < alpha < 1, g = lambda2 sqrt(f)/omega_lambda1 + f'/2."""
    order = _order(order)
    _check_class("Case1SmallAlpha", profile)
    al = order.alpha
    if not 0 < al < 1:
        raise FamilyError(f"Case1SmallAlpha needs 0 < alpha < 1, got {al:g}")
    sp, ss = _sol1_specs(al, a, profile.lambda2)
    c = float(c)

    def H(spec, z):
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0):
            raise OmegaRangeError("the Fox H solution is defined for z > 0")
        w = z ** (-2 * al) / 4
        out = fox_h_contour(spec, w.reshape(-1)).reshape(w.shape) if w.ndim else fox_h_contour(spec, float(w))
        return out

    if c == 0:
        phi = psi = lambda z: np.zeros(np.shape(z))  # noqa: E731
    else:
        phi = lambda z: c * (1 + perturb) * H(sp, z)  # noqa: E731
        psi = lambda z: -c * H(ss, z)  # noqa: E731
    return InvariantSolution("Case1SmallAlpha", order, profile, (a,), (c,), phi, psi, perturb=perturb)


def build_case1_large_alpha(order, profile: CoefficientProfile, a: float, c1, c2,
                            perturb: float = 0.0) -> InvariantSolution:
    """3Psi1 solution for alpha >= 1, g = lambda2 sqrt(f)/omega_lambda1 + f'/2."""
    order = _order(order)
    _check_class("Case1LargeAlpha", profile)
    al, l2 = order.alpha, profile.lambda2
    if al < 1:
        raise FamilyError(f"Case1LargeAlpha needs alpha >= 1, got {al:g}")
    c1, c2 = _lists(order, c1, c2)
    phi, psi = [], []
    for k in range(1, order.n + 1):
        i, s = k - 1, k / (2 * al)
        h1, h2 = a / 2, (a + l2) / 2
        phi.append(_Block(c1[i], al - k, 2 * al, 4.0, (1 - h1 - s, 0.5 - h2 - s), 1 + al - k))
        phi.append(_Block(-2 * c2[i], 2 * al - k, 2 * al, 4.0, (1.5 - h1 - s, 1 - h2 - s), 1 + 2 * al - k))
        psi.append(_Block(-2 * c1[i], 2 * al - k, 2 * al, 4.0, (1 - h1 - s, 1.5 - h2 - s), 1 + 2 * al - k))
        psi.append(_Block(c2[i], al - k, 2 * al, 4.0, (0.5 - h1 - s, 1 - h2 - s), 1 + al - k))
    return _make("Case1LargeAlpha", order, profile, (a,), (c1, c2), _perturb_first(phi, perturb), psi, perturb)


def build_case3_w4_small(order, profile: CoefficientProfile, a1: float, a2: float, c: float,
                         perturb: float = 0.0) -> InvariantSolution:
    """Wright-function solution for 0 < alpha < 1, g = f'/2."""
    order = _order(order)
    _check_class("Case3W4Small", profile)
    al = order.alpha
    if not 0 < al < 1:
        raise FamilyError(f"Case3W4Small needs 0 < alpha < 1, got {al:g}")
    kappa = (a1 - a2) * al
    c = float(c)

    def psi(z):
        z = np.asarray(z, dtype=float)
        return c * z ** kappa * wright(-(z ** -al), -al, 1 + kappa)

    def canon(y, t):
        U = c * t ** kappa * wright(-y / t ** al, -al, 1 + kappa) if c else np.zeros(np.shape(y))
        return U * (1 + perturb), -U

    return InvariantSolution("Case3W4Small", order, profile, (a1, a2), (c,),
                             lambda z: np.zeros(np.shape(z)), psi, perturb=perturb, _canon=canon)


def build_case3_w4_large(order, profile: CoefficientProfile, a1: float, a2: float, c1, c2,
                         perturb: float = 0.0) -> InvariantSolution:
    """2Psi1 solution for alpha >= 1, g = f'/2."""
    order = _order(order)
    _check_class("Case3W4Large", profile)
    al = order.alpha
    if al < 1:
        raise FamilyError(f"Case3W4Large needs alpha >= 1, got {al:g}")
    c1, c2 = _lists(order, c1, c2)
    phi, psi = [], []
    for k in range(1, order.n + 1):
        i = k - 1
        phi.append(_Block(c1[i], al - k, al, -1.0, (1 - a1 - a2 - k / al,), 1 + al - k))
        psi.append(_Block(c2[i], al - k, al, 1.0, (1 - a1 + a2 - k / al,), 1 + al - k))
    return _make("Case3W4Large", order, profile, (a1, a2), (c1, c2), _perturb_first(phi, perturb), psi, perturb)


def w5_admissible(a1: float, a2: float) -> bool:
    return a1 in (1.0, -1.0) or (a1 == 0 and a2 in (1.0, -1.0, 0.0))


def build_case3_w5(order, profile: CoefficientProfile, a1: float, a2: float, c1, c2,
                   perturb: float = 0.0) -> InvariantSolution:
    """Mittag-Leffler solution of the translation reduction, g = f'/2."""
    order = _order(order)
    _check_class("Case3W5", profile)
    if not w5_admissible(float(a1), float(a2)):
        raise FamilyError(f"(a1, a2) = ({a1:g}, {a2:g}) is not in the admissible set {W5_ADMISSIBLE}")
    c1, c2 = _lists(order, c1, c2)
    al = order.alpha
    phi, psi = [], []
    for k in range(1, order.n + 1):
        i = k - 1
        phi.append(_Block(c1[i], al - k, al, a1 + a2, (), 1 + al - k))
        psi.append(_Block(c2[i], al - k, al, a2 - a1, (), 1 + al - k))
    return _make("Case3W5", order, profile, (a1, a2), (c1, c2), _perturb_first(phi, perturb), psi, perturb)


def build(family: str, order, profile: CoefficientProfile, *, a=0.0, a1=0.0, a2=0.0, c1=(), c2=(),
          perturb: float = 0.0) -> InvariantSolution:
    """Dispatch on the family name; ``c1[0]`` is the single constant where one is used."""
    order = _order(order)
    if family not in FAMILIES:
        raise FamilyError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    c = c1[0] if len(c1) else 1.0
    if family == "Case1SmallAlpha":
        return build_case1_small_alpha(order, profile, a, c, perturb)
    if family == "Case1LargeAlpha":
        return build_case1_large_alpha(order, profile, a, c1, c2, perturb)
    if family == "Case2":
        return build_case2(order, profile, a, c1, c2, perturb)
    if family == "Case3W4Small":
        return build_case3_w4_small(order, profile, a1, a2, c, perturb)
    if family == "Case3W4Large":
        return build_case3_w4_large(order, profile, a1, a2, c1, c2, perturb)
    return build_case3_w5(order, profile, a1, a2, c1, c2, perturb)


# ---------------------------------------------------------------------------
# residuals


@dataclass(frozen=True)
class ResidualReport:
    """Largest residuals of the two equations.

    For ``method == "termwise"`` the residuals are per-exponent relative
    coefficient residuals; ``details`` also carries the absolute measure.
    For ``method == "numeric"`` they are absolute and ``scale`` is
    ``max(|u|, |v|)`` over the grid.
    """

    grid: tuple
    max_res_eq1: float
    max_res_eq2: float
    method: str
    scale: float = 1.0
    details: dict = field(default_factory=dict)
    pointwise: tuple = field(default=(), repr=False, compare=False)

    @property
    def worst(self) -> float:
        return max(self.max_res_eq1, self.max_res_eq2)

    @property
    def relative(self) -> float:
        return self.worst / self.scale if self.scale > 0 else self.worst

    def passed(self, tol: float) -> bool:
        return self.relative <= tol

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "max_res_eq1": self.max_res_eq1,
            "max_res_eq2": self.max_res_eq2,
            "scale": self.scale,
            "relative": self.relative,
            **self.details,
        }


_NOISE_FLOOR = np.finfo(float).tiny / np.finfo(float).eps


def _compare(parts: Sequence[FracPowerSeries]) -> tuple[float, float, float, list]:
    """Residual of sum(parts) below the common horizon.

    Returns (max per-exponent relative residual, max |residual coefficient|,
    max |coefficient| of any part, compared exponents).
    """
    horizon = min(p.horizon for p in parts) - EXPONENT_TOL
    res = FracPowerSeries()
    for p in parts:
        res = res + p
    mags = FracPowerSeries(tuple((abs(c), e) for p in parts for c, e in p.terms))
    me, mc = mags.exponents, mags.coeffs
    worst_rel = worst_abs = 0.0
    for c, e in res.terms:
        if e >= horizon:
            continue
        k = np.argmin(np.abs(me - e))
        # coefficients near the subnormal range carry no relative precision
        worst_rel = max(worst_rel, abs(c) / max(mc[k], _NOISE_FLOOR))
        worst_abs = max(worst_abs, abs(c))
    keep = [e for e in me if e < horizon]
    biggest = float(np.max(mc[me < horizon])) if np.any(me < horizon) else 0.0
    return worst_rel, worst_abs, biggest, keep


def reduced_residual_termwise(solution: InvariantSolution, n: int = DEFAULT_TERMS,
                              series: tuple[FracPowerSeries, FracPowerSeries] | None = None) -> ResidualReport:
    """Coefficient residuals of the reduced system on the truncated series.

    ``series`` replaces the expansion of (phi, psi), e.g. by a mutated copy.
    """
    if not solution.is_series:
        raise FamilyError(f"{solution.family} is not series-backed; use the numeric residual")
    if n < 2:
        raise ValueError("need at least two terms per block")
    P, S = series if series is not None else solution.expand(n)
    o, al = solution.order, solution.order.alpha
    DP, DS = rl_series(o, P), rl_series(o, S)
    fam, prm = solution.family, solution.params
    if fam == "Case2":
        a, l2 = prm[0], solution.profile.lambda2
        eq1, eq2 = [DP, -a * S], [DS, -(a + l2) * P]
    elif fam == "Case1LargeAlpha":
        a, l2 = prm[0], solution.profile.lambda2
        eq1 = [DP, -a * S, S.z_deriv() * (1 / al)]
        eq2 = [DS, -(a + l2) * P, P.z_deriv() * (1 / al)]
    elif fam == "Case3W4Large":
        a1, a2 = prm
        eq1 = [DP, -(a1 + a2) * P, P.z_deriv() * (1 / al)]
        eq2 = [DS, -(a2 - a1) * S, S.z_deriv() * (-1 / al)]
    else:
        a1, a2 = prm
        eq1, eq2 = [DP, -(a1 + a2) * P], [DS, -(a2 - a1) * S]
    r1, abs1, big1, ex1 = _compare(eq1)
    r2, abs2, big2, ex2 = _compare(eq2)
    return ResidualReport(
        (tuple(ex1), tuple(ex2)), r1, r2, "termwise", 1.0,
        {"max_abs_coeff_eq1": abs1, "max_abs_coeff_eq2": abs2,
         "max_coeff": max(big1, big2), "terms": n},
    )


def _d4(fn: Callable, x: np.ndarray, h) -> np.ndarray:
    """Fourth-order central difference."""
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def reduced_residual_numeric(solution: InvariantSolution, z, h: float = 1 / 128) -> ResidualReport:
    """Numeric residual of the reduced system of a Fox H solution on a z grid."""
    if solution.family != "Case1SmallAlpha":
        raise FamilyError("numeric reduced residuals are implemented for Case1SmallAlpha")
    z = np.asarray(z, dtype=float)
    o, al = solution.order, solution.order.alpha
    a, l2 = solution.params[0], solution.profile.lambda2
    Dphi, Dpsi = rl_numeric(o, lambda s: (solution.phi(s), solution.psi(s)), z, h, 0.0)
    hz = 1e-3 * z
    dphi, dpsi = _d4(solution.phi, z, hz), _d4(solution.psi, z, hz)
    p, q = solution.phi(z), solution.psi(z)
    r1 = Dphi - a * q + z * dpsi / al
    r2 = Dpsi - (a + l2) * p + z * dphi / al
    scale = float(max(np.max(np.abs(p)), np.max(np.abs(q))))
    return ResidualReport((tuple(z),), float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), "numeric", scale,
                          {"h": h}, (r1, r2))


def _lead(sol: FieldSolution, y):
    lp = sol.leading_power
    return lp(y) if callable(lp) else np.full(np.shape(y), float(lp))


def pde_residual_numeric(solution: FieldSolution, x, t, h: float = 1 / 64, hx: float | None = None
                         ) -> ResidualReport:
    """Residuals of D^a u - v_x and D^a v - f u_x - g u on the grid x by t.

    Time derivatives use :func:`rl_numeric` with widest cell ``h``; space
    derivatives use fourth-order central differences with step ``hx``.
    """
    o = solution.order
    if o.n != 1:
        raise FamilyError("numeric residuals need 0 < alpha < 1; use the termwise check")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the residual grid must exclude t = 0")
    prof = solution.profile
    lo, hi = prof.domain
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("grid leaves the profile domain")
    if hx is None:
        hx = 1e-3 * (hi - lo)
    X, T = np.meshgrid(x, t, indexing="ij")
    xf, tf = X.ravel(), T.ravel()
    y = np.asarray(solution.canonical_y(x))
    yrow = np.repeat(y, t.size)
    fx, dfx = prof.f.eval_d(x)
    sf = np.repeat(np.sqrt(fx), t.size)
    DU, DV = rl_numeric(o, lambda s: solution.canonical(yrow[:, None], s), tf, h, _lead(solution, yrow))
    Du = DU / sf
    uv = {k: solution.evaluate(xf + k * hx, tf) for k in (-2, -1, 1, 2)}
    u0, v0 = solution.evaluate(xf, tf)

    def diff(i):
        return (uv[-2][i] - 8 * uv[-1][i] + 8 * uv[1][i] - uv[2][i]) / (12 * hx)

    ux, vx = diff(0), diff(1)
    g = g_for_class(prof)(xf) if prof.class_tag != "Generic" else None
    f_row = np.repeat(fx, t.size)
    r1 = Du - vx
    r2 = DV - f_row * ux - g * u0
    scale = float(max(np.max(np.abs(u0)), np.max(np.abs(v0))))
    return ResidualReport(
        (tuple(x), tuple(t)), float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), "numeric", scale,
        {"h": h, "hx": hx}, (r1.reshape(X.shape), r2.reshape(X.shape)),
    )


# ---------------------------------------------------------------------------
# symmetry action


GENERATORS = {
    "scaling": ("CaseII", "CaseIV"),
    "translation": ("CaseIII", "CaseIV"),
    "rotation": ("CaseIV",),
}
_ALIASES = {"scaling_W2_or_W4": "scaling", "translation_W3_or_W5": "translation", "rotation_V4": "rotation"}


@dataclass(frozen=True, eq=False)
class SymmetryImage(FieldSolution):
    """Image of a solution under a one-parameter symmetry group."""

    base: FieldSolution
    generator: str
    epsilon: float

    @property
    def order(self):
        return self.base.order

    @property
    def profile(self):
        return self.base.profile

    @property
    def leading_power(self):
        lp = self.base.leading_power
        if callable(lp) and self.generator != "rotation":
            return lambda y: lp(self._pre_y(np.asarray(y)))
        return lp

    def _pre_y(self, y):
        e = self.epsilon
        if self.generator == "scaling":
            return math.exp(-e) * y
        if self.generator == "translation":
            return y - e
        return y

    def canonical(self, y, t):
        y, t = np.broadcast_arrays(np.asarray(y, float), np.asarray(t, float))
        e = self.epsilon
        if self.generator == "rotation":
            U, V = self.base.canonical(y, t)
            ch, shh = math.cosh(e), math.sinh(e)
            return U * ch + V * shh, U * shh + V * ch
        y0 = self._pre_y(y)
        lo, hi = self.base.y_range()
        span = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(y0 < lo - span) or np.any(y0 > hi + span):
            raise OmegaRangeError(
                f"epsilon = {e:g} maps points outside the omega range [{lo:.6g}, {hi:.6g}] of the domain"
            )
        t0 = math.exp(-e / self.order.alpha) * t if self.generator == "scaling" else t
        return self.base.canonical(y0, t0)


def apply_symmetry(solution: FieldSolution, generator: str, epsilon: float) -> SymmetryImage:
    """Transform a solution by scaling, translation or rotation in canonical coordinates.

    scaling (y, t) -> (e^eps y, e^(eps/alpha) t); translation y -> y + eps;
    rotation (U, V) -> (U cosh eps + V sinh eps, U sinh eps + V cosh eps).
    """
    gen = _ALIASES.get(generator, generator)
    if gen not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}")
    tag = solution.profile.class_tag
    if tag not in GENERATORS[gen]:
        raise FamilyError(f"{gen} is not a symmetry of {tag}; allowed for {', '.join(GENERATORS[gen])}")
    return SymmetryImage(solution, gen, float(epsilon))


# ---------------------------------------------------------------------------
# canonical reduction (Case iv)


class CanonicalFields:
    """(U, V)(y, t) built from physical evaluators u(x, t), v(x, t) of a CaseIV profile."""

    def __init__(self, profile: CoefficientProfile, u: Callable, v: Callable):
        if profile.class_tag != "CaseIV":
            raise FamilyError("canonical reduction is defined for CaseIV profiles")
        self.profile = profile
        self._u, self._v = u, v

    def x_of(self, y):
        return omega_inverse(self.profile, y, lambda1=False)

    def __call__(self, y, t):
        y, t = np.broadcast_arrays(np.asarray(y, float), np.asarray(t, float))
        uy, inv = np.unique(y.reshape(-1), return_inverse=True)
        xs = np.asarray(self.x_of(uy))[inv].reshape(y.shape)
        sf = np.sqrt(self.profile.f(xs))
        return sf * self._u(xs, t), self._v(xs, t)


def canonical_reduction(profile: CoefficientProfile, u: Callable, v: Callable) -> CanonicalFields:
    """Change variables y = omega_0(x), U = sqrt(f) u for a CaseIV profile."""
    return CanonicalFields(profile, u, v)


def canonical_residual_numeric(fields: CanonicalFields, order, y, t, h: float = 1 / 64,
                               hy: float = 1e-3, gamma=0.0) -> ResidualReport:
    """Residuals of D^a U - V_y and D^a V - U_y on the grid y by t."""
    o = _order(order)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    Y, T = np.meshgrid(y, t, indexing="ij")
    yf, tf = Y.ravel(), T.ravel()
    xs = np.asarray(fields.x_of(y))
    xrow = np.repeat(xs, t.size)
    sf = np.sqrt(fields.profile.f(xrow))
    DU, DV = rl_numeric(o, lambda s: (sf[:, None] * fields._u(xrow[:, None], s), fields._v(xrow[:, None], s)),
                        tf, h, gamma)
    st = {k: fields(yf + k * hy, tf) for k in (-2, -1, 1, 2)}
    U0, V0 = fields(yf, tf)

    def diff(i):
        return (st[-2][i] - 8 * st[-1][i] + 8 * st[1][i] - st[2][i]) / (12 * hy)

    r1 = DU - diff(1)
    r2 = DV - diff(0)
    scale = float(max(np.max(np.abs(U0)), np.max(np.abs(V0))))
    return ResidualReport((tuple(y), tuple(t)), float(np.max(np.abs(r1))), float(np.max(np.abs(r2))),
                          "numeric", scale, {"h": h, "hy": hy}, (r1.reshape(Y.shape), r2.reshape(Y.shape)))
