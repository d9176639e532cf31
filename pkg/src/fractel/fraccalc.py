"""Riemann-Liouville derivatives: power rule, termwise series, product integration.

The lower limit is always 0.  ``1/Gamma`` at nonpositive integers is taken as
0, so ``D^alpha t^(alpha-k)`` vanishes for integer ``k >= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import special as sc

__all__ = [
    "FracOrder",
    "FracPowerSeries",
    "rl_power_rule",
    "rl_series",
    "rl_numeric",
    "EXPONENT_TOL",
]

# exponents closer than this are treated as the same power
EXPONENT_TOL = 1e-9


@dataclass(frozen=True)
class FracOrder:
    """Order alpha > 0 with its ceiling index n, n - 1 < alpha <= n."""

    alpha: float
    n: int = field(default=0)

    def __post_init__(self):
        a = float(self.alpha)
        if not a > 0 or not math.isfinite(a):
            raise ValueError(f"order must be positive, got {self.alpha}")
        n = math.ceil(a)
        if self.n and self.n != n:
            raise ValueError(f"n = {self.n} does not satisfy n - 1 < {a} <= n")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "n", n)


def _ratio_gamma(num: float, den: float) -> float:
    """Gamma(num)/Gamma(den) with 1/Gamma(pole) = 0.

    A den within EXPONENT_TOL of a pole counts as the pole, so exponents that
    differ from a homogeneous power only by rounding give an exact zero.
    """
    if den < EXPONENT_TOL and abs(den - round(den)) < EXPONENT_TOL:
        return 0.0
    if num <= 0 and num == round(num):
        raise ValueError(f"Gamma pole at {num}")
    lg = sc.gammaln(num) - sc.gammaln(den)
    return float(sc.gammasgn(num) * sc.gammasgn(den) * math.exp(lg))


def rl_power_rule(order: FracOrder, mu: float) -> tuple[float, float]:
    """D^alpha t^mu = coeff * t^(mu - alpha), for mu > -1."""
    if not mu > -1:
        raise ValueError(f"power rule needs mu > -1, got {mu}")
    return _ratio_gamma(mu + 1, mu + 1 - order.alpha), mu - order.alpha


@dataclass(frozen=True)
class FracPowerSeries:
    """Finite sum of c * z^gamma.

    ``horizon`` marks the first exponent of the underlying infinite series
    that was cut off; coefficients at exponents at or above it are incomplete.
    """

    terms: tuple[tuple[float, float], ...] = ()
    horizon: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "terms", _normalise(self.terms))

    @classmethod
    def power(cls, c: float, gamma: float, horizon: float = math.inf) -> "FracPowerSeries":
        return cls(((c, gamma),), horizon)

    def __len__(self):
        return len(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([e for _, e in self.terms])

    def __add__(self, other: "FracPowerSeries") -> "FracPowerSeries":
        return FracPowerSeries(self.terms + other.terms, min(self.horizon, other.horizon))

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other: "FracPowerSeries") -> "FracPowerSeries":
        return self + (-other)

    def __mul__(self, k: float) -> "FracPowerSeries":
        return FracPowerSeries(tuple((k * c, e) for c, e in self.terms), self.horizon)

    __rmul__ = __mul__

    def shift(self, p: float) -> "FracPowerSeries":
        """Multiply by z^p."""
        return FracPowerSeries(tuple((c, e + p) for c, e in self.terms), self.horizon + p)

    def z_deriv(self) -> "FracPowerSeries":
        """z * d/dz, using z (z^g)' = g z^g."""
        return FracPowerSeries(tuple((g * c, g) for c, g in self.terms), self.horizon)

    def below_horizon(self) -> "FracPowerSeries":
        cut = self.horizon - EXPONENT_TOL
        return FracPowerSeries(tuple(t for t in self.terms if t[1] < cut), self.horizon)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape)
        for c, e in self.terms:
            out = out + c * z ** e
        return out


def _normalise(terms: Iterable) -> tuple[tuple[float, float], ...]:
    items = sorted((float(e), float(c)) for c, e in terms)
    out: list[list[float]] = []
    for e, c in items:
        if out and abs(e - out[-1][1]) <= EXPONENT_TOL * max(1.0, abs(e)):
            out[-1][0] += c
        else:
            out.append([c, e])
    return tuple((c, e) for c, e in out if c != 0.0)


def rl_series(order: FracOrder, s: FracPowerSeries) -> FracPowerSeries:
    """Termwise D^alpha of a power series; vanishing images are dropped."""
    mapped = []
    for c, e in s.terms:
        k, e2 = rl_power_rule(order, e)
        mapped.append((c * k, e2))
    return FracPowerSeries(tuple(mapped), s.horizon - order.alpha)


def rl_numeric(order: FracOrder, samples: Callable[[np.ndarray], np.ndarray], t, h: float,
               gamma=0.0):
    """D^alpha f(t) for 0 < alpha < 1 by product integration.

    The caller declares the leading power ``gamma > -1`` of ``f`` at 0.
    ``C s^gamma`` is fitted at the first node ``s_1`` of the graded mesh
    ``s_j = t (j/N)^(2/alpha)`` and differentiated exactly.  The remainder
    ``f - C s^gamma`` is taken as 0 on the first cell and piecewise linear on
    the others, and the derivative of its fractional integral is evaluated
    exactly (the L1 scheme).

    ``h`` bounds the widest cell, so ``N = ceil(r max(t) / h)`` with
    ``r = 2/alpha``; all rows share N.  ``samples`` receives an array of
    shape ``(len(t), N)`` holding ``s_1..s_N`` row by row and returns values
    of the same shape, or a tuple of such arrays (one result per entry).
    ``gamma`` may be a scalar or one value per row.
    """
    a = order.alpha
    if order.n != 1:
        raise ValueError("rl_numeric handles 0 < alpha < 1 only; use rl_series for higher orders")
    tt = np.asarray(t, dtype=float)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt).reshape(-1)
    if np.any(tt <= 0):
        raise ValueError("rl_numeric needs t > 0")
    gam = np.broadcast_to(np.asarray(gamma, dtype=float), tt.shape)
    if np.any(~(gam > -1)):
        raise ValueError("declared leading power must exceed -1")
    r = 2.0 / a
    # the widest cell (next to t) is about r t / N
    N = max(2, math.ceil(r * float(tt.max()) / h))
    grid = (np.arange(1, N + 1) / N) ** r
    s = tt[:, None] * grid[None, :]
    s[:, -1] = tt
    out = samples(s)
    many = isinstance(out, tuple)
    res = []
    w = _cell_weights(a, tt, s)
    uniq, inv = np.unique(gam, return_inverse=True)
    k = np.array([rl_power_rule(order, float(g))[0] for g in uniq])[inv]
    for F in (out if many else (out,)):
        F = np.asarray(F, dtype=float)
        if F.shape != s.shape:
            raise ValueError(f"samples returned shape {F.shape}, expected {s.shape}")
        # the power law C s^gamma through the first node is differentiated exactly;
        # only the remainder, which vanishes at s_1, is interpolated
        C = F[:, 0] / s[:, 0] ** gam
        G = F - C[:, None] * s ** gam[:, None]
        slopes = np.diff(G, axis=1) / np.diff(s, axis=1)
        val = C * k * tt ** (gam - a) + np.sum(slopes * w, axis=1) / math.gamma(1 - a)
        res.append(float(val[0]) if scalar else val)
    return tuple(res) if many else res[0]


def _cell_weights(a: float, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """((t - s_j)^(1-a) - (t - s_{j+1})^(1-a)) / (1 - a) without cancellation."""
    x = s / t[:, None]
    L = (1 - a) * np.log1p(-x[:, :-1])
    d = (1 - a) * (np.log1p(-x[:, :-2]) - np.log1p(-x[:, 1:-1]))
    w = np.empty(L.shape)
    w[:, :-1] = np.exp(L[:, 1:]) * np.expm1(d)
    w[:, -1] = np.exp(L[:, -1])
    return w * t[:, None] ** (1 - a) / (1 - a)
