"""Gamma, Mittag-Leffler, Wright, generalized Wright and Fox H-functions.

Power series are summed in double precision with Neumaier compensation.  When
the magnitude of the summed terms shows that cancellation has eaten the double
precision budget (alternating series on the negative axis, large arguments),
the sum is repeated in :mod:`mpmath` at a working precision sized from that
magnitude.  Results are always returned as ordinary Python/numpy numbers.

Fox H-functions are evaluated by trapezoidal quadrature along a vertical
Mellin-Barnes line (:func:`fox_h_contour`) and, independently, by summing
residues (:func:`fox_h_residues`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy import special as sc

__all__ = [
    "SpecfunError",
    "PoleError",
    "NonConvergence",
    "DivergentSpec",
    "OutsideRadius",
    "ConvergenceViolation",
    "QuadratureFailure",
    "RepeatedPoles",
    "GenWrightSpec",
    "FoxHSpec",
    "SeriesResult",
    "ContourResult",
    "ResidueResult",
    "gamma_ln",
    "rgamma",
    "mittag_leffler",
    "wright",
    "gen_wright",
    "gen_wright_series",
    "fox_h_contour",
    "fox_h_residues",
]

EPS = np.finfo(float).eps
_STOP_REL = 1e-17
_MAX_TERMS = 200_000
_MAX_DPS = 1500


class SpecfunError(ValueError):
    """Base class for special-function evaluation errors."""


class PoleError(SpecfunError):
    pass


class NonConvergence(SpecfunError):
    pass


class DivergentSpec(SpecfunError):
    pass


class OutsideRadius(SpecfunError):
    def __init__(self, msg: str, radius: float, value: float):
        super().__init__(msg)
        self.radius = radius
        self.value = value


class ConvergenceViolation(SpecfunError):
    pass


class QuadratureFailure(SpecfunError):
    pass


class RepeatedPoles(SpecfunError):
    pass


# ---------------------------------------------------------------------------
# gamma


def _is_nonpos_int(x) -> np.ndarray:
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return (x.imag == 0) & (x.real <= 0) & (x.real == np.round(x.real))
    return (x <= 0) & (x == np.round(x))


def gamma_ln(z):
    """Principal branch of log Gamma(z).

    Raises :class:`PoleError` at nonpositive integers.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(_is_nonpos_int(arr)):
        raise PoleError(f"Gamma has a pole at {z!r}")
    out = sc.loggamma(arr)
    return complex(out) if out.ndim == 0 else out


def rgamma(x):
    """1/Gamma(x), zero at the poles of Gamma."""
    return sc.rgamma(x)


# ---------------------------------------------------------------------------
# compensated power-series engine


def _neumaier(terms: np.ndarray) -> np.ndarray:
    """Neumaier-compensated sum along axis 0."""
    s = np.zeros(terms.shape[1:], dtype=terms.dtype)
    c = np.zeros_like(s)
    for row in terms:
        t = s + row
        big = np.abs(s) >= np.abs(row)
        c += np.where(big, (s - t) + row, (row - t) + s)
        s = t
    return s + c


class _Coefficients:
    """Log-magnitude/sign coefficient generator for sum_k c_k z^k.

    Subclasses provide ``_block(k)`` returning ``(logc, sign)`` for an integer
    array ``k`` (sign 0 marks an exactly vanishing coefficient) and
    ``_mp(k)`` returning the coefficient as an mpmath number.
    """

    key: tuple

    def _block(self, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _mp(self, k: int):
        raise NotImplementedError

    def _mp_all(self, n: int):
        return [self._mp(k) for k in range(n)]

    def upto(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return _float_coeffs(self, n)


@lru_cache(maxsize=256)
def _float_coeffs_cached(coef: _Coefficients, n: int):
    k = np.arange(n, dtype=float)
    return coef._block(k)


def _float_coeffs(coef: _Coefficients, n: int):
    # round up so that repeated calls share cache entries
    n = max(64, 1 << int(math.ceil(math.log2(max(n, 1)))))
    return _float_coeffs_cached(coef, n)


_MP_STORE: dict = {}
_MP_STORE_SIZE = 64


def _mp_coeffs(coef: _Coefficients, n: int, dps: int) -> tuple:
    """High-precision coefficients; any cached entry at least as long and precise is reused."""
    hit = _MP_STORE.get(coef)
    if hit is not None and hit[0] >= n and hit[1] >= dps:
        return hit[2][:n]
    if hit is not None:
        n, dps = max(n, hit[0]), max(dps, hit[1])
    with mp.workdps(dps):
        cs = tuple(coef._mp_all(n))
    if len(_MP_STORE) >= _MP_STORE_SIZE:
        _MP_STORE.pop(next(iter(_MP_STORE)), None)
    _MP_STORE[coef] = (n, dps, cs)
    return cs


def _rational(x: float, max_den: int = 64) -> Fraction | None:
    f = Fraction(x).limit_denominator(max_den)
    if f > 0 and abs(float(f) - x) <= 1e-15 * max(1.0, abs(x)) and f.numerator <= 64:
        return f
    return None


def _mp_gamma_seq(a: float, al: float, n: int, reciprocal: bool) -> list:
    """Gamma(a + al*k) (or its reciprocal) for k < n at the current precision.

    For a small positive rational step al = P/Q the values are propagated with
    Gamma(x + P) = x (x+1) ... (x+P-1) Gamma(x) along each residue class mod Q.
    """
    fn = mp.rgamma if reciprocal else mp.gamma
    frac = _rational(al)
    if frac is None:
        step = mp.mpf(al)
        return [fn(mp.mpf(a) + step * k) for k in range(n)]
    P, Q = frac.numerator, frac.denominator
    out = []
    for k in range(n):
        x = mp.mpf(a) + mp.mpf(P * k) / Q
        if k >= Q:
            x0 = x - P
            if x0 > 0:
                prod = mp.mpf(1)
                for i in range(P):
                    prod *= x0 + i
                out.append(out[k - Q] / prod if reciprocal else out[k - Q] * prod)
                continue
        out.append(fn(x))
    return out


def _log_add(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a > b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def _terms_needed(coef: _Coefficients, log_r: float, drop: float) -> tuple[int, float, float]:
    """Number of terms until three consecutive nonzero terms, past the peak,
    fall ``drop`` (natural-log units) below the running absolute sum.

    Returns ``(K, log_abs_sum, log_max_term)`` at radius ``exp(log_r)``.
    """
    n = 64
    while True:
        logc, sign = coef.upto(n)
        lt = logc + np.arange(len(logc)) * log_r if log_r > -math.inf else np.where(
            np.arange(len(logc)) == 0, logc, -np.inf
        )
        lt = np.where(sign == 0, -np.inf, lt)
        log_abs = -math.inf
        small = 0
        prev = -math.inf
        peaked = False
        lmax = -math.inf
        for k, v in enumerate(lt):
            if v == -math.inf:
                continue
            if not math.isfinite(v):
                raise NonConvergence("series coefficient overflow")
            lmax = max(lmax, v)
            log_abs = _log_add(log_abs, v)
            if v < prev:
                peaked = True
            prev = v
            if peaked and v < log_abs - drop:
                small += 1
                if small >= 3:
                    return k + 1, log_abs, lmax
            else:
                small = 0
        if log_r == -math.inf and log_abs > -math.inf:
            return 1, log_abs, lmax
        if n >= _MAX_TERMS:
            raise NonConvergence(f"series did not converge within {_MAX_TERMS} terms")
        n *= 2


@dataclass(frozen=True)
class SeriesResult:
    value: complex | float
    error: float
    terms: int
    precision: str  # "double" or "mp<dps>"


def _sum_series(coef: _Coefficients, z: np.ndarray, rtol: float = 1e-13) -> tuple[np.ndarray, np.ndarray, int]:
    """Sum sum_k c_k z^k for every entry of the 1-D array ``z``.

    Returns values, absolute error estimates and the number of terms used.
    """
    z = np.asarray(z)
    is_complex = np.iscomplexobj(z)
    absz = np.abs(z)
    rmax = float(absz.max()) if absz.size else 0.0
    log_r = math.log(rmax) if rmax > 0 else -math.inf
    K, log_abs, log_max = _terms_needed(coef, log_r, -math.log(_STOP_REL))
    logc, sign = coef.upto(K)
    logc, sign = logc[:K], sign[:K]
    k = np.arange(K, dtype=float)

    out = np.empty(z.shape, dtype=complex if is_complex else float)
    err = np.empty(z.shape, dtype=float)
    nz = absz > 0
    # z == 0: only the constant term survives
    out[~nz] = sign[0] * math.exp(logc[0]) if sign[0] != 0 else 0.0
    err[~nz] = 0.0
    idx = np.nonzero(nz)[0]
    redo = []
    if idx.size:
        zz = z[idx]
        lr = np.log(np.abs(zz))
        with np.errstate(over="ignore", invalid="ignore"):
            lt = logc[:, None] + k[:, None] * lr[None, :]
        lt = np.where(sign[:, None] == 0, -np.inf, lt)
        overflow = np.any(lt > 700, axis=0)
        mag = np.exp(np.minimum(lt, 700.0))
        if is_complex:
            phase = np.exp(1j * k[:, None] * np.angle(zz)[None, :])
        else:
            phase = np.where(np.signbit(zz)[None, :] & (k[:, None] % 2 == 1), -1.0, 1.0)
        terms = sign[:, None] * mag * phase
        s = _neumaier(terms)
        abs_sum = mag.sum(axis=0)
        # exp(lt) carries a relative error of about EPS |lt|
        e = EPS * np.sum(mag * (8.0 + np.where(np.isfinite(lt), np.abs(lt), 0.0)), axis=0)
        out[idx] = s
        err[idx] = e
        bad = overflow | (e > rtol * np.abs(s)) & (abs_sum > 0)
        redo = idx[bad]
        # largest arguments first: their coefficients serve the smaller ones
        redo = redo[np.argsort(-absz[redo], kind="stable")]
    for i in redo:
        v, e = _sum_series_mp(coef, complex(z[i]) if is_complex else float(z[i]))
        out[i] = v
        err[i] = e
    return out, err, K


def _bucket(dps: float) -> int:
    return int(32 * math.ceil(dps / 32))


def _sum_series_mp(coef: _Coefficients, z, extra: int = 20):
    """High-precision fallback for a single argument."""
    log_r = math.log(abs(z))
    # start by assuming an O(1) result; precision is bucketed so that nearby
    # arguments share the cached high-precision coefficients
    _, log_abs0, _ = _terms_needed(coef, log_r, -math.log(_STOP_REL))
    dps = _bucket(25 + max(0.0, log_abs0 / math.log(10.0)))
    last = None
    while dps <= _MAX_DPS:
        drop = (dps + 2) * math.log(10.0)
        K, log_abs, _ = _terms_needed(coef, log_r, drop)
        K = 1 << int(math.ceil(math.log2(K)))
        cs = _mp_coeffs(coef, K, dps)
        with mp.workdps(dps):
            zz = mp.mpc(z) if isinstance(z, complex) else mp.mpf(z)
            s = mp.mpf(0)
            p = mp.mpf(1)
            for c in cs:
                if c:
                    s += c * p
                p *= zz
            mag = abs(s)
            if mag == 0:
                digits_lost = dps
            else:
                digits_lost = (log_abs - float(mp.log(mag))) / math.log(10.0)
            if digits_lost + extra <= dps:
                err = float(mp.mpf(10) ** (-dps) * mp.e ** log_abs) * 10
                val = complex(s) if isinstance(z, complex) else float(s)
                return val, err
            last = s
        dps = _bucket(min(_MAX_DPS + 1, max(dps + 32, digits_lost + extra + 10)))
    raise NonConvergence(
        f"cancellation in series at z={z!r} needs more than {_MAX_DPS} digits"
        + ("" if last is None else f" (last estimate {mp.nstr(last, 5)})")
    )


# ---------------------------------------------------------------------------
# generalized Wright function


def _as_pairs(pairs) -> tuple[tuple[float, float], ...]:
    return tuple((float(a), float(b)) for a, b in pairs)


@dataclass(frozen=True)
class GenWrightSpec:
    """Parameters of pPsiq with its convergence classification."""

    upper: tuple[tuple[float, float], ...]
    lower: tuple[tuple[float, float], ...]
    delta: float = field(init=False)
    radius: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "upper", _as_pairs(self.upper))
        object.__setattr__(self, "lower", _as_pairs(self.lower))
        for a, al in self.upper + self.lower:
            if al == 0:
                raise ValueError("second components must be nonzero")
        delta = sum(b for _, b in self.lower) - sum(a for _, a in self.upper)
        object.__setattr__(self, "delta", delta)
        if delta < -1 - 1e-12:
            raise DivergentSpec(f"Delta = {delta:g} < -1: series diverges for every z != 0")
        if delta > -1 + 1e-12:
            radius = math.inf
        else:
            lr = -sum(al * math.log(abs(al)) for _, al in self.upper)
            lr += sum(be * math.log(abs(be)) for _, be in self.lower)
            radius = math.exp(lr)
        object.__setattr__(self, "radius", radius)


class _WrightCoefficients(_Coefficients):
    def __init__(self, spec: GenWrightSpec):
        self.spec = spec
        self.key = (spec.upper, spec.lower)

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, _WrightCoefficients) and other.key == self.key

    def _block(self, k):
        logc = -sc.gammaln(k + 1)
        sign = np.ones_like(k)
        for a, al in self.spec.upper:
            arg = a + al * k
            if np.any(_is_nonpos_int(arg)):
                kk = int(k[np.argmax(_is_nonpos_int(arg))])
                raise PoleError(f"upper parameter ({a:g}, {al:g}) hits a Gamma pole at k={kk}")
            logc = logc + sc.gammaln(arg)
            sign = sign * sc.gammasgn(arg)
        for b, be in self.spec.lower:
            arg = b + be * k
            pole = _is_nonpos_int(arg)
            safe = np.where(pole, 1.0, arg)
            logc = logc - sc.gammaln(safe)
            sign = np.where(pole, 0.0, sign * sc.gammasgn(safe))
        return logc, sign

    def _mp_all(self, n):
        out = [mp.mpf(1)] * n
        f = mp.mpf(1)
        for k in range(n):
            if k:
                f *= k
            out[k] = 1 / f
        for a, al in self.spec.upper:
            seq = _mp_gamma_seq(a, al, n, reciprocal=False)
            out = [c * g for c, g in zip(out, seq)]
        for b, be in self.spec.lower:
            seq = _mp_gamma_seq(b, be, n, reciprocal=True)
            out = [c * g for c, g in zip(out, seq)]
        return out

    def _mp(self, k):
        c = mp.mpf(1) / mp.factorial(k)
        for a, al in self.spec.upper:
            c *= mp.gamma(mp.mpf(a) + mp.mpf(al) * k)
        for b, be in self.spec.lower:
            c *= mp.rgamma(mp.mpf(b) + mp.mpf(be) * k)
        return c


class _MLCoefficients(_Coefficients):
    def __init__(self, alpha: float, beta: float):
        self.alpha, self.beta = float(alpha), float(beta)
        self.key = ("ml", self.alpha, self.beta)

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, _MLCoefficients) and other.key == self.key

    def _block(self, k):
        arg = self.beta + self.alpha * k
        pole = _is_nonpos_int(arg)
        safe = np.where(pole, 1.0, arg)
        return -sc.gammaln(safe), np.where(pole, 0.0, sc.gammasgn(safe))

    def _mp(self, k):
        return mp.rgamma(mp.mpf(self.beta) + mp.mpf(self.alpha) * k)

    def _mp_all(self, n):
        return _mp_gamma_seq(self.beta, self.alpha, n, reciprocal=True)


def _prepare(z):
    arr = np.asarray(z)
    scalar = arr.ndim == 0
    if np.iscomplexobj(arr):
        if np.all(arr.imag == 0):
            arr = arr.real
    else:
        arr = arr.astype(float)
    return arr.reshape(-1), scalar, np.shape(z)


def _finish(vals: np.ndarray, scalar: bool, shape):
    if np.iscomplexobj(vals):
        small = np.abs(vals.imag) <= 1e-12 * np.abs(vals.real)
        if np.all(small):
            vals = vals.real
    if scalar:
        v = vals[0]
        return complex(v) if np.iscomplexobj(vals) else float(v)
    return vals.reshape(shape)


def gen_wright_series(spec: GenWrightSpec, z, rtol: float = 1e-13) -> SeriesResult:
    """Scalar pPsiq with the error bound and term count."""
    arr, scalar, shape = _prepare(z)
    if arr.size != 1:
        raise ValueError("gen_wright_series takes a scalar argument")
    _check_radius(spec, arr)
    vals, errs, K = _sum_series(_WrightCoefficients(spec), arr, rtol)
    v = _finish(vals, True, ())
    return SeriesResult(v, float(errs[0]), K, "double" if errs[0] <= rtol * abs(v) else "mp")


def _check_radius(spec: GenWrightSpec, arr: np.ndarray):
    if math.isfinite(spec.radius):
        r = float(np.max(np.abs(arr))) if arr.size else 0.0
        if r >= spec.radius:
            raise OutsideRadius(
                f"Delta = -1 series converges only for |z| < {spec.radius:.6g}; got |z| = {r:.6g}",
                spec.radius,
                r,
            )


def gen_wright(spec: GenWrightSpec, z):
    """Generalized Wright function pPsiq[z] by compensated series summation.

    ``z`` may be a scalar or an array; real input gives real output.
    """
    arr, scalar, shape = _prepare(z)
    _check_radius(spec, arr)
    vals, _, _ = _sum_series(_WrightCoefficients(spec), arr)
    return _finish(vals, scalar, shape)


def mittag_leffler(alpha: float, beta: float, z):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for |z| <= 50."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    arr, scalar, shape = _prepare(z)
    if arr.size and float(np.max(np.abs(arr))) > 50:
        raise NonConvergence("Mittag-Leffler summation is limited to |z| <= 50")
    vals, _, _ = _sum_series(_MLCoefficients(alpha, beta), arr)
    return _finish(vals, scalar, shape)


_WRIGHT_CONTOUR_SWITCH = 2.0


def wright(z, a: float, b: float):
    """Wright function sum_k z^k / (Gamma(b + a k) k!), a > -1.

    For -1 < a < 0 and real arguments below -2 the alternating series is
    replaced by the equivalent H^{1,0}_{1,1} Mellin-Barnes integral.
    """
    if not a > -1:
        raise ValueError(f"Wright function needs a > -1, got {a}")
    spec = GenWrightSpec((), ((b, a),))
    arr, scalar, shape = _prepare(z)
    out = np.empty(arr.shape, dtype=complex if np.iscomplexobj(arr) else float)
    use_h = np.zeros(arr.shape, dtype=bool)
    if a < 0 and not np.iscomplexobj(arr):
        use_h = arr < -_WRIGHT_CONTOUR_SWITCH
    if np.any(~use_h):
        vals, _, _ = _sum_series(_WrightCoefficients(spec), arr[~use_h])
        out[~use_h] = vals
    if np.any(use_h):
        h = FoxHSpec(1, 0, ((b, -a),), ((0.0, 1.0),))
        out[use_h] = _contour_batch(h, -arr[use_h])
    return _finish(out, scalar, shape)


# ---------------------------------------------------------------------------
# Fox H-function


@dataclass(frozen=True)
class FoxHSpec:
    """H^{m,l}_{p,q} parameters with growth constants and a default contour."""

    m: int
    l: int
    upper: tuple[tuple[float, float], ...]
    lower: tuple[tuple[float, float], ...]
    p: int = field(init=False)
    q: int = field(init=False)
    rho: float = field(init=False)
    nu: float = field(init=False)
    delta_growth: float = field(init=False)
    mu_growth: float = field(init=False)
    gamma_line: float = field(init=False)

    def __post_init__(self):
        up, lo = _as_pairs(self.upper), _as_pairs(self.lower)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)
        p, q, m, l = len(up), len(lo), int(self.m), int(self.l)
        if not (0 <= m <= q and 0 <= l <= p) or (m, l) == (0, 0):
            raise ValueError(f"invalid indices m={m}, l={l}, p={p}, q={q}")
        if any(al <= 0 for _, al in up) or any(be <= 0 for _, be in lo):
            raise ValueError("Fox H second components must be positive")
        rho = (
            sum(al for _, al in up[:l]) - sum(al for _, al in up[l:])
            + sum(be for _, be in lo[:m]) - sum(be for _, be in lo[m:])
        )
        nu = sum(be for _, be in lo) - sum(al for _, al in up)
        mu = math.exp(sum(al * math.log(al) for _, al in up) - sum(be * math.log(be) for _, be in lo))
        delta = sum(b for b, _ in lo) - sum(a for a, _ in up) + (p - q) / 2
        right = min((b / be for b, be in lo[:m]), default=math.inf)
        left = max(((a - 1) / al for a, al in up[:l]), default=-math.inf)
        if not left < right:
            raise ValueError("no vertical line separates the two pole families")
        if l == 0:
            line = right - 0.5
        elif m == 0:
            line = left + 0.5
        else:
            line = 0.5 * (left + right)
        for name, val in (("m", m), ("l", l), ("p", p), ("q", q), ("rho", rho), ("nu", nu),
                          ("delta_growth", delta), ("mu_growth", mu), ("gamma_line", line)):
            object.__setattr__(self, name, val)

    @property
    def right_edge(self) -> float:
        return min((b / be for b, be in self.lower[: self.m]), default=math.inf)

    @property
    def left_edge(self) -> float:
        return max(((a - 1) / al for a, al in self.upper[: self.l]), default=-math.inf)


def _log_kernel(spec: FoxHSpec, s: np.ndarray, logz) -> np.ndarray:
    """log of the Mellin-Barnes integrand (without 1/(2 pi i)); -inf at zeros."""
    out = s * logz
    for b, be in spec.lower[: spec.m]:
        out = out + sc.loggamma(b - be * s)
    for a, al in spec.upper[: spec.l]:
        out = out + sc.loggamma(1 - a + al * s)
    dens = [a - al * s for a, al in spec.upper[spec.l:]]
    dens += [1 - b + be * s for b, be in spec.lower[spec.m:]]
    for d in dens:
        zero = _is_nonpos_int(d)
        lg = sc.loggamma(np.where(zero, 1.0, d))
        out = np.where(zero, -np.inf + 0j, out - lg)
    return out


def _dlog_real(spec: FoxHSpec, g: np.ndarray, logz, order: int):
    """First or second derivative of log|integrand| along the real axis."""
    poly = sc.psi if order == 1 else (lambda x: sc.polygamma(1, x))
    sgn = -1.0 if order == 1 else 1.0
    out = logz if order == 1 else np.zeros_like(g)
    for b, be in spec.lower[: spec.m]:
        out = out + sgn * be ** order * poly(b - be * g)
    for a, al in spec.upper[: spec.l]:
        out = out + al ** order * poly(1 - a + al * g)
    for a, al in spec.upper[spec.l:]:
        out = out - sgn * al ** order * poly(a - al * g)
    for b, be in spec.lower[spec.m:]:
        out = out - be ** order * poly(1 - b + be * g)
    return out


def _saddle_ok(spec: FoxHSpec) -> bool:
    # saddle search needs a pole-free, zero-free real half-line to the left
    if spec.l != 0 or spec.q != spec.m:
        return False
    return all(a - al * spec.right_edge > 0 for a, al in spec.upper)


def _saddle(spec: FoxHSpec, logz: np.ndarray) -> np.ndarray:
    """Minimiser of the integrand along the real axis, left of the poles."""
    right = spec.right_edge
    hi = np.full(logz.shape, right - 1e-9)
    lo = np.full(logz.shape, right - 1.0)
    for _ in range(200):
        d = _dlog_real(spec, lo, logz, 1)
        need = d > 0
        if not np.any(need):
            break
        lo = np.where(need, right - 2 * (right - lo), lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        d = _dlog_real(spec, mid, logz, 1)
        lo = np.where(d < 0, mid, lo)
        hi = np.where(d < 0, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ContourResult:
    value: float
    error: float
    gamma: float
    T: float
    h: float


def _line_for(spec: FoxHSpec, z: float, line: str) -> float:
    g = spec.gamma_line
    if line == "auto" and _saddle_ok(spec):
        gs = float(_saddle(spec, np.array([math.log(z)]))[0])
        g = min(g, gs)
    return g


def _check_contour(spec: FoxHSpec, z):
    if spec.rho <= 0:
        raise ConvergenceViolation(
            f"rho = {spec.rho:g} <= 0: the Mellin-Barnes integral does not converge"
        )
    if np.any(np.asarray(z) <= 0):
        raise ValueError("fox_h_contour is implemented for positive real z")


def fox_h_contour(spec: FoxHSpec, z, tol: float = 1e-12, line: str = "auto", full_output: bool = False):
    """Fox H-function by trapezoidal quadrature on Re s = gamma.

    The line is ``spec.gamma_line`` or, with ``line="auto"`` and no left pole
    family, the real-axis saddle of the integrand when it lies further left.
    ``T`` is doubled until the integrand tail drops below ``1e-3 * tol`` of the
    integral and the step halved until successive sums agree to ``tol``.
    """
    _check_contour(spec, z)
    arr = np.asarray(z, dtype=float)
    if arr.ndim:
        if full_output:
            raise ValueError("full_output needs a scalar z")
        return _contour_batch(spec, arr.reshape(-1), tol).reshape(arr.shape)
    res = _contour_scalar(spec, float(arr), tol, line)
    return res if full_output else res.value


def _step(spec: FoxHSpec, g, width, tol: float):
    # trapezoid error on a line at distance d from the nearest pole ~ exp(-2 pi d / h)
    d = spec.right_edge - g if spec.l == 0 else np.minimum(spec.right_edge - g, g - spec.left_edge)
    d = np.minimum(d, 50.0)
    return np.minimum(width / 4, 2 * math.pi * 0.8 * d / (math.log(1.0 / tol) + 8.0))


def _contour_scalar(spec: FoxHSpec, z: float, tol: float, line: str) -> ContourResult:
    logz = math.log(z)
    g = _line_for(spec, z, line)
    curv = float(_dlog_real(spec, np.array([g]), logz, 2)[0])
    width = 1.0 / math.sqrt(curv) if curv > 0 else 1.0
    h = float(_step(spec, g, width, tol))
    peak = float(np.real(_log_kernel(spec, np.array([g + 0j]), logz)[0]))

    def f(y):
        return np.real(np.exp(_log_kernel(spec, g + 1j * y, logz) - peak))

    def trap(T, h):
        y = np.arange(0, T + h / 2, h)
        v = f(y)
        return h * (v.sum() - 0.5 * v[0]) / math.pi

    # the tail beyond T decays like exp(-pi*rho*y/2)
    T = max(9 * width, 8.0)
    for _ in range(40):
        est = trap(T, h)
        edge = np.abs(np.exp(np.real(_log_kernel(spec, g + 1j * np.linspace(T / 2, T, 64), logz)) - peak))
        tail = edge.max() * 2.0 / (math.pi * spec.rho)
        if tail < 1e-3 * tol * max(abs(est), 1e-300):
            break
        T *= 2
    else:
        raise QuadratureFailure("integrand tail did not decay; rho too small for the requested tolerance")

    prev = est
    for _ in range(12):
        h /= 2
        I = trap(T, h)
        if abs(I - prev) <= tol * max(abs(I), 1e-300):
            scale = math.exp(peak)
            return ContourResult(I * scale, abs(I - prev) * scale, g, T, h)
        prev = I
    raise QuadratureFailure(f"trapezoid did not settle at z={z}: last change {abs(I - prev):.3g}")


def _contour_batch(spec: FoxHSpec, z: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Vectorised contour evaluation with per-argument saddle lines.

    Arguments whose fixed-grid result fails the step-halving check are
    recomputed with the scalar adaptive routine.
    """
    _check_contour(spec, z)
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape)
    if not _saddle_ok(spec):
        for i, zi in enumerate(z):
            out[i] = _contour_scalar(spec, float(zi), tol, "fixed").value
        return out
    # sorting keeps the rows of a chunk on grids of similar length
    order = np.argsort(z)
    zs = z[order]
    chunk = 512
    for start in range(0, z.size, chunk):
        out[order[start:start + chunk]] = _contour_chunk(spec, zs[start:start + chunk], tol)
    return out


def _contour_chunk(spec: FoxHSpec, z: np.ndarray, tol: float) -> np.ndarray:
    logz = np.log(z)
    g = np.minimum(_saddle(spec, logz), spec.gamma_line)
    curv = _dlog_real(spec, g, logz, 2)
    width = np.where(curv > 0, 1.0 / np.sqrt(np.maximum(curv, 1e-300)), 1.0)
    h = _step(spec, g, width, tol)
    # the Gaussian core needs ~9 widths; the exp(-pi*rho*y/2) tail sets the rest
    tail = 2.0 / (math.pi * spec.rho) * (math.log(1.0 / tol) + 10.0)
    ymax = np.maximum(9 * width, tail)
    peak = np.real(_log_kernel(spec, g.astype(complex), logz))
    res = np.empty(z.shape)
    # the integrand is at most exp(peak) on the line, so tiny peaks underflow outright
    tiny = peak + np.log(np.maximum(ymax, 1.0)) < -760.0
    res[tiny] = 0.0
    todo = np.nonzero(~tiny)[0]
    for _ in range(8):
        if not todo.size:
            return res
        fine, coarse, last = _trap_rows(spec, g[todo], h[todo], ymax[todo], logz[todo], peak[todo])
        res[todo] = fine * np.exp(peak[todo])
        # coarse error ~ sqrt(fine error) for exponentially convergent trapezoid sums
        bad_step = np.abs(fine - coarse) > 0.1 * math.sqrt(tol) * np.maximum(np.abs(fine), 1e-300)
        for i in todo[bad_step]:
            res[i] = _contour_scalar(spec, float(z[i]), tol, "auto").value
        short = ~bad_step & (np.abs(last) > 1e-3 * tol * np.maximum(np.abs(fine), 1e-300))
        todo = todo[short]
        ymax[todo] *= 2
    for i in todo:
        res[i] = _contour_scalar(spec, float(z[i]), tol, "auto").value
    return res


def _trap_rows(spec, g, h, ymax, logz, peak):
    """Trapezoid sums on rows of a common index grid, masked beyond ``ymax``."""
    n = int(np.ceil(np.max(ymax / h))) + 1
    n += n % 2  # even count so the coarse grid is a subset
    j = np.arange(n + 1)
    y = h[:, None] * j[None, :]
    mask = y <= ymax[:, None] + h[:, None]
    s = g[:, None] + 1j * y
    vals = np.real(np.exp(_log_kernel(spec, s, logz[:, None]) - peak[:, None]))
    vals = np.where(mask, vals, 0.0)
    fine = h * (vals.sum(axis=1) - 0.5 * vals[:, 0]) / math.pi
    coarse = 2 * h * (vals[:, ::2].sum(axis=1) - 0.5 * vals[:, 0]) / math.pi
    last = vals[np.arange(len(g)), np.minimum(np.sum(mask, axis=1) - 1, n)]
    return fine, coarse, last


@dataclass(frozen=True)
class ResidueResult:
    value: float
    terms: int
    dps: int
    domain: str


def _residue_domain(spec: FoxHSpec) -> str:
    if spec.l != 0:
        return "l > 0: right-pole residue series not guaranteed"
    if spec.nu > 0:
        return "nu > 0: residue series converges for all z > 0"
    if spec.nu == 0:
        return f"nu = 0: converges for z < 1/mu = {1 / spec.mu_growth:.6g}"
    return "nu < 0: asymptotic only"


def fox_h_residues(spec: FoxHSpec, z: float, full_output: bool = False, max_poles: int = 4000):
    """Fox H-function as the sum of residues at the poles of Gamma(b_j - beta_j s), j <= m.

    Simple poles use the closed-form residue and two poles meeting at one
    point use the Laurent expansion of the two colliding gammas; three or
    more fall back to a Cauchy integral on a small circle.  Identical
    parameter pairs are rejected.
    """
    z = float(z)
    if z <= 0:
        raise ValueError("z must be positive")
    firsts = spec.lower[: spec.m]
    for i in range(len(firsts)):
        for j in range(i):
            if firsts[i] == firsts[j]:
                raise RepeatedPoles(f"identical parameter pairs {firsts[i]} give coincident poles")
    if spec.nu < 0 or (spec.nu == 0 and z * spec.mu_growth >= 1):
        raise ConvergenceViolation(f"residue series diverges: {_residue_domain(spec)}")

    dps = 30
    while True:
        val, nterms, log_ratio = _residue_sum(spec, z, dps, max_poles)
        if log_ratio + 20 <= dps:
            break
        if dps >= _MAX_DPS:
            raise NonConvergence("residue series cancellation exceeds working precision")
        dps = int(min(_MAX_DPS, log_ratio + 30))
    res = ResidueResult(val, nterms, dps, _residue_domain(spec))
    return res if full_output else res.value


def _pole_list(spec: FoxHSpec, count: int):
    """Poles (position, [(group index, k)]) sorted by position."""
    poles = []
    for j, (b, be) in enumerate(spec.lower[: spec.m]):
        for k in range(count):
            poles.append(((b + k) / be, j, k))
    poles.sort()
    merged = []
    for pos, j, k in poles:
        if merged and abs(merged[-1][0] - pos) <= 1e-12 * max(1.0, abs(pos)):
            merged[-1][1].append((j, k))
        else:
            merged.append([pos, [(j, k)]])
    return merged


def _residue_sum(spec: FoxHSpec, z: float, dps: int, max_poles: int):
    with mp.workdps(dps):
        zz = mp.mpf(z)
        total = mp.mpf(0)
        biggest = mp.mpf(0)
        small = 0
        count = 64
        done = 0
        while True:
            poles = _pole_list(spec, count)
            # only trust poles below the smallest cut-off position of any group
            limit = min((b + count) / be for b, be in spec.lower[: spec.m])
            for pos, members in poles[done:]:
                if pos >= limit:
                    break
                done += 1
                if len(members) == 1:
                    t = _simple_residue(spec, zz, *members[0])
                elif len(members) == 2:
                    t = _double_residue(spec, zz, pos, members)
                else:
                    t = _circle_residue(spec, zz, pos, poles, dps)
                total += t
                at = abs(t)
                if at > biggest:
                    biggest = at
                if at == 0:
                    continue
                if at < 1e-16 * abs(total) and at < biggest:
                    small += 1
                    if small >= 3:
                        ratio = float(mp.log10(biggest / abs(total))) if total else float(dps)
                        return float(total), done, max(ratio, 0.0)
                else:
                    small = 0
            if done >= max_poles:
                raise NonConvergence("residue terms did not decay")
            count *= 2


def _mp_factors(spec: FoxHSpec, s, skip: int | None = None, skip_set: tuple = ()):
    """Integrand without the Gamma factors ``skip``/``skip_set`` (indices into lower[:m])."""
    v = mp.mpf(1)
    for i, (b, be) in enumerate(spec.lower[: spec.m]):
        if i != skip and i not in skip_set:
            v *= mp.gamma(mp.mpf(b) - mp.mpf(be) * s)
    for a, al in spec.upper[: spec.l]:
        v *= mp.gamma(1 - mp.mpf(a) + mp.mpf(al) * s)
    for a, al in spec.upper[spec.l:]:
        v *= mp.rgamma(mp.mpf(a) - mp.mpf(al) * s)
    for b, be in spec.lower[spec.m:]:
        v *= mp.rgamma(1 - mp.mpf(b) + mp.mpf(be) * s)
    return v


def _simple_residue(spec: FoxHSpec, z, j: int, k: int):
    b, be = spec.lower[j]
    s = (mp.mpf(b) + k) / mp.mpf(be)
    return (-1) ** k / (mp.factorial(k) * mp.mpf(be)) * _mp_factors(spec, s, skip=j) * z ** s


def _double_residue(spec: FoxHSpec, z, pos: float, members):
    """Two Gamma poles at one point: Laurent product of both factors."""
    (j1, k1), (j2, k2) = members
    b1, be1 = spec.lower[j1]
    b2, be2 = spec.lower[j2]
    # exact pole position from the first group
    p = (mp.mpf(b1) + k1) / mp.mpf(be1)

    def regular(s):
        return _mp_factors(spec, s, skip_set=(j1, j2)) * z ** s

    c = (-1) ** (k1 + k2) / (mp.factorial(k1) * mp.factorial(k2))
    A1, A2 = 1 / mp.mpf(be1), 1 / mp.mpf(be2)
    B1, B2 = mp.digamma(k1 + 1), mp.digamma(k2 + 1)
    R = regular(p)
    dR = mp.diff(regular, p)
    res = c * (A1 * A2 * dR - (A1 * B2 + A2 * B1) * R)
    return -res


def _circle_residue(spec: FoxHSpec, z, pos: float, poles, dps: int):
    others = [abs(p - pos) for p, _ in poles if abs(p - pos) > 1e-12 * max(1.0, abs(pos))]
    r = 0.5 * min(others + [1.0])
    n = max(64, int(2.5 * dps / math.log10(2.0)))
    n = min(n, 4096)
    c = mp.mpf(pos)
    acc = mp.mpc(0)
    for i in range(n):
        e = r * mp.expjpi(2 * mp.mpf(i) / n)
        s = c + e
        acc += _mp_factors(spec, s) * z ** s * e
    # (1/(2 pi i)) * closed integral, minus sign from closing to the right
    return -mp.re(acc / n)
