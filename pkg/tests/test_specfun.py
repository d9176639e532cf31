import math

import mpmath as mp
import numpy as np
import pytest
from scipy import special as sc

from fractel.specfun import (
    ConvergenceViolation,
    DivergentSpec,
    FoxHSpec,
    GenWrightSpec,
    NonConvergence,
    OutsideRadius,
    PoleError,
    RepeatedPoles,
    fox_h_contour,
    fox_h_residues,
    gamma_ln,
    gen_wright,
    mittag_leffler,
    wright,
)

try:
    from hypothesis import given, settings, strategies as st
except ImportError:  # pragma: no cover
    given = None


def mp_series(coef, z, dps=60, tol=40):
    """Direct high-precision sum of coef(k) z^k, confirmed by a rerun at twice the precision."""
    lo, hi = _mp_sum(coef, z, dps, tol), _mp_sum(coef, z, 2 * dps, tol)
    assert abs(lo - hi) <= 1e-15 * abs(hi), "oracle not converged"
    return hi


def _mp_sum(coef, z, dps, tol):
    with mp.workdps(dps):
        z = mp.mpf(z)
        total, k, small = mp.mpf(0), 0, 0
        while small < 5:
            term = coef(k) * z ** k
            total += term
            small = small + 1 if k > 10 and abs(term) < mp.mpf(10) ** -tol * abs(total) else 0
            k += 1
        return float(total)


def sol1_spec(alpha=0.4, a=0.0, l2=1.0):
    return FoxHSpec(2, 0, [(1.0, 2 * alpha)], [(0.5 - a / 2, 1.0), (-(a + l2) / 2, 1.0)])


# gamma_ln


@pytest.mark.parametrize("z, expected", [(1, 0.0), (0.5, 0.5 * math.log(math.pi)), (5, math.log(24))])
def test_gamma_ln_examples(z, expected):
    assert abs(gamma_ln(z) - expected) <= 1e-13 * max(1, abs(expected))


def test_gamma_ln_complex_matches_mpmath():
    for z in (0.3 + 2j, -2.5 + 0.1j, 10 - 7j, 30 + 30j):
        ref = complex(mp.loggamma(mp.mpc(z.real, z.imag)))
        assert abs(np.exp(gamma_ln(z)) - np.exp(ref)) <= 1e-13 * abs(np.exp(ref))


@pytest.mark.parametrize("z", [0, -1, -7])
def test_gamma_ln_poles(z):
    with pytest.raises(PoleError):
        gamma_ln(z)


def test_gamma_ln_recurrence_sweep():
    rng = np.random.default_rng(3)
    zs = rng.uniform(-20, 20, 200) + 1j * rng.uniform(-20, 20, 200)
    zs = zs[np.abs(zs) <= 30]
    lhs = np.exp(gamma_ln(zs + 1))
    rhs = zs * np.exp(gamma_ln(zs))
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.abs(rhs))


if given is not None:

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-25, 25), st.floats(-25, 25))
    def test_gamma_ln_recurrence_property(x, y):
        z = complex(x, y)
        near_pole = x < 0.5 and abs(z - round(x)) < 1e-3
        if abs(z) > 30 or near_pole:
            return
        rhs = z * np.exp(gamma_ln(z))
        assert abs(np.exp(gamma_ln(z + 1)) - rhs) <= 1e-12 * abs(rhs)


# Mittag-Leffler


def test_ml_examples():
    assert mittag_leffler(1, 1, 1) == pytest.approx(math.e, rel=1e-14)
    for al, be in ((0.5, 1.0), (1.5, 2.5), (0.3, 0.7)):
        assert mittag_leffler(al, be, 0.0) == pytest.approx(1 / math.gamma(be), rel=1e-15)
    assert mittag_leffler(2, 1, -1) == pytest.approx(math.cos(1), rel=1e-13)


def test_ml_against_independent_series():
    for al, be, z in ((0.5, 0.5, -4.5), (0.8, 2.0, 3.7), (1.5, 1.0, -5.0), (0.3, 1.0, -2.0)):
        A, B = mp.mpf(str(al)), mp.mpf(str(be))
        ref = mp_series(lambda k: mp.rgamma(A * k + B), str(z))
        assert abs(mittag_leffler(al, be, z) - ref) <= 1e-12 * (1 + abs(ref))


def test_ml_vectorised_and_half_order_closed_form():
    z = np.linspace(-3, 3, 13)
    # E_{1/2,1}(z) = exp(z^2) erfc(-z)
    assert np.allclose(mittag_leffler(0.5, 1.0, z), sc.erfcx(-z), rtol=1e-12, atol=0)


def test_ml_sweep_matches_gen_wright():
    z = np.linspace(-5, 5, 41)
    for al in (0.3, 0.5, 0.8, 1.5):
        for be in (0.5, 1.0, 2.0):
            e = mittag_leffler(al, be, z)
            g = gen_wright(GenWrightSpec([(1, 1)], [(be, al)]), z)
            assert np.all(np.abs(e - g) <= 1e-10 * (1 + np.abs(e)))


def test_ml_large_argument_reported():
    with pytest.raises(NonConvergence):
        mittag_leffler(0.5, 1.0, 60.0)


# Wright


def test_wright_examples():
    assert wright(0, 0.7, 1.3) == pytest.approx(1 / math.gamma(1.3), rel=1e-15)
    assert wright(1, 1, 1) == pytest.approx(sc.iv(0, 2), rel=1e-14)
    ref = mp_series(lambda k: mp.rgamma(1 - mp.mpf(k) / 2) / mp.factorial(k), -1)
    assert wright(-1, -0.5, 1) == pytest.approx(ref, rel=1e-13)
    # the M-Wright profile at a = -1/2 is erfc(x/2)
    assert wright(-1, -0.5, 1) == pytest.approx(math.erfc(0.5), rel=1e-13)


def test_wright_rejects_a_below_minus_one():
    with pytest.raises(ValueError):
        wright(1.0, -1.0, 1.0)


# near a = -1 the profile is tiny already at moderate |z|, so the oracle stops at z = -3.5
@pytest.mark.parametrize("a, b, zs", [
    (-0.5, 1.0, (-1.5, -2.5, -5.0, -8.0)),
    (-0.5, 1.7, (-1.5, -2.5, -5.0, -8.0)),
    (-0.3, 0.5, (-1.5, -2.5, -5.0, -8.0)),
    (-0.8, 1.2, (-1.5, -2.5, -3.5)),
])
def test_wright_negative_axis_matches_mp_series(a, b, zs):
    A, B = mp.mpf(round(a * 10)) / 10, mp.mpf(round(b * 10)) / 10
    for z in zs:
        ref = mp_series(lambda k: mp.rgamma(B + A * k) / mp.factorial(k), z, dps=300, tol=30)
        assert abs(wright(z, a, b) - ref) <= 1e-11 * abs(ref)


def test_wright_matches_zero_psi_one():
    z = np.linspace(-5, 5, 41)
    for a in (-0.5, -0.3, 0.5, 1.0):
        for b in (0.5, 1.0, 1.7):
            w = wright(z, a, b)
            g = gen_wright(GenWrightSpec([], [(b, a)]), z)
            assert np.all(np.abs(w - g) <= 1e-12 * (1 + np.abs(w)))


# generalized Wright


def test_gen_wright_examples():
    assert gen_wright(GenWrightSpec([(1, 1)], [(1, 1)]), 1.0) == pytest.approx(math.e, rel=1e-14)
    spec = GenWrightSpec([(1, 1), (1, 1)], [(1, 1)])
    assert spec.delta == -1 and spec.radius == pytest.approx(1.0)
    # sum Gamma(1+k)^2 / Gamma(1+k) z^k / k! = 1/(1 - z)
    assert gen_wright(spec, 0.25) == pytest.approx(4 / 3, rel=1e-13)
    with pytest.raises(OutsideRadius):
        gen_wright(spec, 1.0)
    with pytest.raises(OutsideRadius):
        gen_wright(spec, -1.0)


def test_gen_wright_classification():
    s = GenWrightSpec([(0.5, 1), (1, 1)], [(1.5, 2)])
    assert s.delta == 0 and math.isinf(s.radius)
    with pytest.raises(DivergentSpec):
        GenWrightSpec([(1, 1), (1, 1), (1, 1)], [(1, 1)])
    with pytest.raises(ValueError):
        GenWrightSpec([(1, 0)], [(1, 1)])


def test_gen_wright_radius_value():
    # radius = prod |alpha|^-alpha prod |beta|^beta = 2^-2 * 3^-1 * 4^4 ... for this spec
    s = GenWrightSpec([(1, 2), (1, 3)], [(1, 4)])
    assert s.delta == -1
    assert s.radius == pytest.approx(2.0 ** -2 * 3.0 ** -3 * 4.0 ** 4, rel=1e-14)


def test_gen_wright_three_psi_one_against_mp():
    up = [(0.3, 1), (1.2, 1), (1, 1)]
    lo = [(1.7, 3.5)]
    spec = GenWrightSpec(up, lo)
    for z in (-20.0, -3.0, 2.0, 15.0):
        ref = mp_series(lambda k: mp.gamma(mp.mpf(3) / 10 + k) * mp.gamma(mp.mpf(12) / 10 + k)
                        * mp.rgamma(mp.mpf(17) / 10 + mp.mpf(7) / 2 * k), z, dps=60)
        assert gen_wright(spec, z) == pytest.approx(ref, rel=1e-10)


# Fox H


def test_fox_h_exp():
    spec = FoxHSpec(1, 0, [], [(0.0, 1.0)])
    assert fox_h_contour(spec, 1.0) == pytest.approx(math.exp(-1), rel=1e-10)
    assert fox_h_residues(spec, 2.0) == pytest.approx(math.exp(-2), rel=1e-13)
    z = np.linspace(0.1, 10, 25)
    assert np.allclose(fox_h_contour(spec, z), np.exp(-z), rtol=1e-10, atol=0)


def test_fox_h_spec_indices():
    s = sol1_spec()
    assert (s.m, s.l, s.p, s.q) == (2, 0, 1, 2)
    assert s.rho == pytest.approx(2 - 0.8)
    assert s.nu == pytest.approx(2 - 0.8)
    assert s.gamma_line == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        FoxHSpec(0, 0, [], [(0, 1)])


def test_fox_h_sol1_cross_method():
    s = sol1_spec()
    c = fox_h_contour(s, 1.0)
    r = fox_h_residues(s, 1.0)
    assert abs(c - r) <= 1e-8 * abs(r)


def test_fox_h_convergence_violation():
    # rho = beta_1 - alpha_1 = 1 - 2 < 0
    spec = FoxHSpec(1, 0, [(1.0, 2.0)], [(0.0, 1.0)])
    assert spec.rho < 0
    with pytest.raises(ConvergenceViolation):
        fox_h_contour(spec, 1.0)


def test_fox_h_repeated_poles():
    spec = FoxHSpec(2, 0, [(1.0, 0.5)], [(0.3, 1.0), (0.3, 1.0)])
    with pytest.raises(RepeatedPoles):
        fox_h_residues(spec, 1.0)


def test_fox_h_wright_reduction():
    # H^{1,0}_{1,1}[z | (b, -a); (0, 1)] = W(-z; a, b) for -1 < a < 0
    spec = FoxHSpec(1, 0, [(1.3, 0.4)], [(0.0, 1.0)])
    for z in (0.5, 2.0, 6.0):
        A, B = -mp.mpf(2) / 5, mp.mpf(13) / 10
        ref = mp_series(lambda k: mp.rgamma(B + A * k) / mp.factorial(k), -z, dps=60)
        assert fox_h_contour(spec, z) == pytest.approx(ref, rel=1e-10)


def test_fox_h_decays():
    for spec in (sol1_spec(), sol1_spec(0.7, 0.5, 2.0), FoxHSpec(1, 0, [], [(0.5, 0.8)])):
        assert spec.rho > 0 and spec.nu > 0
        assert abs(fox_h_contour(spec, 100.0)) < abs(fox_h_contour(spec, 10.0))


def random_specs(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        if rng.random() < 0.25:
            out.append(FoxHSpec(1, 0, [], [(rng.uniform(-0.5, 1.5), rng.uniform(0.5, 2.0))]))
            continue
        A = rng.uniform(0.2, 1.6)
        B1, B2 = rng.uniform(0.5, 1.5, 2)
        if B1 + B2 - A < 0.3:
            continue
        b1, b2 = rng.uniform(-0.9, 1.0, 2)
        if abs(b1 / B1 - b2 / B2) < 0.05:
            continue
        out.append(FoxHSpec(2, 0, [(rng.uniform(0.3, 2.0), A)], [(b1, B1), (b2, B2)]))
    return out


def test_fox_h_random_cross_method():
    for spec in random_specs(8, 11):
        for z in (0.5, 2.0):
            c = fox_h_contour(spec, z)
            r = fox_h_residues(spec, z)
            assert abs(c - r) <= 1e-8 * abs(r), (spec, z, c, r)
