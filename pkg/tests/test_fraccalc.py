import math

import numpy as np
import pytest
from scipy import integrate

from fractel.fraccalc import FracOrder, FracPowerSeries, rl_numeric, rl_power_rule, rl_series
from fractel.specfun import mittag_leffler


def test_frac_order_ceiling():
    assert FracOrder(0.5).n == 1
    assert FracOrder(1.0).n == 1
    assert FracOrder(1.5).n == 2
    assert FracOrder(2.0, 2).n == 2
    with pytest.raises(ValueError):
        FracOrder(1.5, 1)
    for bad in (0.0, -0.3, math.inf):
        with pytest.raises(ValueError):
            FracOrder(bad)


def test_power_rule_examples():
    assert rl_power_rule(FracOrder(1), 2) == pytest.approx((2.0, 1.0))
    c, e = rl_power_rule(FracOrder(0.5), 0)
    assert c == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15) and e == -0.5
    c, e = rl_power_rule(FracOrder(0.5), 1)
    assert c == pytest.approx(1.1283791671, rel=1e-10) and e == 0.5


def test_power_rule_against_defining_integral():
    # D^a t^mu = d/dt I^(1-a) t^mu; I^(1-a) t^mu = B(mu+1, 1-a)/Gamma(1-a) t^(mu+1-a)
    a, mu, t = 0.5, 1.0, 1.3

    def frac_integral(tt):
        v, _ = integrate.quad(lambda s: (tt - s) ** (-a) * s ** mu, 0, tt, weight=None, limit=200)
        return v / math.gamma(1 - a)

    h = 1e-4
    num = (frac_integral(t + h) - frac_integral(t - h)) / (2 * h)
    c, e = rl_power_rule(FracOrder(a), mu)
    assert num == pytest.approx(c * t ** e, rel=1e-7)


def test_power_rule_pole_and_domain():
    # D^a t^(a-1) = 0 for 0 < a < 1
    assert rl_power_rule(FracOrder(0.4), -0.6)[0] == 0.0
    # D^a t^(a-2) = 0 for 1 < a < 2
    assert rl_power_rule(FracOrder(1.5), -0.5)[0] == 0.0
    with pytest.raises(ValueError):
        rl_power_rule(FracOrder(0.5), -1.0)


def test_series_normalisation():
    s = FracPowerSeries(((1.0, 0.5), (2.0, 0.0), (3.0, 0.5), (0.0, 1.0)))
    assert s.terms == ((2.0, 0.0), (4.0, 0.5))
    assert FracPowerSeries(((1.0, 1.0), (-1.0, 1.0))).terms == ()


def test_rl_series_examples():
    a = 0.6
    o = FracOrder(a)
    out = rl_series(o, FracPowerSeries.power(1.0, a))
    assert len(out) == 1
    c, e = out.terms[0]
    assert c == pytest.approx(math.gamma(a + 1)) and e == pytest.approx(0.0)
    assert rl_series(o, FracPowerSeries()).terms == ()


def test_rl_series_drops_homogeneous_term():
    a, c1, c2 = 0.5, 1.7, -0.8
    o = FracOrder(a)
    s = FracPowerSeries(((c1, a - 1), (c2, 2 * a - 1)))
    out = rl_series(o, s)
    assert len(out) == 1
    c, e = out.terms[0]
    assert e == pytest.approx(a - 1)
    assert c == pytest.approx(c2 * math.gamma(2 * a) / math.gamma(a), rel=1e-14)
    t = 0.7
    num = rl_numeric(o, lambda x: c2 * x ** (2 * a - 1), t, 1 / 256, gamma=0.0)
    assert num == pytest.approx(out(t), rel=1e-4)


def test_rl_series_linear():
    rng = np.random.default_rng(5)
    o = FracOrder(0.7)
    for _ in range(20):
        e1 = rng.uniform(-0.9, 3, 4)
        e2 = rng.uniform(-0.9, 3, 4)
        s1 = FracPowerSeries(tuple(zip(rng.normal(size=4), e1)))
        s2 = FracPowerSeries(tuple(zip(rng.normal(size=4), e2)))
        a, b = rng.normal(size=2)
        lhs = rl_series(o, a * s1 + b * s2)
        rhs = a * rl_series(o, s1) + b * rl_series(o, s2)
        assert np.allclose(lhs.exponents, rhs.exponents)
        assert np.allclose(lhs.coeffs, rhs.coeffs, rtol=1e-13, atol=1e-15)


def test_semigroup_on_powers():
    rng = np.random.default_rng(6)
    for _ in range(30):
        a, b = rng.uniform(0.05, 0.95, 2)
        mu = rng.uniform(a + b - 0.9, 3)
        c1, e1 = rl_power_rule(FracOrder(b), mu)
        c2, e2 = rl_power_rule(FracOrder(a), e1)
        c, e = rl_power_rule(FracOrder(a + b), mu)
        assert e2 == pytest.approx(e)
        assert c1 * c2 == pytest.approx(c, rel=1e-13)


def test_rl_numeric_examples():
    o = FracOrder(0.5)
    assert rl_numeric(o, lambda s: np.ones_like(s), 1.0, 1 / 64) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)
    assert rl_numeric(o, lambda s: s, 1.0, 1 / 256) == pytest.approx(1.1283791671, abs=1e-4)
    # D^(1/2) e^t = t^(-1/2) E_{1,1/2}(t); the L1 error here is about 1.5e-4 at h = 1/256
    ref = mittag_leffler(1.0, 0.5, 1.0)
    e1, e2 = (abs(rl_numeric(o, np.exp, 1.0, h) - ref) for h in (1 / 128, 1 / 256))
    assert e2 <= 3e-4
    assert math.log2(e1 / e2) >= 1.4


def test_rl_numeric_vector_and_tuple_samples():
    o = FracOrder(0.3)
    t = np.array([0.4, 1.0, 2.0])
    a, b = rl_numeric(o, lambda s: (s, 2 * s), t, 1 / 128)
    assert a.shape == (3,)
    assert np.allclose(b, 2 * a, rtol=1e-14)
    c, e = rl_power_rule(o, 1.0)
    assert np.allclose(a, c * t ** e, rtol=1e-4)


def test_rl_numeric_rejects():
    with pytest.raises(ValueError):
        rl_numeric(FracOrder(1.5), np.exp, 1.0, 0.01)
    with pytest.raises(ValueError):
        rl_numeric(FracOrder(0.5), np.exp, 0.0, 0.01)
    with pytest.raises(ValueError):
        rl_numeric(FracOrder(0.5), np.exp, 1.0, 0.01, gamma=-1.0)


def test_rl_numeric_singular_leading_power():
    # f = t^mu (1 + t) with mu in (-1, 0), declared leading power mu
    o = FracOrder(0.5)
    mu = -0.4
    ref = sum(rl_power_rule(o, m)[0] for m in (mu, mu + 1))
    assert rl_numeric(o, lambda s: s ** mu * (1 + s), 1.0, 1 / 256, gamma=mu) == pytest.approx(ref, rel=1e-4)


def _draw(rng):
    a = rng.uniform(0.05, 0.95)
    mu = rng.uniform(-0.5, 3.0)
    if mu < 0:
        def f(s):
            return s ** mu * (1 + s)
        ref = rl_power_rule(FracOrder(a), mu)[0] + rl_power_rule(FracOrder(a), mu + 1)[0]
        return a, mu, f, ref, mu
    return a, mu, (lambda s: s ** mu), rl_power_rule(FracOrder(a), mu)[0], 0.0


def test_rl_numeric_convergence_order():
    # observed order over h, h/2, h/4 stays near the theoretical 2 - alpha
    rng = np.random.default_rng(2024)
    for _ in range(50):
        a, mu, f, ref, g = _draw(rng)
        errs = [abs(rl_numeric(FracOrder(a), f, 1.0, h, gamma=g) - ref) for h in (1 / 32, 1 / 64, 1 / 128)]
        if max(errs) <= 1e-12 * abs(ref):
            continue  # the declared power law alone is exact
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert orders.min() >= 0.9 * (2 - a), (a, mu, errs)
        assert errs[-1] <= 1e-2 * (1 + abs(ref))
