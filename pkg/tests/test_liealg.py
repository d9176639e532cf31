from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from fractel.liealg import (
    TABLE1,
    Poly,
    PolyVectorField,
    abelian_check,
    basis,
    commutator,
    express,
    jacobi,
    optimal_representatives,
    verify_table,
    x_generators,
)


def random_field(rng, degree=2):
    comps = {}
    for v in ("y", "t", "U", "V"):
        terms = {}
        for _ in range(3):
            m = tuple(int(k) for k in rng.integers(0, degree + 1, 4))
            if sum(m) <= degree:
                terms[m] = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
        comps[v] = Poly(terms)
    return PolyVectorField.of(**comps)


def test_examples():
    V = basis(Fraction(1, 2))
    assert commutator(V["V1"], V["V2"]) == V["V2"]
    assert commutator(V["V3"], V["V4"]).is_zero()
    rng = np.random.default_rng(0)
    for _ in range(10):
        A = random_field(rng)
        assert commutator(A, A).is_zero()


def test_exact_rationals():
    V = basis(0.1)
    assert V["V1"].components[1] == Poly.var("t", -10)
    assert V["V1"].components[1].terms[(0, 1, 0, 0)] == Fraction(-10)


@pytest.mark.parametrize("alpha", [0.5, 1.5, 2, Fraction(1, 3)])
def test_table_matches(alpha):
    check = verify_table(alpha)
    assert check.passed and check.mismatch is None
    assert check.entries[(1, 2)] == "V2" and check.entries[(2, 1)] == "-V2"
    zeros = [k for k in product(range(1, 5), repeat=2) if k not in TABLE1]
    assert all(check.entries[k] == "0" for k in zeros)
    assert "V1" in check.render()


def test_negated_v2_fails_at_first_entry():
    fields = basis(0.5)
    fields["V2"] = -fields["V2"]
    check = verify_table(0.5, fields)
    assert not check.passed
    assert check.mismatch == (1, 2)


def test_jacobi_and_closure():
    V = list(basis(Fraction(2, 3)).values())
    for A, B, C in product(V, repeat=3):
        assert jacobi(A, B, C).is_zero()
    for A, B in product(V, repeat=2):
        assert express(commutator(A, B), V) is not None


def test_random_jacobi():
    rng = np.random.default_rng(1)
    for _ in range(10):
        A, B, C = (random_field(rng) for _ in range(3))
        assert jacobi(A, B, C).is_zero()


def test_bilinear_antisymmetric():
    rng = np.random.default_rng(2)
    for _ in range(10):
        A, B, C = (random_field(rng) for _ in range(3))
        a, b = Fraction(int(rng.integers(-9, 10)), 7), Fraction(int(rng.integers(-9, 10)), 5)
        assert commutator(A.scale(a) + B.scale(b), C) == commutator(A, C).scale(a) + commutator(B, C).scale(b)
        assert commutator(A, B) == -commutator(B, A)


def test_express_outside_span():
    V = list(basis(0.5).values())
    assert express(PolyVectorField.of(t=Poly.const(1)), V) is None
    assert express(V[0].scale(3) - V[3], V) == (3, 0, 0, -1)


def test_generator_images():
    X = x_generators(0.5)
    V = basis(0.5)
    assert X["X2"] == X["X4"] == -V["V1"]
    assert X["X3"] == X["X5"] == -V["V2"]
    assert X["X1"] == V["V3"] and X["X6"] == V["V4"]
    assert abelian_check("CaseII") and abelian_check("CaseIII")


def test_representatives():
    ii = optimal_representatives("CaseII")
    assert [r.label for r in ii] == ["W1", "W2"]
    assert ii[1].combination == "X2 + a X1"
    assert [r.label for r in optimal_representatives("CaseIII")] == ["W1", "W3"]
    iv = {r.label: r for r in optimal_representatives("CaseIV")}
    assert list(iv) == ["W1", "W4", "W5", "W6"]
    assert iv["W6"].x_form == "a1 X1 + X6" and not iv["W6"].invariant_solutions
    assert "no invariant solutions" in iv["W6"].note
    assert iv["W4"].combination == "V1 - a1 V3 - a2 V4"
    assert "(0, 0)" in iv["W5"].parameters
    with pytest.raises(ValueError):
        optimal_representatives("CaseI")
