import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kontra.errors import NonIntegrable
from kontra.symbolic import (
    ExactIntegral,
    GaussianPolynomial,
    MomentPairing,
    Polynomial,
    PolynomialSyntaxError,
    as_rational,
    differentiate,
    differentiate_multi,
    format_polynomial,
    integrate_derivative_check,
    integrate_gaussian,
    parse_polynomial,
    random_test_polynomial,
)

P = parse_polynomial


def GP(text, c, d):
    return GaussianPolynomial(P(text, d), c)


def poly_strategy(d, degree=4):
    exps = st.tuples(*[st.integers(0, degree)] * d).filter(lambda e: sum(e) <= degree)
    return st.dictionaries(exps, st.integers(-5, 5).filter(bool), max_size=6).map(lambda t: Polynomial(d, t))


rates = st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(2), Fraction(1, 8), Fraction(9, 4)])


def gamma_oracle(p: Polynomial, c) -> float:
    """Float integral from the Gamma-function moment formula, coordinate by coordinate."""
    c = float(c)
    total = 0.0
    for e, coef in p.terms.items():
        v = float(coef)
        for m in e:
            if m % 2:
                v = 0.0
                break
            v *= math.gamma((m + 1) / 2) / c ** ((m + 1) / 2)
        total += v
    return total


# --------------------------------------------------------------------------
# polynomial arithmetic


def test_parse_and_format_round_trip():
    p = P("3/2*x1^2*x2 - x3 + 4", 3)
    assert p.terms == {(2, 1, 0): Fraction(3, 2), (0, 0, 1): -1, (0, 0, 0): 4}
    assert P(format_polynomial(p), 3) == p
    assert P("x1**2", 1) == P("x1^2", 1)
    assert P("0", 2).is_zero()


@pytest.mark.parametrize("bad", ["x0", "x1^", "2*y1", "x1 +", "x4"])
def test_parse_rejects(bad):
    with pytest.raises(PolynomialSyntaxError):
        P(bad, 3)


def test_floats_rejected():
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        GaussianPolynomial(P("x1", 1), 0.5)
    assert P("1.5*x1", 1) == P("3/2*x1", 1)


@settings(max_examples=60, deadline=None)
@given(poly_strategy(3), poly_strategy(3), poly_strategy(3))
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()


@settings(max_examples=60, deadline=None)
@given(poly_strategy(2), poly_strategy(2), st.integers(-3, 3), st.integers(-3, 3))
def test_evaluation_is_a_homomorphism(a, b, x, y):
    pt = (Fraction(x), Fraction(y))
    assert (a * b).evaluate(pt) == a.evaluate(pt) * b.evaluate(pt)
    assert (a + b).evaluate(pt) == a.evaluate(pt) + b.evaluate(pt)


# --------------------------------------------------------------------------
# derivatives


def test_differentiate_examples():
    assert differentiate(GP("x1^2*x2", 0, 2), 1) == GP("2*x1*x2", 0, 2)
    assert differentiate(GP("1", "1/2", 3), 1) == GP("-x1", "1/2", 3)


@settings(max_examples=60, deadline=None)
@given(poly_strategy(3), rates, st.integers(1, 3), st.integers(1, 3))
def test_mixed_partials_commute(p, c, i, j):
    h = GaussianPolynomial(p, c)
    assert differentiate(differentiate(h, i), j) == differentiate(differentiate(h, j), i)


@settings(max_examples=60, deadline=None)
@given(poly_strategy(2), poly_strategy(2), rates, rates, st.integers(1, 2))
def test_linearity_and_leibniz(p, q, c1, c2, i):
    f, g = GaussianPolynomial(p, c1), GaussianPolynomial(q, c2)
    assert differentiate(f * g, i) == differentiate(f, i) * g + f * differentiate(g, i)
    f2 = GaussianPolynomial(q, c1)
    assert differentiate(f + f2, i) == differentiate(f, i) + differentiate(f2, i)
    assert differentiate(f * 3, i) == differentiate(f, i) * 3


def test_derivative_matches_finite_difference():
    h = GP("x1^3*x2 - 2*x2^2 + 1", "3/4", 2)
    dh = differentiate(h, 2)
    x = (0.3, -0.7)

    def val(g, pt):
        poly = sum(float(c) * pt[0] ** e[0] * pt[1] ** e[1] for e, c in g.p.terms.items())
        return poly * math.exp(-float(g.c) * (pt[0] ** 2 + pt[1] ** 2))

    eps = 1e-6
    fd = (val(h, (x[0], x[1] + eps)) - val(h, (x[0], x[1] - eps))) / (2 * eps)
    assert fd == pytest.approx(val(dh, x), rel=1e-7)


# --------------------------------------------------------------------------
# Gaussian integrals


def test_integral_examples():
    assert integrate_gaussian(GP("x1^2", 1, 1)) == ExactIntegral(Fraction(1, 2), Fraction(1, 2))
    assert integrate_gaussian(GP("1", 1, 3)) == ExactIntegral(1, Fraction(3, 2))
    assert integrate_gaussian(GP("x1^3 - 2*x1", 1, 1)).is_zero()


def test_integral_irrational_scale():
    # integral of e^{-2 x^2} over R is sqrt(pi/2) = (1/2) sqrt(2) sqrt(pi)
    v = integrate_gaussian(GP("1", 2, 1))
    assert v == ExactIntegral(Fraction(1, 2), Fraction(1, 2), 2)
    assert float(v) == pytest.approx(math.sqrt(math.pi / 2))


def test_c_zero_not_integrable():
    with pytest.raises(NonIntegrable):
        integrate_gaussian(GP("x1", 0, 1))


def test_quadrature_oracle_two_dims():
    h = GP("x1^2*x2^2 + 3*x1^4 - x2 + 1/3", "1/2", 2)
    num, _ = integrate.dblquad(
        lambda y, x: (x * x * y * y + 3 * x**4 - y + 1 / 3) * math.exp(-(x * x + y * y) / 2),
        -12, 12, -12, 12, epsabs=1e-12,
    )
    assert float(integrate_gaussian(h)) == pytest.approx(num, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(poly_strategy(3, 6), rates)
def test_integral_matches_gamma_oracle(p, c):
    h = GaussianPolynomial(p, c)
    expected = gamma_oracle(p, c)
    got = float(integrate_gaussian(h)) if not p.is_zero() else 0.0
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(poly_strategy(3), poly_strategy(3), rates)
def test_integral_is_linear(p, q, c):
    a, b = GaussianPolynomial(p, c), GaussianPolynomial(q, c)
    assert integrate_gaussian(a + b) == integrate_gaussian(a) + integrate_gaussian(b)


def test_derivative_integrals_vanish_examples():
    assert integrate_derivative_check(GP("x1", 1, 3), 1).is_zero()
    assert integrate_derivative_check(GP("x1^3*x2^2", 2, 2), 2).is_zero()


def test_hundred_random_derivative_integrals_vanish():
    rng = random.Random(2024)
    for _ in range(100):
        d = rng.randint(1, 4)
        h = GaussianPolynomial(random_test_polynomial(rng, d, 6), rng.choice(["1/2", "1", "3/2", "2"]))
        i = rng.randint(1, d)
        assert integrate_derivative_check(h, i).is_zero()


@settings(max_examples=60, deadline=None)
@given(poly_strategy(3), poly_strategy(3), rates, rates)
def test_moment_pairing_matches_direct_integral(p, q, c1, c2):
    f = GaussianPolynomial(p, c1)
    pairing = MomentPairing(f, c2)
    expected = integrate_gaussian(f * GaussianPolynomial(q, c2)) if not (p * q).is_zero() else ExactIntegral.zero()
    assert pairing.integrate(q) == expected


def test_differentiate_multi_order_free():
    h = GP("x1^2*x2*x3 + x2^3", "1/2", 3)
    assert differentiate_multi(h, (1, 2, 3)) == differentiate_multi(h, (3, 1, 2))


def test_exact_integral_normalizes_radicand():
    assert ExactIntegral(1, 0, 8) == ExactIntegral(2, 0, 2)
    assert ExactIntegral(0, 1, 3) == ExactIntegral.zero()
    with pytest.raises(ValueError):
        ExactIntegral(1, 0, 2) + ExactIntegral(1, 0, 3)
