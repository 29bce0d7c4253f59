from fractions import Fraction
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from d4front import jets
from d4front.exprlang import eval_jet, parse
from d4front.jets import Jet, JetError

u = jets.variable(0, 2)
v = jets.variable(1, 2)


def poly(terms, order=4, nvars=2):
    return Jet.from_dict(nvars, order, {k: Fraction(c) for k, c in terms.items()})


def brute_mul(a: dict, b: dict, order: int) -> dict:
    out = {}
    for (ma, ca), (mb, cb) in itertools.product(a.items(), b.items()):
        m = tuple(x + y for x, y in zip(ma, mb))
        if sum(m) <= order:
            out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c != 0}


coeff = st.integers(-5, 5).map(Fraction)
monomial = st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda m: sum(m) <= 4)
poly_dict = st.dictionaries(monomial, coeff, max_size=8)


# -- add / mul ------------------------------------------------------------


def test_sum_of_variables():
    assert (u + v).terms() == {(1, 0): 1, (0, 1): 1}


def test_add_zero_is_identity():
    a = poly({(2, 0): 1, (0, 3): -2})
    assert (a + jets.constant(0, 2)).terms() == a.terms()


def test_add_matches_normal_form_component():
    a = u * u + 3 * (v * v)
    b = eval_jet(parse("u^2+3*v^2"), (0, 0))
    assert a.terms() == b.terms() == {(2, 0): 1, (0, 2): 3}


def test_mismatched_nvars():
    with pytest.raises(JetError):
        jets.jet_add(u, jets.variable(0, 3))


def test_mismatched_base_point():
    w = jets.variable(0, 2, base_point=(1, 0))
    with pytest.raises(JetError):
        jets.jet_mul(u, w)


def test_products():
    assert (u * v).terms() == {(1, 1): 1}
    assert ((u + v) * (u - v)).terms() == {(2, 0): 1, (0, 2): -1}


def test_truncation():
    a = u * u * v
    assert a.terms() == {(2, 1): 1}
    low = jets.variable(0, 2, 2) * jets.variable(0, 2, 2) * jets.variable(1, 2, 2)
    assert low.terms() == {}


def test_order_is_minimum():
    a = jets.variable(0, 2, 3) + jets.variable(1, 2, 5)
    assert a.order == 3


@given(poly_dict, poly_dict)
@settings(max_examples=150, deadline=None)
def test_mul_matches_brute_force(a, b):
    got = (poly(a) * poly(b)).terms()
    assert got == brute_mul(a, b, 4)


@given(poly_dict, poly_dict, poly_dict)
@settings(max_examples=60, deadline=None)
def test_mul_associative_and_distributive(a, b, c):
    A, B, C = poly(a), poly(b), poly(c)
    assert ((A * B) * C).terms() == (A * (B * C)).terms()
    assert (A * (B + C)).terms() == (A * B + A * C).terms()


def test_float_and_exact_agree():
    a = poly({(0, 0): 2, (1, 0): 1, (1, 1): 3})
    b = poly({(0, 0): 1, (0, 1): -1, (2, 0): 5})
    exact = (a * b).coeffs
    flt = (a.to_float() * b.to_float()).coeffs
    assert np.allclose([float(c) for c in exact], flt)


def test_vectorized_coefficients():
    base = (np.array([0.0, 0.5, 1.0]), np.array([0.0, -1.0, 2.0]))
    a = eval_jet(parse("u*v + v^2"), base, 2)
    b = eval_jet(parse("u*v + v^2"), (0.5, -1.0), 2)
    for ca, cb in zip(a.coeffs, b.coeffs):
        assert np.asarray(ca)[1] == pytest.approx(cb)


# -- recip / sqrt ---------------------------------------------------------


def test_sqrt_binomial_series():
    s = jets.jet_sqrt(4 + 4 * u * u + v * v)
    assert s.truncate(3).terms() == {(0, 0): 2, (2, 0): 1, (0, 2): Fraction(1, 4)}


def test_sqrt_matches_finite_differences():
    e = parse("sqrt(4+4*u^2+v^2)")
    p = (0.3, -0.2)
    J = eval_jet(e, p, 4, exact=False)
    h = 1e-4

    def g(x, y):
        return math.sqrt(4 + 4 * x * x + y * y)

    d_uu = (g(p[0] + h, p[1]) - 2 * g(*p) + g(p[0] - h, p[1])) / h**2
    d_uv = (g(p[0] + h, p[1] + h) - g(p[0] + h, p[1] - h) - g(p[0] - h, p[1] + h) + g(p[0] - h, p[1] - h)) / (4 * h * h)
    assert jets.derivative(J, (2, 0)) == pytest.approx(d_uu, rel=1e-5)
    assert jets.derivative(J, (1, 1)) == pytest.approx(d_uv, rel=1e-5)


def test_recip():
    one = jets.constant(1, 2)
    assert jets.jet_recip(one).terms() == {(0, 0): 1}
    a = 2 + v
    assert (jets.jet_recip(a) * a).terms() == {(0, 0): 1}


def test_recip_zero_constant():
    with pytest.raises(JetError):
        jets.jet_recip(u)


def test_sqrt_nonpositive_constant():
    with pytest.raises(JetError):
        jets.jet_sqrt(u * u)
    with pytest.raises(JetError):
        jets.jet_sqrt(-1 + u)


@given(poly_dict)
@settings(max_examples=80, deadline=None)
def test_sqrt_squares_back(a):
    s = poly(a)
    s = s + (1 - s.value) + 3  # constant term 4
    r = jets.jet_sqrt(s)
    assert (r * r).terms() == s.terms()


def test_exp_sin_cos_maclaurin():
    e = eval_jet(parse("sin(u)"), (0, 0), 4)
    assert e.terms() == {(1, 0): 1, (3, 0): Fraction(-1, 6)}
    c = jets.jet_cos(u)
    s = jets.jet_sin(u)
    assert (c * c + s * s).terms() == {(0, 0): 1}
    x = jets.jet_exp(u)
    assert x.coeff((4, 0)) == Fraction(1, 24)


# -- square-root factorization ---------------------------------------------


def test_sqrt_factor_constructed_square():
    m = 2 * u * u - 6 * v * v
    mu, ambiguous = jets.jet_sqrt_factor(m * m)
    assert ambiguous
    got = mu.terms()
    assert got in ({(2, 0): 2, (0, 2): -6}, {(2, 0): -2, (0, 2): 6})


def test_sqrt_factor_u_squared():
    mu, _ = jets.jet_sqrt_factor(u * u)
    assert mu.terms() in ({(1, 0): 1}, {(1, 0): -1})


def test_sqrt_factor_normal_form_density():
    f = [eval_jet(parse(s), (0, 0), 5) for s in ("u*v", "u^2+3*v^2", "u^2*v+v^3")]
    w = jets.cross(*[tuple(jets.diff(c, i) for c in f) for i in range(2)])
    mu, _ = jets.jet_sqrt_factor(jets.dot(w, w))
    two = mu.homogeneous(2)
    assert two in ({(2, 0): 2, (0, 2): -6}, {(2, 0): -2, (0, 2): 6})


def test_sqrt_factor_rejects_non_square():
    with pytest.raises(JetError):
        jets.jet_sqrt_factor(u * u * u)
    with pytest.raises(JetError):
        jets.jet_sqrt_factor(u * u - v * v)


# -- cross / derivative ---------------------------------------------------


def test_cross_basis_vectors():
    assert jets.cross((1, 0, 0), (0, 1, 0)) == (0, 0, 1)


def test_cross_matches_determinant():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        vecs = [tuple(rng.normal(size=n + 1)) for _ in range(n)]
        x = rng.normal(size=n + 1)
        c = np.array(jets.cross(*vecs))
        assert c @ x == pytest.approx(np.linalg.det(np.column_stack(vecs + [x])))


def test_cross_cuspidal_edge_tangents():
    f = [eval_jet(parse(s), (0, 0), 3) for s in ("u", "v^2", "v^3")]
    w = jets.cross(*[tuple(jets.diff(c, i) for c in f) for i in range(2)])
    assert [c.terms() for c in w] == [{}, {(0, 2): -3}, {(0, 1): 2}]


def test_cross_immersion_in_four_space():
    f = [eval_jet(parse(s), (0, 0, 0), 2) for s in ("u", "v", "0", "t")]
    w = jets.cross(*[tuple(jets.diff(c, i) for c in f) for i in range(3)])
    vals = [c.value for c in w]
    assert vals in ([0, 0, 1, 0], [0, 0, -1, 0])


def test_derivative_values():
    assert jets.derivative(u * u * v, (2, 1)) == 2
    a = poly({(0, 0): 7, (1, 0): 1})
    assert jets.derivative(a, (0, 0)) == 7
    with pytest.raises(JetError):
        jets.derivative(jets.variable(0, 2, 2), (2, 1))


def test_compose_with_curve():
    # a(u, v) = u v along (t, t^2) is t^3
    a = u * v
    t = jets.variable(0, 1, 4)
    g = (t, t * t)
    assert jets.compose(a, g).terms() == {(3,): 1}
