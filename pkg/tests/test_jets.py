import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvcheck import jets as J
from curvcheck.errors import JetDomainError, JetOrderError, SingularJetError
from curvcheck.jets import Jet, jet_arith, jet_elementary, jet_partial, jet_variable

from conftest import rel_err, richardson_partial


def poly_jet(rng, dim, order, integers=False, batch=()):
    sp = J.jet_space(dim, order)
    if integers:
        coeffs = rng.integers(-3, 4, size=batch + (sp.ncoeff,)).astype(float)
    else:
        coeffs = rng.standard_normal(batch + (sp.ncoeff,))
    return Jet(sp, coeffs)


# -- seeds and basic contracts ------------------------------------------------


def test_variable_seed_nonzero_base():
    x = jet_variable([2.0, 0.0, 0.0, 0.0], 0, 4, 2)
    assert x.value == 2.0
    assert x.partial((1, 0, 0, 0)) == 1.0
    assert np.count_nonzero(x.coeffs) == 2


def test_variable_seed_axis3():
    x = jet_variable([0.0, 0.0, 0.0, 0.0], 3, 4, 1)
    assert x.value == 0.0
    assert x.partial((0, 0, 0, 1)) == 1.0


def test_variable_axis_out_of_range():
    with pytest.raises(JetOrderError):
        jet_variable([0.0] * 4, 5, 4, 2)
    with pytest.raises(JetOrderError):
        jet_variable([0.0] * 4, 0, 7, 2)
    with pytest.raises(JetOrderError):
        jet_variable([0.0] * 4, 0, 4, 9)


def test_square_at_two():
    x = jet_variable([2.0], 0, 1, 2)
    sq = jet_arith("mul", x, x)
    # value 4, first derivative 4, second derivative 2 stored as 2/2! = 1
    assert np.allclose(sq.coeffs, [4.0, 4.0, 1.0])


def test_sin_cos_product_series():
    # sin(x)cos(x) = sin(2x)/2 = x - (2/3)x^3 + ...
    x = jet_variable([0.0], 0, 1, 3)
    p = J.jsin(x) * J.jcos(x)
    assert np.allclose(p.coeffs, [0.0, 1.0, 0.0, -2.0 / 3.0], atol=1e-15)


def test_self_division_is_identity():
    a = jet_variable([3.0], 0, 1, 4) ** 2 + 1.5
    one = jet_arith("div", a, a)
    expect = np.zeros(a.space.ncoeff)
    expect[0] = 1.0
    assert np.allclose(one.coeffs, expect, atol=1e-14)


def test_division_by_zero_value():
    x = jet_variable([0.0], 0, 1, 3)
    with pytest.raises(SingularJetError):
        jet_arith("div", x + 1.0, x)


def test_elementary_trivial_cases():
    zero = Jet.constant(0.0, 2, 3)
    assert np.allclose(jet_elementary("exp", zero).coeffs[..., 0], 1.0)
    assert np.count_nonzero(jet_elementary("exp", zero).coeffs[..., 1:]) == 0
    four = Jet.constant(4.0, 2, 3)
    assert np.allclose(jet_elementary("sqrt", four).value, 2.0)


def test_cos_maclaurin():
    x = jet_variable([0.0], 0, 1, 4)
    c = jet_elementary("cos", x)
    assert np.allclose(c.coeffs, [1.0, 0.0, -0.5, 0.0, 1.0 / 24.0], atol=1e-15)


def test_elementary_domain_errors():
    x = jet_variable([0.0], 0, 1, 2)
    with pytest.raises(JetDomainError):
        jet_elementary("log", x)
    with pytest.raises(JetDomainError):
        jet_elementary("sqrt", x - 1.0)
    with pytest.raises(JetDomainError):
        jet_elementary("tan", x + math.pi / 2)
    with pytest.raises(JetDomainError):
        jet_elementary("pow_const", x - 2.0, exponent=0.5)


def test_pow_const_matches_int_pow():
    a = jet_variable([1.7], 0, 1, 4) + 0.3
    via_series = jet_elementary("pow_const", a, exponent=3.0)
    direct = a * a * a
    assert rel_err(via_series.coeffs, direct.coeffs) < 1e-13


def test_partial_contract():
    c = Jet.constant(2.5, 4, 2)
    assert jet_partial(c, (0, 0, 0, 0)) == 2.5
    x = jet_variable([0.0] * 4, 0, 4, 2)
    assert jet_partial(x * x, (2, 0, 0, 0)) == 2.0
    with pytest.raises(JetOrderError):
        jet_partial(x, (2, 1, 0, 0))  # order above jet order


def test_partial_sin_of_sum():
    b = np.zeros(4)
    s = J.jsin(jet_variable(b, 0, 4, 3) + jet_variable(b, 1, 4, 3))
    assert abs(jet_partial(s, (1, 1, 0, 0))) < 1e-15
    assert abs(jet_partial(s, (1, 0, 0, 0)) - 1.0) < 1e-15


def test_truncation_is_total_order():
    # the mixed 4th derivative survives at order 4 in 4 variables
    b = np.zeros(4)
    xs = [jet_variable(b, i, 4, 4) for i in range(4)]
    f = xs[0] * xs[1] * xs[2] * xs[3]
    assert jet_partial(f, (1, 1, 1, 1)) == 1.0


def test_batched_evaluation_matches_scalar():
    base = np.array([[0.3, 0.1, 0.0, 0.0], [1.2, -0.4, 0.0, 0.0]])
    x = jet_variable(base, 0, 4, 3)
    y = jet_variable(base, 1, 4, 3)
    f = J.jexp(x * y) / (1.0 + x * x)
    for row in range(2):
        xr = jet_variable(base[row], 0, 4, 3)
        yr = jet_variable(base[row], 1, 4, 3)
        fr = J.jexp(xr * yr) / (1.0 + xr * xr)
        assert np.allclose(f.coeffs[row], fr.coeffs, atol=1e-15)


# -- algebraic properties -----------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(0, 4))
def test_mul_commutes_and_associates(seed, dim, order):
    rng = np.random.default_rng(seed)
    a = poly_jet(rng, dim, order)
    b = poly_jet(rng, dim, order)
    c = poly_jet(rng, dim, order)
    assert rel_err((a * b).coeffs, (b * a).coeffs) < 1e-13
    assert rel_err(((a * b) * c).coeffs, (a * (b * c)).coeffs) < 1e-13
    assert rel_err((a + b).coeffs, (b + a).coeffs) < 1e-13


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(0, 4))
def test_reciprocal_inverts(seed, dim, order):
    rng = np.random.default_rng(seed)
    a = poly_jet(rng, dim, order)
    coeffs = a.coeffs.copy()
    coeffs[..., 0] = 2.0 + abs(coeffs[..., 0])  # keep the value part away from 0
    a = Jet(a.space, coeffs)
    one = a * (1.0 / a)
    expect = np.zeros(a.space.ncoeff)
    expect[0] = 1.0
    assert rel_err(one.coeffs, expect) < 1e-12


def leibniz_sum(a, b, gamma):
    """Finite Leibniz expansion of d^gamma (a*b) from stored partials."""
    dim = a.dim
    total = 0.0
    ranges = [range(g + 1) for g in gamma]
    import itertools

    for alpha in itertools.product(*ranges):
        beta = tuple(g - al for g, al in zip(gamma, alpha))
        comb = math.prod(math.comb(g, al) for g, al in zip(gamma, alpha))
        total += comb * a.partial(alpha) * b.partial(beta)
    return total


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_leibniz_integer_exact(seed):
    rng = np.random.default_rng(seed)
    a = poly_jet(rng, 4, 3, integers=True)
    b = poly_jet(rng, 4, 3, integers=True)
    p = a * b
    for gamma in [(1, 0, 0, 0), (1, 1, 0, 0), (0, 2, 1, 0), (3, 0, 0, 0)]:
        assert p.partial(gamma) == leibniz_sum(a, b, gamma)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_leibniz_float(seed):
    rng = np.random.default_rng(seed)
    a = poly_jet(rng, 3, 4)
    b = poly_jet(rng, 3, 4)
    p = a * b
    for gamma in [(2, 1, 0), (1, 1, 1), (0, 0, 4)]:
        assert rel_err(p.partial(gamma), leibniz_sum(a, b, gamma)) < 1e-12


# -- consistency with finite differences --------------------------------------


def _random_smooth(rng, dim):
    """A random smooth closed-form expression and its jet evaluator."""
    c = rng.uniform(-0.8, 0.8, size=dim)
    d = rng.uniform(-0.5, 0.5, size=dim)
    shift = rng.uniform(1.5, 2.5)
    mode = rng.integers(0, 4)

    def f_float(x):
        u = float(np.dot(c, x))
        v = float(np.dot(d, x))
        if mode == 0:
            return math.sin(u) * math.exp(v)
        if mode == 1:
            return math.cos(u + v * v) / (shift + u * u)
        if mode == 2:
            return math.log(shift + u * u + v * v)
        return math.sqrt(shift + math.tanh(u) + 0.5 * math.sin(v))

    def f_jet(base, order):
        xs = [jet_variable(base, i, dim, order) for i in range(dim)]
        u = sum((ci * xi for ci, xi in zip(c, xs)), Jet.constant(0.0, dim, order))
        v = sum((di * xi for di, xi in zip(d, xs)), Jet.constant(0.0, dim, order))
        if mode == 0:
            return J.jsin(u) * J.jexp(v)
        if mode == 1:
            return J.jcos(u + v * v) / (shift + u * u)
        if mode == 2:
            return J.jlog(shift + u * u + v * v)
        return J.jsqrt(shift + J.jtanh(u) + 0.5 * J.jsin(v))

    return f_float, f_jet


def test_jet_partials_match_richardson_fd(rng):
    exponent_sets = [
        (1, 0, 0, 0),
        (0, 1, 0, 0),
        (2, 0, 0, 0),
        (1, 1, 0, 0),
        (1, 0, 2, 0),
        (0, 1, 1, 1),
    ]
    for _ in range(50):
        f_float, f_jet = _random_smooth(rng, 4)
        x0 = rng.uniform(-0.3, 0.3, size=4)
        jet = f_jet(x0, 3)
        for exps in exponent_sets:
            if sum(exps) > 3:
                continue
            fd = richardson_partial(f_float, x0, exps, h=1e-3)
            assert rel_err(jet.partial(exps), fd) < 1e-6


# -- derivative / restriction helpers -----------------------------------------


def test_derivative_shifts_coefficients():
    x = jet_variable([0.5], 0, 1, 4)
    f = J.jexp(x)
    df = f.derivative(0)
    assert df.order == 3
    # d/dx exp = exp: compare against the truncated jet itself
    assert rel_err(df.coeffs, f.truncate(3).coeffs) < 1e-13


def test_restrict_face_gives_normal_derivative():
    base = np.zeros(4)
    x0 = jet_variable(base, 0, 4, 3)
    x1 = jet_variable(base, 1, 4, 3)
    f = x0 * x0 * x1
    r = f.restrict_face(2)  # second normal derivative: 2*x1
    assert r.dim == 3 and r.order == 1
    assert abs(r.partial((1, 0, 0)) - 2.0) < 1e-15


def test_mixed_order_ops_truncate():
    a = jet_variable([0.2], 0, 1, 4)
    b = jet_variable([0.2], 0, 1, 2)
    p = a * b
    assert p.order == 2
