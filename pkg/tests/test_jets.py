import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from benenti import jets
from benenti.errors import OrderExhaustedError, SingularInputError
from benenti.jets import (
    Jet,
    absolute,
    differentiate,
    multi_indices,
    partial,
    seed_coordinates,
    truncate,
)


def test_multi_index_counts():
    # C(nvars + order, order) indices, graded so truncation is a prefix
    assert len(multi_indices(1, 2)) == 3
    assert len(multi_indices(3, 4)) == 35
    assert len(multi_indices(2, 4)) == 15
    assert multi_indices(2, 2)[:3] == [(0, 0), (1, 0), (0, 1)]
    lo = multi_indices(3, 2)
    hi = multi_indices(3, 4)
    assert hi[: len(lo)] == lo


def test_seed_single_coordinate():
    (x,) = seed_coordinates([3.0], order=2)
    assert x.coefficient((0,)) == 3.0
    assert x.coefficient((1,)) == 1.0
    assert x.coefficient((2,)) == 0.0


def test_seed_two_coordinates():
    x, y = seed_coordinates([2.0, 5.0], order=1)
    assert (x.value, x.coefficient((1, 0)), x.coefficient((0, 1))) == (2.0, 1.0, 0.0)
    assert (y.value, y.coefficient((1, 0)), y.coefficient((0, 1))) == (5.0, 0.0, 1.0)


def test_seed_coefficient_count():
    seeds = seed_coordinates([0.0, 0.0, 0.0], order=4)
    assert len(seeds) == 3
    for s in seeds:
        assert s.coeffs.shape == (35,)


def test_seed_rejects_non_finite():
    with pytest.raises(ValueError):
        seed_coordinates([1.0, float("nan")], order=2)
    with pytest.raises(ValueError):
        seed_coordinates([float("inf")], order=1)


def test_square_of_seed():
    (x,) = seed_coordinates([3.0], order=2)
    f = x * x
    assert f.coefficient((0,)) == 9.0
    assert f.coefficient((1,)) == 6.0
    assert f.coefficient((2,)) == 1.0  # f'' = 2, stored as 2/2!


def test_sqrt_at_four():
    (x,) = seed_coordinates([4.0], order=2)
    f = jets.sqrt(x)
    assert f.value == pytest.approx(2.0, rel=1e-15)
    assert f.coefficient((1,)) == pytest.approx(0.25, rel=1e-15)
    assert f.coefficient((2,)) == pytest.approx(-0.015625, rel=1e-12)


def test_polynomial_two_vars():
    x, y = seed_coordinates([1.0, 2.0], order=2)
    f = x * x * y
    assert f.value == 2.0
    assert f.coefficient((1, 0)) == 4.0
    assert f.coefficient((0, 1)) == 1.0
    assert f.coefficient((1, 1)) == 2.0
    assert f.coefficient((2, 0)) == 2.0


def test_partial_extracts_derivatives():
    x, y = seed_coordinates([1.0, 2.0], order=2)
    f = x * x * y
    assert partial(f, (1, 1)) == pytest.approx(2.0)  # d_x d_y x^2 y = 2x
    assert partial(f, (0, 0)) == f.value
    (x,) = seed_coordinates([0.0], order=3)
    assert partial(jets.sin(x), (3,)) == pytest.approx(-1.0)


def test_partial_past_order_raises():
    (x,) = seed_coordinates([1.0], order=2)
    with pytest.raises(OrderExhaustedError):
        partial(x, (3,))


def test_differentiate():
    (x,) = seed_coordinates([3.0], order=2)
    d = differentiate(x * x, 0)
    assert d.order == 1
    assert d.value == 6.0
    assert d.coefficient((1,)) == 2.0

    c = Jet.constant(7.0, 2, 3)
    dz = differentiate(c, 1)
    assert dz.order == 2
    assert np.all(dz.coeffs == 0.0)

    with pytest.raises(OrderExhaustedError):
        differentiate(Jet.constant(1.0, 1, 0), 0)


def test_mixed_partials_commute():
    rng = np.random.default_rng(7)
    x, y, z = seed_coordinates([0.3, -1.2, 2.0], order=4)
    f = jets.exp(x * 0.3) * jets.sin(y) + z * z * x
    dxy = differentiate(differentiate(f, 0), 1)
    dyx = differentiate(differentiate(f, 1), 0)
    np.testing.assert_array_equal(dxy.coeffs, dyx.coeffs)
    assert rng is not None  # keep the seeded generator pattern uniform


def _random_jet(rng, nvars, order, scale=1.0):
    sp_len = len(multi_indices(nvars, order))
    return Jet(nvars, order, scale * rng.standard_normal(sp_len))


@given(st.integers(0, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_ring_laws(order, nvars, seed):
    rng = np.random.default_rng(seed)
    a = _random_jet(rng, nvars, order)
    b = _random_jet(rng, nvars, order)
    c = _random_jet(rng, nvars, order)
    np.testing.assert_allclose((a + b).coeffs, (b + a).coeffs, rtol=0, atol=0)
    ab = (a * b).coeffs
    ulp4 = 4 * np.spacing(np.max(np.abs(ab)) or 1.0)
    np.testing.assert_allclose(ab, (b * a).coeffs, rtol=9e-16, atol=ulp4)
    lhs = (a * (b * c)).coeffs
    rhs = ((a * b) * c).coeffs
    np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-13)
    lhs = (a * (b + c)).coeffs
    rhs = (a * b + a * c).coeffs
    np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-13)


@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_leibniz_rule(order, nvars, seed):
    rng = np.random.default_rng(seed)
    f = _random_jet(rng, nvars, order)
    g = _random_jet(rng, nvars, order)
    for i in range(nvars):
        lhs = differentiate(f * g, i)
        rhs = differentiate(f, i) * truncate(g, order - 1) + truncate(
            f, order - 1
        ) * differentiate(g, i)
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-12, atol=1e-12)


def test_truncation_consistency():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a4 = _random_jet(rng, 2, 4)
        b4 = _random_jet(rng, 2, 4)
        a2, b2 = truncate(a4, 2), truncate(b4, 2)
        np.testing.assert_allclose(
            truncate(a4 * b4, 2).coeffs, (a2 * b2).coeffs, rtol=1e-13, atol=1e-13
        )
        np.testing.assert_allclose(
            truncate(jets.exp(a4), 2).coeffs, jets.exp(a2).coeffs,
            rtol=1e-12, atol=1e-12,
        )


def test_reciprocal_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(20):
        f = _random_jet(rng, 2, 4)
        f = f + (3.0 if f.value >= 0 else -3.0)  # keep away from 0
        one = f * jets.reciprocal(f)
        expect = np.zeros_like(one.coeffs)
        expect[0] = 1.0
        np.testing.assert_allclose(one.coeffs, expect, rtol=0, atol=1e-12)


def test_division_and_abs_singularities():
    x, y = seed_coordinates([0.0, 1.0], order=2)
    with pytest.raises(SingularInputError) as e:
        y / x
    assert e.value.operation == "div"
    with pytest.raises(SingularInputError):
        jets.sqrt(x - 1.0)
    with pytest.raises(SingularInputError):
        jets.log(x)
    with pytest.raises(SingularInputError):
        jets.power(x + 0.0, 0.5)
    with pytest.raises(SingularInputError):
        absolute(x)


def test_abs_is_signed_identity():
    x, y = seed_coordinates([2.0, -3.0], order=3)
    np.testing.assert_array_equal(absolute(x).coeffs, x.coeffs)
    np.testing.assert_array_equal(absolute(y).coeffs, (-y).coeffs)


def test_integer_power_at_zero():
    (x,) = seed_coordinates([0.0], order=3)
    f = x**3
    assert f.coefficient((3,)) == 1.0
    assert f.value == 0.0
    g = x**0
    assert g.value == 1.0


def test_power_matches_repeated_multiplication():
    rng = np.random.default_rng(5)
    f = _random_jet(rng, 2, 4)
    np.testing.assert_allclose(
        (f**4).coeffs, (f * f * f * f).coeffs, rtol=1e-12, atol=1e-12
    )
    f = f + 5.0
    np.testing.assert_allclose(
        jets.power(f, -2).coeffs,
        jets.reciprocal(f * f).coeffs,
        rtol=1e-11, atol=1e-11,
    )


def test_mismatched_spaces_rejected():
    (a,) = seed_coordinates([1.0], order=2)
    (b,) = seed_coordinates([1.0], order=3)
    with pytest.raises(ValueError):
        a + b
    x2 = seed_coordinates([1.0, 2.0], order=2)[0]
    with pytest.raises(ValueError):
        a * x2


def test_elementary_dispatch():
    (x,) = seed_coordinates([2.0], order=2)
    assert jets.elementary("mul", x, x).value == 4.0
    assert jets.elementary("neg", x).value == -2.0
    assert jets.elementary("ln", x).value == pytest.approx(math.log(2.0))
    with pytest.raises(ValueError):
        jets.elementary("tan", x)


# -- chain rule against central finite differences ---------------------------

_UNARY = {
    "exp": (jets.exp, math.exp, lambda v: True),
    "ln": (jets.log, math.log, lambda v: v > 0.1),
    "sin": (jets.sin, math.sin, lambda v: True),
    "cos": (jets.cos, math.cos, lambda v: True),
    "sqrt": (jets.sqrt, math.sqrt, lambda v: v > 0.1),
    "pow1.7": (
        lambda j: jets.power(j, 1.7),
        lambda v: v**1.7,
        lambda v: v > 0.1,
    ),
    "recip": (jets.reciprocal, lambda v: 1.0 / v, lambda v: abs(v) > 0.2),
}


def _inner(point_jets):
    # fixed smooth inner function with non-trivial mixed structure
    x, y = point_jets
    return 0.3 * x * y + 0.5 * x + 1.7 + 0.1 * y * y


def _inner_real(x, y):
    return 0.3 * x * y + 0.5 * x + 1.7 + 0.1 * y * y


@pytest.mark.parametrize("name", sorted(_UNARY))
def test_chain_rule_vs_finite_differences(name):
    jet_fn, real_fn, ok = _UNARY[name]
    rng = np.random.default_rng(hash(name) % 2**32)
    h = 1e-5
    checked = 0
    while checked < 30:
        p = rng.uniform(-2, 2, size=2)
        base = _inner_real(*p)
        if not ok(base):
            continue
        f = jet_fn(_inner(seed_coordinates(p, order=2)))
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            if not (ok(_inner_real(*(p + e))) and ok(_inner_real(*(p - e)))):
                break
            fd = (
                real_fn(_inner_real(*(p + e))) - real_fn(_inner_real(*(p - e)))
            ) / (2 * h)
            alpha = tuple(1 if v == i else 0 for v in range(2))
            jet_val = partial(f, alpha)
            assert jet_val == pytest.approx(fd, rel=1e-5, abs=1e-8)
        checked += 1
