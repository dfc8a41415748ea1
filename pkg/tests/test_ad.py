import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from currentgpd import ad
from currentgpd.ad import Dual


finite = st.floats(min_value=-10, max_value=10, allow_nan=False)


@given(finite, finite, finite, finite)
def test_product_rule(a, da, b, db):
    x = Dual(a, da)
    y = Dual(b, db)
    z = x * y
    assert z.re == pytest.approx(a * b)
    assert z.ep == pytest.approx(a * db + b * da)


@given(finite, finite)
def test_sin_cos_derivative(a, da):
    x = Dual(a, da)
    s = ad.sin(x)
    c = ad.cos(x)
    assert s.re == pytest.approx(math.sin(a))
    assert s.ep == pytest.approx(math.cos(a) * da)
    assert c.ep == pytest.approx(-math.sin(a) * da)


def test_division():
    x = Dual(3.0, 1.0)
    y = 1.0 / x
    assert y.re == pytest.approx(1.0 / 3.0)
    assert y.ep == pytest.approx(-1.0 / 9.0)
    z = Dual(2.0, 0.5) / Dual(4.0, -1.0)
    assert z.re == pytest.approx(0.5)
    # quotient rule: (0.5*4 - 2*(-1)) / 16
    assert z.ep == pytest.approx((0.5 * 4.0 + 2.0) / 16.0)


def test_nested_second_derivative():
    # f(t) = sin(t)**2, f''(t) = 2 cos(2t)
    t0 = 0.37
    t = Dual(Dual(t0, 1.0), Dual(1.0, 0.0))
    f = ad.sin(t) ** 2
    assert ad.value(f) == pytest.approx(math.sin(t0) ** 2)
    assert f.ep.ep == pytest.approx(2 * math.cos(2 * t0))


def test_atan2_gradient_matches_fd():
    def fn(xs):
        return [ad.atan2(xs[1], xs[0])]

    xs = [0.8, -0.4]
    J = ad.jacobian(fn, xs)
    Jfd = ad.fd_jacobian(fn, xs, 1e-6)
    assert np.allclose(J, Jfd, atol=1e-8)


def test_jacobian_of_polar_map():
    def fn(xs):
        r, th = xs
        return [r * ad.cos(th), r * ad.sin(th)]

    r0, th0 = 1.3, 0.6
    J = ad.jacobian(fn, [r0, th0])
    expected = np.array(
        [
            [math.cos(th0), -r0 * math.sin(th0)],
            [math.sin(th0), r0 * math.cos(th0)],
        ]
    )
    assert np.allclose(J, expected, atol=1e-14)


def test_array_coefficients_branch_through_numpy():
    xs = np.linspace(0.0, 1.0, 7)
    d = Dual(xs, np.ones_like(xs))
    out = ad.sin(d) * d
    assert np.allclose(out.re, np.sin(xs) * xs)
    assert np.allclose(out.ep, np.cos(xs) * xs + np.sin(xs))


def test_numpy_does_not_absorb_duals():
    d = np.float64(2.0) * Dual(3.0, 1.0)
    assert isinstance(d, Dual)
    assert d.re == pytest.approx(6.0)


def test_sqrt_and_log_chain():
    x = Dual(2.0, 1.0)
    y = ad.log(ad.sqrt(x))
    assert y.re == pytest.approx(0.5 * math.log(2.0))
    assert y.ep == pytest.approx(0.5 / 2.0)
