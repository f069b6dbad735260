import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracorder.kernel import (
    bound_constants,
    bounds_hold,
    check_bounds,
    eval_kernel,
    kernel_derivatives,
)


def test_lambda_one_is_s_independent():
    k = eval_kernel(1.0, 2.0, 0.7)
    assert k.value == pytest.approx(0.1353352832, rel=1e-9)
    assert (k.d1, k.d2, k.d3) == (0.0, 0.0, 0.0)


def test_lambda_zero():
    k = eval_kernel(0.0, 5.0, 1.3)
    assert (k.value, k.d1, k.d2, k.d3) == (1.0, 0.0, 0.0, 0.0)


def test_lambda_four_half_order():
    k = eval_kernel(4.0, 1.0, 0.5)
    assert k.value == pytest.approx(math.exp(-2), rel=1e-14)
    assert k.d1 == pytest.approx(-2 * math.exp(-2) * math.log(4), rel=1e-14)
    assert k.d1 == pytest.approx(-0.3752, abs=5e-5)
    h = 1e-5
    fd = (eval_kernel(4.0, 1.0, 0.5 + h, 0).value - eval_kernel(4.0, 1.0, 0.5 - h, 0).value) / (2 * h)
    assert fd == pytest.approx(k.d1, rel=1e-8)


def test_order_truncation_reports_nan():
    k = eval_kernel(3.0, 1.0, 1.0, order=1)
    assert math.isnan(k.d2) and math.isnan(k.d3)


@pytest.mark.parametrize("lam, t, s", [
    (-1.0, 1.0, 1.0), (1.0, -0.1, 1.0), (1.0, 1.0, 0.0), (np.inf, 1.0, 1.0), (1.0, np.nan, 1.0),
])
def test_invalid_arguments(lam, t, s):
    with pytest.raises(ValueError):
        eval_kernel(lam, t, s)


def test_underflow_guard_gives_zeros_not_nan():
    out = kernel_derivatives(1e6, 10.0, 4.0)
    assert np.all(out == 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 100), st.floats(1e-3, 10), st.floats(0.05, 4))
def test_finite_difference_consistency(lam, t, s):
    h = 1e-6
    p = kernel_derivatives(lam, t, s + h, 2)
    m = kernel_derivatives(lam, t, s - h, 2)
    c = kernel_derivatives(lam, t, s, 3)
    for k in (1, 2, 3):
        fd = (p[k - 1] - m[k - 1]) / (2 * h)
        assert abs(fd - c[k]) <= max(1e-7, 1e-5 * abs(c[k]))


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0001, 100), st.floats(1e-3, 10), st.floats(0.05, 4))
def test_sign_above_one(lam, t, s):
    k = eval_kernel(lam, t, s, 1)
    assert k.d1 <= 0
    assert 0 <= k.value <= 1


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 0.9999), st.floats(1e-3, 10), st.floats(0.05, 4))
def test_sign_below_one(lam, t, s):
    assert eval_kernel(lam, t, s, 1).d1 > 0


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 100), st.floats(1e-3, 10), st.floats(0.05, 4))
def test_log_substitution_identity(lam, t, s):
    r = lam ** s * t
    k = eval_kernel(lam, t, s, 1)
    alt = -r * math.exp(-r) * (math.log(r) - math.log(t)) / s
    # the substituted form loses digits to ln r - ln t when lambda is near 1
    scale = r * math.exp(-r) * (abs(math.log(r)) + abs(math.log(t)) + 1.0) / s
    assert abs(k.d1 - alt) <= 1e-12 * max(abs(alt), scale)


def test_bound_constants_known_values():
    c = bound_constants()
    assert c.M2 == pytest.approx(1 / math.e, rel=1e-10)
    # M4 = sup 4 r e^{-r} |r - 1|, attained where r^2 - 3r + 1 = 0
    r = (3 + math.sqrt(5)) / 2
    assert c.M4 == pytest.approx(4 * r * math.exp(-r) * (r - 1), rel=1e-10)
    rr = np.geomspace(1e-12, 1e3, 400_001)
    assert c.M1 == pytest.approx(np.max(rr * np.exp(-rr) * np.abs(np.log(rr))), rel=1e-8)
    assert c.Chat0 == 1.0
    assert c.Chat1 == pytest.approx(c.M1 + c.M2)
    assert c.Chat2 == pytest.approx(c.M3 + c.M4)
    assert c.Chat3 == pytest.approx(c.M5 + c.M6)
    assert bound_constants() is c


@pytest.mark.parametrize("lam, t, s", [(1.0, 1.0, 1.0), (math.e, 1.0, 1.0), (50.0, 0.01, 0.05)])
def test_check_bounds_examples(lam, t, s):
    assert check_bounds(lam, t, s)


def test_bound_hand_evaluation_at_e():
    d1 = eval_kernel(math.e, 1.0, 1.0).d1
    assert abs(d1) == pytest.approx(math.e * math.exp(-math.e))
    assert abs(d1) <= bound_constants().Chat1


def test_check_bounds_rejects_t_zero():
    with pytest.raises(ValueError):
        check_bounds(2.0, 0.0, 1.0)


def test_bounds_vectorized_random(rng):
    lam = rng.uniform(0, 100, 5000)
    t = 10 * (1 - rng.random(5000))
    s = 0.05 + 3.95 * (1 - rng.random(5000))
    assert bounds_hold(lam, t, s).all()
