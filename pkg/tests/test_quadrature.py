import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sci

from wiretap_adc.quadrature import QuadratureError, cumulative, integrate, integrate_segments


def test_polynomial_exact():
    v, err = integrate(lambda x: 3 * x**2 + 1, 0.0, 2.0)
    assert v == pytest.approx(10.0, abs=1e-13)


@pytest.mark.parametrize("func, a, b, pts", [
    (lambda x: np.exp(-x * x), -5.0, 5.0, ()),
    (lambda x: np.abs(x - 0.3), -1.0, 1.0, (0.3,)),
    (lambda x: np.sqrt(np.abs(x)), 0.0, 1.0, ()),
    (lambda x: np.where(x > 0, -x * np.log(np.where(x > 0, x, 1.0)), 0.0), 0.0, 1.0, ()),
    (lambda x: np.sin(40 * x) ** 2, 0.0, 3.0, ()),
])
def test_against_scipy_quad(func, a, b, pts):
    ref, _ = sci.quad(lambda t: float(func(np.array([t]))[0]), a, b, points=pts or None,
                      limit=500, epsabs=1e-12)
    v, err = integrate(func, a, b, points=pts, tol=1e-10)
    assert v == pytest.approx(ref, abs=1e-9)


def test_reversed_and_empty():
    f = lambda x: x
    assert integrate(f, 1.0, 0.0)[0] == pytest.approx(-0.5)
    assert integrate(f, 1.0, 1.0) == (0.0, 0.0)


def test_segments_batch_and_per_segment_tol():
    lo = np.array([0.0, 0.0, 1.0])
    hi = np.array([1.0, 2.0, 1.0])
    scale = np.array([1.0, 2.0, 5.0])
    v, e = integrate_segments(lambda x, k: scale[k] * x, lo, hi, tol=np.full(3, 1e-10))
    assert v == pytest.approx([0.5, 4.0, 0.0])
    with pytest.raises(ValueError):
        integrate_segments(lambda x, k: x, [1.0], [0.0])


def test_cumulative_unsorted_and_below_lower():
    x = np.array([2.0, -1.0, 0.5, 1.0])
    F, _ = cumulative(lambda t: np.ones_like(t), x, 0.0)
    assert F == pytest.approx([2.0, 0.0, 0.5, 1.0])


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: 1.0 / (x - 0.5) * np.where(x == x, np.inf, 0), 0.0, 1.0)


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureError) as info:
        integrate_segments(lambda x, k: np.sin(1 / np.maximum(x, 1e-300)), [0.0], [1.0], tol=1e-15,
                           max_panels=64)
    assert info.value.residual >= 0


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 3), st.floats(0.05, 2))
def test_gaussian_interval_matches_erf(c, w, s):
    a, b = c - w, c + w
    v, _ = integrate(lambda x: np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi)), a, b,
                     tol=1e-11)
    ref = 0.5 * (math.erf(b / (s * math.sqrt(2))) - math.erf(a / (s * math.sqrt(2))))
    assert v == pytest.approx(ref, abs=1e-10)
