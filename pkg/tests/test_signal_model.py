import math

import pytest
from hypothesis import given, strategies as st

from wiretap_adc.signal_model import (ChannelParams, EveStrategy, PowerModulation, bob_effective,
                                      eve_effective, snr_to_noise_var, solve_gains)


def test_solve_gains_examples():
    assert solve_gains(0.5, 1.0) == pytest.approx((1.0, 1.0))
    a1, a2 = solve_gains(0.5, 1e3)
    assert a1 == pytest.approx(1.4142129, abs=1e-7)
    assert a2 == pytest.approx(0.0014142, abs=1e-7)
    a1, a2 = solve_gains(0.45, 1e3)
    assert a1 == pytest.approx(1.4907115, abs=1e-6)
    assert a2 == pytest.approx(0.0014907, abs=1e-7)


@pytest.mark.parametrize("p, r", [(0.0, 10), (1.0, 10), (-0.1, 10), (0.5, 0.99), (0.5, math.inf),
                                  (math.nan, 10)])
def test_solve_gains_rejects(p, r):
    with pytest.raises(ValueError):
        solve_gains(p, r)


@given(st.floats(1e-3, 1 - 1e-3), st.floats(1.0, 1e7))
def test_power_constraint_and_ratio(p, r):
    mod = PowerModulation(p, r)
    assert mod.second_moment() == pytest.approx(1.0, rel=1e-12)
    assert mod.a1 / mod.a2 == pytest.approx(r, rel=1e-12)


@given(st.floats(0.01, 0.99), st.floats(1.0, 1e6))
def test_larger_ratio_shrinks_small_gain(p, r):
    m1, m2 = PowerModulation(p, r), PowerModulation(p, 2 * r)
    assert m2.a1 / m2.a2 > m1.a1 / m1.a2
    assert m2.a2 < m1.a2


def test_branches():
    mod = PowerModulation(0.3, 10)
    (a1, w1), (a2, w2) = mod.branches
    assert (w1, w2) == (0.3, 0.7) and a1 == mod.a1 and a2 == mod.a2


def test_channel_params_validation_and_snr():
    assert snr_to_noise_var(math.inf) == 0.0
    assert snr_to_noise_var(30, 2.0) == pytest.approx(2e-3)
    p = ChannelParams.from_snr_db(1.0, 50, 100)
    assert p.sigma2_bob == pytest.approx(1e-5) and p.sigma2_eve == pytest.approx(1e-10)
    for bad in (dict(power=0), dict(power=-1), dict(sigma2_bob=-1), dict(sigma2_eve=math.nan)):
        with pytest.raises(ValueError):
            ChannelParams(**bad)


def test_effective_observations():
    assert bob_effective(2.0, ChannelParams(1, 4, 0)).noise_var == 1.0
    bob = bob_effective(0.0014142, ChannelParams(1, 1, 0))
    assert bob.noise_var == pytest.approx(5.0e5, rel=1e-3)
    assert bob_effective(1.0, ChannelParams()).noise_var == 0.0
    assert eve_effective(1, 1, ChannelParams()).variance == 1.0
    e = eve_effective(1.414, 0.001414, ChannelParams())
    assert e.std == pytest.approx(1000.0)
    params = ChannelParams(1.0, 0.3, 0.3)
    assert eve_effective(0.7, 0.7, params) == bob_effective(0.7, params)
    with pytest.raises(ValueError):
        bob_effective(0.0, params)
    with pytest.raises(ValueError):
        eve_effective(1.0, -1.0, params)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 10))
def test_eve_depends_on_ratios_only(a, g, s2):
    e1 = eve_effective(a, g, ChannelParams(1.0, 0.0, s2))
    e2 = eve_effective(a / g, 1.0, ChannelParams(1.0, 0.0, s2 / g**2))
    assert e1.signal_gain == pytest.approx(e2.signal_gain, rel=1e-12)
    assert e1.noise_var == pytest.approx(e2.noise_var, rel=1e-12, abs=1e-300)


def test_eve_strategy():
    s = EveStrategy.point(0.5)
    assert s.is_point_mass and s.gains == (0.5,)
    m = EveStrategy((0.1, 1.0), (0.25, 0.75))
    assert not m.is_point_mass
    assert EveStrategy((0.1, 1.0), (0.0, 1.0)).is_point_mass
    for gains, weights in [((), ()), ((1.0,), (0.5,)), ((0.0,), (1.0,)), ((1.0, 2.0), (1.0,)),
                           ((1.0, 2.0), (1.5, -0.5))]:
        with pytest.raises(ValueError):
            EveStrategy(gains, weights)
