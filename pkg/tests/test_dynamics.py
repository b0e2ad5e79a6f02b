import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixed_autonomy.dynamics import B_EMERGENCY, AvLimits, IdmParams, accel_toward_stop_line, ballistic_step, idm_accel

P = IdmParams()

# Reference values from a 30-digit evaluation of the IDM formula with the
# default parameters (v0=13, T=1, s0=2.5, a=2.6, b=4.5, delta=4).
REFERENCE = [
    ((10.0, 10.0, 20.0), 0.674042728720983158852981338189),
    ((10.0, 5.0, 15.0), -2.84460774985766741979402303015),
    ((5.0, 10.0, 30.0), 2.50038168406191703095029345139),
    ((8.0, 8.0, 200.0), 2.21996165168411470186618115612),
    ((12.0, 0.0, 40.0), -1.34127386756041936365082054938),
]


@pytest.mark.parametrize("args,expected", REFERENCE)
def test_idm_reference_values(args, expected):
    assert idm_accel(*args, P) == pytest.approx(expected, abs=1e-12)


def test_free_road_limits():
    assert idm_accel(0.0, 0.0, math.inf, P) == pytest.approx(2.6)
    assert idm_accel(13.0, 0.0, math.inf, P) == pytest.approx(0.0)


def test_emergency_clamp_and_noise_clamp():
    assert idm_accel(10.0, 0.0, 1.0, P) == -B_EMERGENCY
    # noise cannot push beyond a_max
    assert idm_accel(0.0, 0.0, math.inf, P, noise=5.0) == P.a_max
    assert idm_accel(5.0, 5.0, 50.0, P, noise=-0.3) == pytest.approx(idm_accel(5.0, 5.0, 50.0, P) - 0.3)


def test_stop_line_response_takes_the_minimum():
    free = idm_accel(10.0, 0.0, math.inf, P)
    stop = accel_toward_stop_line(10.0, 30.0, P)
    assert stop == pytest.approx(idm_accel(10.0, 0.0, 30.0, P))
    assert accel_toward_stop_line(10.0, 30.0, P, leader_accel=free) == pytest.approx(min(free, stop))


def test_av_action_table():
    assert AvLimits().actions == (1.5, 0.0, -3.5)
    with pytest.raises(ValueError):
        AvLimits(c_accel=0)


@pytest.mark.parametrize("kw", [{"T": 0}, {"s0": -1}, {"noise_sigma": -0.1}, {"delta_exp": 0.5}])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        IdmParams(**kw)


def test_ballistic_examples():
    assert ballistic_step(0.0, 10.0, 2.0, 0.5, 13.0) == pytest.approx((5.25, 11.0))
    # speed clips at zero; displacement uses the clipped speed
    assert ballistic_step(0.0, 1.0, -9.0, 0.5, 13.0) == pytest.approx((0.25, 0.0))
    assert ballistic_step(0.0, 12.5, 2.6, 0.5, 13.0) == pytest.approx((6.375, 13.0))


@given(
    v=st.floats(0, 13),
    v_lead=st.floats(0, 13),
    gap=st.floats(0.01, 500),
    noise=st.floats(-2, 2),
)
def test_idm_bounded(v, v_lead, gap, noise):
    a = idm_accel(v, v_lead, gap, P, noise)
    assert -B_EMERGENCY <= a <= P.a_max


@given(v=st.floats(0, 13), gap=st.floats(0.5, 200), dv=st.floats(0, 5))
def test_idm_monotone(v, gap, dv):
    # more room or a faster leader never asks for a harder brake
    base = idm_accel(v, 5.0, gap, P)
    assert idm_accel(v, 5.0, gap + dv, P) >= base - 1e-12
    assert idm_accel(v, 5.0 + dv, gap, P) >= base - 1e-12


@given(x=st.floats(0, 1000), v=st.floats(0, 13), a=st.floats(-9, 2.6), dt=st.floats(0.05, 1.0))
def test_ballistic_invariants(x, v, a, dt):
    x1, v1 = ballistic_step(x, v, a, dt, 13.0)
    assert 0.0 <= v1 <= 13.0
    assert x1 >= x
    assert x1 - x <= 13.0 * dt + 1e-9
