import math

import pytest
from hypothesis import given, strategies as st

from dtuav.config import Location
from dtuav.radio import LinkBudget, ZeroDistanceError, channel_gain, distance, rate, uav_bs_gain


def test_distances():
    assert distance(Location(0, 0), Location(3, 4)) == 5.0
    assert distance(Location(0, 0), Location(0, 0, 500)) == 500.0
    with pytest.raises(ZeroDistanceError):
        distance(Location(1, 1), Location(1, 1))


def test_gain_values():
    assert channel_gain(100.0, 1e-3) == pytest.approx(1e-7, rel=1e-15)
    assert channel_gain(1.0, 1e-3) == 1e-3
    assert channel_gain(200.0, 1e-3) == pytest.approx(channel_gain(100.0, 1e-3) / 4, rel=1e-15)
    assert channel_gain(0.5, 1e-3) == 1e-3  # 1 m floor


def test_rates():
    assert rate(1.0, 1.0, 1e8, 1.0) == 1e8
    assert rate(0.0, 1e-7, 1e8, 1e-9) == 0.0
    assert rate(3.0, 1.0, 1e8, 1.0) == 2e8
    with pytest.raises(ValueError):
        rate(-1.0, 1.0, 1.0, 1.0)


def test_uav_bs_gain():
    fhp = Location(1000.0, 0.0, 0.0)
    assert uav_bs_gain(fhp, Location(0, 0), 1e-3) == pytest.approx(1e-9, rel=1e-15)
    overhead = uav_bs_gain(Location(5.0, 5.0, 500.0), Location(5.0, 5.0), 1e-3)
    assert overhead == pytest.approx(1e-3 / 500 ** 2)
    near = uav_bs_gain(Location(0.0, 0.0, 500.0), Location(-1200.0, 0.0), 1e-3)
    far = uav_bs_gain(Location(400.0, 0.0, 500.0), Location(-1200.0, 0.0), 1e-3)
    assert far < near


def test_link_budget_between():
    link = LinkBudget.between(Location(0, 0), Location(0, 0, 100), 1e-3)
    assert link.distance == 100.0 and link.gain == pytest.approx(1e-7)
    assert link.rate(1.0, 1e8, 1e-7) == pytest.approx(1e8)


@given(st.floats(1.0, 1e4), st.floats(1e-6, 1.0))
def test_gain_times_square_is_beta0(d, beta0):
    assert channel_gain(d, beta0) * d * d == pytest.approx(beta0, rel=1e-14)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(1e-12, 1e-3))
def test_rate_monotone_in_power(p1, p2, gain):
    lo, hi = sorted((p1, p2))
    assert rate(hi, gain, 1e8, 1e-9) >= rate(lo, gain, 1e8, 1e-9)
    assert math.isfinite(rate(hi, gain, 1e8, 1e-9))
