import pytest
from hypothesis import given, strategies as st

from dtuav.compute import (DEVICE, LOCAL, RELAY, UAV, Allocation, InfeasibleError, OffloadDecision,
                           actual_compute_time, compute_energy, estimated_time, evaluate_mode, latency_gap,
                           transmit_outcome, uav_fly_energy, uav_hover_energy)
from dtuav.config import Location, TaskSpec
from dtuav.oracles import dt_latency_identity
from dtuav.radio import LinkBudget

from conftest import make_context


def test_estimated_time():
    assert estimated_time(1e6, 1000, 1e9) == 1.0
    assert estimated_time(1e6, 1000, 2e9) == 0.5
    assert estimated_time(0.0, 1000, 1e9) == 0.0


def test_latency_gap_values():
    assert latency_gap(1e6, 1000, 1e9, 0.0) == 0.0
    assert latency_gap(1e6, 1000, 1e9, 1e8) == pytest.approx(1 / 9, rel=1e-12)
    assert latency_gap(1e6, 1000, 1e9, -1e8) < 0
    with pytest.raises(InfeasibleError):
        latency_gap(1e6, 1000, 1e9, 1e9)


def test_actual_time_and_energy():
    assert actual_compute_time(1e6, 1000, 1e9, 1e8) == pytest.approx(10 / 9, rel=1e-12)
    assert actual_compute_time(1e6, 1000, 1e9, 0.0) == 1.0
    assert compute_energy(1e6, 1000, 1e9, 0.0, 1e-26) == pytest.approx(10.0, rel=1e-12)
    assert compute_energy(1e6, 1000, 1e9, 0.5e9, 1e-26) == pytest.approx(2.5, rel=1e-12)
    assert compute_energy(2e6, 1000, 1e9, 0.0, 1e-26) == pytest.approx(20.0, rel=1e-12)


def test_transmit_outcome():
    link = LinkBudget(1.0, 1e-7)
    t, e = transmit_outcome(1e6, 1e-6, link, 1e8, 1e-13)
    assert t == pytest.approx(0.01) and e == pytest.approx(1e-8)
    with pytest.raises(InfeasibleError):
        transmit_outcome(1e6, 0.0, link, 1e8, 1e-13)


def test_uav_energies():
    a = Location(0, 0, 500)
    assert uav_fly_energy(a, a, 0.11, 20) == 0.0
    assert uav_fly_energy(a, Location(100, 0, 500), 0.11, 20) == pytest.approx(0.55)
    assert uav_hover_energy((0.2, 0.3), 0.08) == pytest.approx(0.04)
    assert uav_hover_energy(0.0, 0.08) == 0.0


@given(st.integers(0, 26))
def test_action_round_trip(a):
    assert OffloadDecision.from_action(a, 10, 15).to_action(10) == a


def test_action_layout():
    assert OffloadDecision.from_action(0, 10, 15).kind == LOCAL
    assert OffloadDecision.from_action(1, 10, 15).kind == RELAY
    assert OffloadDecision.from_action(11, 10, 15) == OffloadDecision(DEVICE, 9)
    assert OffloadDecision.from_action(12, 10, 15) == OffloadDecision(UAV, 0)
    with pytest.raises(ValueError):
        OffloadDecision.from_action(27, 10, 15)


def test_local_mode():
    ctx = make_context()
    task = TaskSpec(1e6, 1000, 2.0)
    out = evaluate_mode(OffloadDecision(LOCAL), task, Allocation(f_local=1e9), ctx)
    assert out.total_latency == pytest.approx(1.0)
    assert out.total_energy == pytest.approx(10.0)
    assert out.uav_energy == 0.0


def test_device_mode_sums_sub_operations():
    ctx = make_context(device_devs=(1e8,))
    task = TaskSpec(1e6, 1000, 2.0)
    alloc = Allocation(p_device=0.5, f_device=2e9)
    out = evaluate_mode(OffloadDecision(DEVICE, 0), task, alloc, ctx)
    link = LinkBudget.between(ctx.mtu_location, ctx.devices[0].location, ctx.phy.beta0)
    t_tx, e_tx = transmit_outcome(1e6, 0.5, link, ctx.phy.B, ctx.phy.sigma2)
    assert out.total_latency == pytest.approx(t_tx + actual_compute_time(1e6, 1000, 2e9, 1e8))
    assert out.total_energy == pytest.approx(e_tx + compute_energy(1e6, 1000, 2e9, 1e8, 1e-26))
    assert out.device_energy == out.server_energy


def test_uav_mode_charges_flight_and_hover():
    ctx = make_context()
    task = TaskSpec(1e6, 1000, 2.0)
    out = evaluate_mode(OffloadDecision(UAV, 1), task, Allocation(p_uav=1.0, f_uav=5e9), ctx)
    assert out.uav_fly_energy == pytest.approx(0.11 * 200 / 20)
    assert out.uav_hover_energy == pytest.approx(0.08 * out.total_latency)
    assert out.uav_energy == pytest.approx(out.server_energy + out.uav_fly_energy + out.uav_hover_energy)


def test_relay_chain_at_unit_snr():
    # both hops at SNR 1 with B=1e8 and D=1e6 take 0.01 s each
    mtu = Location(0.0, 0.0)
    hover = Location(0.0, 0.0, 100.0)
    bs = Location(0.0, 1000.0, 100.0)
    ctx = make_context(mtu_loc=mtu, fhps=(hover,), sigma2=1e-13)
    ctx = type(ctx)(mtu, ctx.mtu, ctx.devices, ctx.uav, hover, (hover,), bs, ctx.phy)
    g1, g2 = 1e-3 / 100 ** 2, 1e-3 / 1000 ** 2
    alloc = Allocation(p_uav=1e-13 / g1, p_bs=1e-13 / g2)
    out = evaluate_mode(OffloadDecision(RELAY), TaskSpec(1e6, 1000, 1.0), alloc, ctx)
    assert out.transmit_time == pytest.approx(0.02, rel=1e-9)
    assert out.compute_time == 0.0
    assert out.uav_hover_energy == pytest.approx(0.08 * 0.02)


def test_gap_identity_oracle():
    res = dt_latency_identity(n=2000)
    assert res.passed, res.detail


@given(st.floats(1e5, 1e8), st.floats(10, 2000), st.floats(1e8, 1e10), st.floats(-0.5, 0.9))
def test_gap_matches_time_difference(D, C, f, frac):
    dev = frac * f
    expected = D * C / (f - dev) - D * C / f
    assert latency_gap(D, C, f, dev) == pytest.approx(expected, rel=1e-9, abs=1e-12 * D * C / f)
    assert (latency_gap(D, C, f, dev) < 0) == (dev < 0)
