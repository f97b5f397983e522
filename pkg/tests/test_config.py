import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtuav.config import (ConfigError, Location, NodeProfile, ScenarioConfig, build_world, derive_rng,
                          dump_config, generate_tasks, load_config, node_profiles, parse_config_text,
                          sample_deviations)


def test_table_values_accepted():
    cfg = parse_config_text("B = 100e6\nbeta0_db = -30\n")
    assert cfg.B == 100e6
    assert cfg.beta0 == pytest.approx(1e-3, rel=1e-12)


def test_noise_converted_from_dbm():
    assert ScenarioConfig(noise_dbm=-60).sigma2 == pytest.approx(1e-9, rel=1e-12)


def test_slot_split_overflow_rejected():
    with pytest.raises(ConfigError, match="slot_share"):
        ScenarioConfig(M=6, tau=9.0, slot_share=2.0)


def test_zero_actual_frequency_rejected():
    with pytest.raises(ConfigError, match="actual frequency"):
        NodeProfile(0, Location(0, 0), 1e9, 1e9, 2e9, 1e-26, 1.0, 1.0)
    with pytest.raises(ConfigError, match="deviation_delta"):
        ScenarioConfig(deviation_delta=1.0)


def test_unknown_key_and_bad_value_name_the_field():
    with pytest.raises(ConfigError, match="unknown key 'bogus'"):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError, match="^K"):
        parse_config_text("K = ten")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("just words")


def test_comments_and_blank_lines(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# scenario\n\nM = 4  # users\nseed = 7\n", encoding="utf-8")
    cfg = load_config(p)
    assert (cfg.M, cfg.seed) == (4, 7)
    assert load_config(p, seed=9).seed == 9


def test_round_trip(tmp_path):
    cfg = ScenarioConfig(M=3, K=4, noise_dbm=-70.5, device_coords="", seed=11, literal_eq7=True)
    p = tmp_path / "c.txt"
    p.write_text(dump_config(cfg), encoding="utf-8")
    assert load_config(p) == cfg


def test_seed_determinism_of_tasks():
    cfg = ScenarioConfig(seed=42)
    a = generate_tasks(cfg, derive_rng(42, "tasks", 0))
    b = generate_tasks(cfg, derive_rng(42, "tasks", 0))
    assert a == b


def test_task_ranges_and_deadlines():
    cfg = ScenarioConfig(data_bits_min=50e6, data_bits_max=150e6)
    tasks = [t for row in generate_tasks(cfg, derive_rng(0, "t")) for t in row]
    D = np.array([t.data_bits for t in tasks])
    T = np.array([t.deadline for t in tasks])
    assert D.min() >= 50e6 and D.max() <= 150e6
    assert T.max() <= cfg.tau / cfg.M and T.min() > 0.5 * cfg.tau / cfg.M
    assert len(tasks) == cfg.M * cfg.N


def test_deadline_above_share_rejected():
    with pytest.raises(ConfigError, match="deadline_max"):
        ScenarioConfig(deadline_max=2.0)


def test_fhp_grid_at_altitude():
    cfg = ScenarioConfig(Q=15, fhp_rows=3, fhp_cols=5, H=500.0)
    world = build_world(cfg)
    assert len(world.fhps) == 15
    assert all(f.z == 500.0 for f in world.fhps)
    assert all(0 < f.x < cfg.region_x and 0 < f.y < cfg.region_y for f in world.fhps)


def test_single_fhp_at_centre():
    world = build_world(ScenarioConfig(Q=1, fhp_rows=1, fhp_cols=1))
    assert (world.fhps[0].x, world.fhps[0].y) == (200.0, 200.0)


def test_duplicate_devices_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        ScenarioConfig(K=2, device_coords="1:1,1:1")


def test_bs_outside_region_and_world_is_pure():
    cfg = ScenarioConfig(seed=5)
    w1, w2 = build_world(cfg), build_world(cfg)
    assert w1 == w2
    assert not (0 <= w1.bs.x <= cfg.region_x and 0 <= w1.bs.y <= cfg.region_y)
    with pytest.raises(ConfigError, match="BS"):
        build_world(ScenarioConfig(bs_x=100.0, bs_y=100.0))


def test_region_too_small_for_grid():
    with pytest.raises(ConfigError, match="too small"):
        build_world(ScenarioConfig(region_x=2.0, region_y=2.0, Q=15))


def test_location_below_ground_rejected():
    with pytest.raises(ConfigError):
        Location(0, 0, -1)


def test_deviation_modes():
    f = np.full(5, 6e9)
    assert np.all(sample_deviations(ScenarioConfig(deviation_mode="positive", deviation_delta=0.05), f, None)
                  == 0.05 * 6e9)
    assert np.all(sample_deviations(ScenarioConfig(deviation_mode="none"), f, None) == 0)
    d = sample_deviations(ScenarioConfig(deviation_delta=0.1), f, derive_rng(0, "d"))
    assert np.all(np.abs(d) <= 0.1 * 6e9)


def test_profiles_respect_node_invariants():
    cfg = ScenarioConfig(seed=1)
    mtus, devices, uav = node_profiles(cfg, build_world(cfg))
    assert len(mtus) == cfg.M and len(devices) == cfg.K
    assert all(p.f_dev == 0 and p.f_est <= p.f_max for p in (*mtus, *devices, uav))


@given(st.integers(0, 2**32 - 1), st.text(min_size=1, max_size=8))
def test_derived_streams_are_reproducible(seed, key):
    assert derive_rng(seed, key, 3).random() == derive_rng(seed, key, 3).random()


@given(st.integers(1, 8), st.floats(1.0, 20.0))
def test_deadlines_within_share(M, tau):
    cfg = ScenarioConfig(M=M, tau=tau, N=3)
    tasks = generate_tasks(cfg, derive_rng(0, "tasks"))
    assert all(0 < t.deadline <= tau / M * (1 + 1e-12) for row in tasks for t in row)
    assert math.isclose(cfg.t_m * M, tau)
