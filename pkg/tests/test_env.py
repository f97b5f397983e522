import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtuav.compute import LOCAL
from dtuav.config import ScenarioConfig
from dtuav.env import OffloadEnv, RewardConfig, observation_size, rollout


def test_observation_size_formula():
    env = OffloadEnv(ScenarioConfig(M=6, K=10, Q=15))
    assert observation_size(6, 10, 15) == 78
    assert env.reset().shape == (78,)
    assert env.n_actions == 27


def test_reset_is_deterministic_and_full_budgets(small_cfg):
    a, b = OffloadEnv(small_cfg), OffloadEnv(small_cfg)
    assert np.array_equal(a.reset(3), b.reset(3))
    assert np.all(a.state.budget_mtu == small_cfg.budget_mtu)
    assert np.all(a.state.budget_device == small_cfg.budget_device)
    assert a.state.budget_uav == small_cfg.budget_uav


def test_episode_length_and_done(small_cfg):
    env = OffloadEnv(small_cfg)
    steps = rollout(env, lambda e, o: 0)
    assert len(steps) == small_cfg.M * small_cfg.N
    assert env.done
    with pytest.raises(RuntimeError):
        env.step(0)


def test_malformed_action(small_cfg):
    env = OffloadEnv(small_cfg)
    env.reset()
    for bad in (-1, env.n_actions, 1.5):
        with pytest.raises(ValueError):
            env.step(bad)


def test_all_local_reward_is_minus_compute_energy():
    cfg = ScenarioConfig(M=2, K=3, Q=4, fhp_rows=2, fhp_cols=2, N=4, deviation_mode="none")
    env = OffloadEnv(cfg)
    env.reset()
    done = False
    while not done:
        task = env.state.task
        _, r, done, info = env.step(0)
        f = task.data_bits * task.cycles_per_bit / task.deadline
        energy = cfg.kappa_mtu * f ** 2 * task.cycles_per_bit * task.data_bits
        assert info.violations == 0
        assert r * env.reward_cfg.scale == pytest.approx(-energy, rel=1e-9)


def test_penalty_arithmetic(small_cfg):
    env = OffloadEnv(small_cfg, reward=RewardConfig(penalty=50.0, scale=1.0))
    env.reset()
    # a relayed 150 Mbit task through a distant UAV at the deadline floor is late
    env.state.tasks[0][0] = type(env.state.task)(small_cfg.data_bits_max, small_cfg.cycles_per_bit, 1e-3)
    _, r, _, info = env.step(1)
    assert info.late
    assert r == pytest.approx(-(info.energy + 50.0 * info.violations))


def test_observation_range_and_corner(small_cfg):
    env = OffloadEnv(small_cfg)
    obs = env.reset()
    assert np.all((obs >= 0) & (obs <= 1))
    kin = env.state.kinematics[0]
    env.state.kinematics[0] = type(kin)(type(kin.location)(0.0, small_cfg.region_y), kin.v, kin.theta)
    obs = env.encode_observation()
    m = small_cfg.M
    assert (obs[m], obs[m + 1]) == (0.0, 1.0)
    assert np.array_equal(obs, env.encode_observation())


def test_max_task_normalizes_to_one(small_cfg):
    env = OffloadEnv(small_cfg)
    env.reset()
    env.state.tasks[0][0] = type(env.state.task)(small_cfg.data_bits_max, small_cfg.cycles_per_bit, small_cfg.T_max)
    obs = env.encode_observation()
    assert obs[small_cfg.M + 4] == 1.0 and obs[small_cfg.M + 6] == 1.0


def test_uav_moves_and_pays_for_flight(small_cfg):
    env = OffloadEnv(small_cfg)
    env.reset()
    target = (env.state.uav_fhp + 1) % small_cfg.Q
    _, _, _, info = env.step(small_cfg.K + 2 + target)
    assert env.state.uav_fhp == target
    assert info.outcome.uav_fly_energy > 0


@settings(max_examples=15)
@given(st.lists(st.integers(0, 8), min_size=10, max_size=10), st.integers(0, 50))
def test_reward_reconstructs_energy(actions, seed):
    cfg = ScenarioConfig(M=2, K=3, Q=4, fhp_rows=2, fhp_cols=2, N=5, seed=seed)
    env = OffloadEnv(cfg)
    env.reset()
    for a in actions:
        _, r, _, info = env.step(a)
        recon = -r * env.reward_cfg.scale - env.reward_cfg.penalty * info.violations
        assert recon == pytest.approx(info.energy, rel=1e-9, abs=1e-9)
        assert math.isfinite(recon)


def test_budgets_never_increase(small_cfg):
    env = OffloadEnv(small_cfg)
    env.reset()
    rng = np.random.default_rng(0)
    prev = (env.state.budget_mtu.copy(), env.state.budget_device.copy(), env.state.budget_uav)
    while not env.done:
        env.step(int(rng.integers(env.n_actions)))
        cur = (env.state.budget_mtu, env.state.budget_device, env.state.budget_uav)
        assert np.all(cur[0] <= prev[0]) and np.all(cur[1] <= prev[1]) and cur[2] <= prev[2]
        prev = (cur[0].copy(), cur[1].copy(), cur[2])


def test_without_twin_planner_sees_no_deviation(small_cfg):
    env = OffloadEnv(small_cfg.replace(deviation_mode="positive"), use_dt=False)
    env.reset()
    assert all(p.f_dev == 0 for p in env.plan_profiles[0])
    assert all(p.f_dev > 0 for p in env.true_profiles[0])
    _, _, _, info = env.step(0)
    assert info.record.decision.kind == LOCAL


def test_trace_file(tmp_path, small_cfg):
    env = OffloadEnv(small_cfg)
    rollout(env, lambda e, o: 0)
    env.write_trace(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "episode,slot,mtu,action,latency,energy,violation"
    assert len(lines) == 1 + small_cfg.M * small_cfg.N
