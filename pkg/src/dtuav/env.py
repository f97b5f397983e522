"""Offloading MDP: one sub-step per (slot, MTU) in TDMA order.

The agent picks a placement for the current MTU's task; the environment
sizes powers and frequencies, executes the task against the true CPU
frequencies, moves the UAV if it was chosen, charges budgets and, after the
last MTU of a slot, advances mobility.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .allocation import TaskRecord, allocate_with_outcome, on_time, outcome
from .compute import DEVICE, RELAY, UAV, OffloadDecision, Physics, TaskContext
from .config import (Location, ScenarioConfig, build_world, derive_rng, generate_tasks,
                     node_profiles, sample_deviations)
from .mobility import MobilityConfig, MtuKinematics, advance

TRACE_HEADER = ["episode", "slot", "mtu", "action", "latency", "energy", "violation"]


@dataclass(frozen=True)
class RewardConfig:
    penalty: float = 5000.0  # J-equivalent per violation
    scale: float = 1000.0

    def __post_init__(self):
        if self.penalty <= 0 or self.scale <= 0:
            raise ValueError("penalty and reward scale must be positive")


@dataclass
class EnvState:
    slot: int
    mtu: int
    kinematics: list
    uav_fhp: int
    uav_location: Location
    tasks: list  # tasks[n][m]
    budget_mtu: np.ndarray
    budget_device: np.ndarray
    budget_uav: float
    slot_fhp: int = -1  # FHP pinned for the slot when single_fhp_per_slot is set

    @property
    def task(self):
        return self.tasks[self.slot][self.mtu]


@dataclass
class StepInfo:
    record: TaskRecord
    allocation: object
    outcome: object
    late: bool
    breaches: int
    violations: int
    energy: float
    idle_uav_energy: float
    raw_reward: float
    slot_end: bool


def observation_size(M: int, K: int, Q: int) -> int:
    return M + 3 * K + 2 * Q + 12


class OffloadEnv:
    """Episodic environment.  ``use_dt=False`` plans every allocation as if
    the twins were exact (zero deviations) while execution still sees the
    true deviations; ``optimize_frequency=False`` keeps every server at its
    maximum frequency."""

    def __init__(self, cfg: ScenarioConfig, use_dt: bool = True, optimize_frequency: bool = True,
                 reward: RewardConfig | None = None):
        cfg.validate()
        self.cfg = cfg
        self.use_dt = use_dt
        self.optimize_frequency = optimize_frequency
        self.reward_cfg = reward or RewardConfig(cfg.penalty, cfg.reward_scale)
        self.world = build_world(cfg)
        self.phy = Physics.from_scenario(cfg)
        self.n_actions = cfg.K + cfg.Q + 2
        self._decisions = [OffloadDecision.from_action(a, cfg.K, cfg.Q) for a in range(self.n_actions)]
        self.obs_dim = observation_size(cfg.M, cfg.K, cfg.Q)
        self._diag = math.hypot(cfg.region_x, cfg.region_y)
        self._diag3 = math.hypot(self._diag, cfg.H)
        self._dev_xy = np.array([(d.x, d.y) for d in self.world.devices])
        self._fhp_xy = np.array([(f.x, f.y) for f in self.world.fhps])
        self._fhp_z2 = np.array([f.z ** 2 for f in self.world.fhps])
        self._fhp_fhp = np.hypot(*(self._fhp_xy[:, None, :] - self._fhp_xy[None, :, :]).transpose(2, 0, 1)) / self._diag
        self.state: EnvState | None = None
        self.episode = None
        self.trace: list = []
        self.steps: list = []

    # ------------------------------------------------------------------ setup
    def reset(self, episode=0) -> np.ndarray:
        cfg, world = self.cfg, self.world
        seed = cfg.seed
        self.episode = episode
        tasks = generate_tasks(cfg, derive_rng(seed, "tasks", episode))

        rng = derive_rng(seed, "init", episode)
        kins = [MtuKinematics(Location(float(rng.uniform(0, cfg.region_x)), float(rng.uniform(0, cfg.region_y))),
                              cfg.v_mean, float(rng.uniform(-math.pi, math.pi)))
                for _ in range(cfg.M)]
        theta_bar = rng.uniform(-math.pi, math.pi, size=cfg.M)
        self._mobility = MobilityConfig.from_scenario(cfg, theta_bar)
        self._mob_rng = derive_rng(seed, "mobility", episode)

        dev_rng = derive_rng(seed, "deviations", episode)
        devs = (sample_deviations(cfg, np.full(cfg.M, cfg.f_est_frac * cfg.f_max_mtu), dev_rng),
                sample_deviations(cfg, np.full(cfg.K, cfg.f_est_frac * cfg.f_max_device), dev_rng),
                sample_deviations(cfg, np.full(1, cfg.f_est_frac * cfg.f_max_uav), dev_rng))
        self.true_profiles = node_profiles(cfg, world, devs)
        self.plan_profiles = self.true_profiles if self.use_dt else node_profiles(cfg, world, None)
        mtus, devices, uav = self.plan_profiles
        self._dev_mtu = np.array([0.5 + 0.5 * p.f_dev / p.f_est for p in mtus])
        self._dev_rest = np.array([0.5 + 0.5 * p.f_dev / p.f_est for p in (*devices, uav)])

        start = world.uav_start
        self.state = EnvState(
            slot=0, mtu=0, kinematics=kins, uav_fhp=start, uav_location=world.fhps[start], tasks=tasks,
            budget_mtu=np.full(cfg.M, cfg.budget_mtu), budget_device=np.full(cfg.K, cfg.budget_device),
            budget_uav=cfg.budget_uav,
        )
        self.trace = []
        self.steps = []
        self._slot_geometry()
        return self.encode_observation()

    @property
    def steps_per_slot(self) -> int:
        return self.cfg.M

    @property
    def done(self) -> bool:
        return self.state.slot >= self.cfg.N

    def context(self, profiles) -> TaskContext:
        s = self.state
        mtus, devices, uav = profiles
        return TaskContext(s.kinematics[s.mtu].location, mtus[s.mtu], devices, uav, s.uav_location,
                           self.world.fhps, self.world.bs, self.phy)

    # ---------------------------------------------------------------- stepping
    def step(self, action: int):
        if self.state is None or self.done:
            raise RuntimeError("call reset() before step()")
        cfg, s = self.cfg, self.state
        if not isinstance(action, (int, np.integer)) or not 0 <= action < self.n_actions:
            raise ValueError(f"action must be an integer in [0, {self.n_actions})")
        decision = self._decisions[action]
        if decision.kind == UAV and cfg.single_fhp_per_slot:
            if s.slot_fhp < 0:
                s.slot_fhp = decision.index
            decision = OffloadDecision(UAV, s.slot_fhp)

        true = self.context(self.true_profiles)
        plan = true if self.plan_profiles is self.true_profiles else self.context(self.plan_profiles)
        record = TaskRecord(s.slot, s.mtu, s.task, decision, true, plan)
        alloc, out = allocate_with_outcome(record, optimize_frequency=self.optimize_frequency)
        if out is None or plan is not true:
            out = outcome(record, alloc)
        late = not on_time(out, record.task)

        idle = 0.0 if decision.kind in (UAV, RELAY) else cfg.P_h * cfg.t_m
        s.budget_mtu[s.mtu] -= out.mtu_energy
        breaches = int(s.budget_mtu[s.mtu] < 0)
        if decision.kind == DEVICE:
            s.budget_device[decision.index] -= out.device_energy
            breaches += int(s.budget_device[decision.index] < 0)
        s.budget_uav -= out.uav_energy + idle
        breaches += int(s.budget_uav < 0)
        if decision.kind == UAV:
            s.uav_fhp, s.uav_location = decision.index, self.world.fhps[decision.index]

        violations = int(late) + breaches
        energy = out.total_energy
        raw = -(energy + self.reward_cfg.penalty * violations)
        self.trace.append([self.episode, s.slot, s.mtu, decision.to_action(cfg.K),
                           out.total_latency, energy, violations])

        s.mtu += 1
        slot_end = s.mtu == cfg.M
        if slot_end:
            s.mtu, s.slot_fhp = 0, -1
            s.slot += 1
            s.kinematics = advance(s.kinematics, self._mobility, cfg.t_m, self._mob_rng)
            self._slot_geometry()
        info = StepInfo(record, alloc, out, late, breaches, violations, energy, idle, raw, slot_end)
        self.steps.append(info)
        obs = np.zeros(self.obs_dim) if self.done else self.encode_observation()
        return obs, raw / self.reward_cfg.scale, self.done, info

    # ------------------------------------------------------------ observation
    def encode_observation(self) -> np.ndarray:
        """Fixed-length state vector with every entry in [0, 1]."""
        cfg, s = self.cfg, self.state
        M, K, Q = cfg.M, cfg.K, cfg.Q
        loc, uav, task = s.kinematics[s.mtu].location, s.uav_location, s.task
        obs = np.zeros(self.obs_dim)
        obs[s.mtu] = 1.0
        i = M
        obs[i:i + 7] = (loc.x / cfg.region_x, loc.y / cfg.region_y, uav.x / cfg.region_x, uav.y / cfg.region_y,
                        task.data_bits / cfg.data_bits_max, task.cycles_per_bit / cfg.cycles_per_bit,
                        task.deadline / cfg.T_max)
        i += 7
        obs[i:i + K] = self._mtu_dev[s.mtu]
        i += K
        obs[i:i + Q] = self._mtu_fhp[s.mtu]
        i += Q
        obs[i:i + Q] = self._fhp_fhp[s.uav_fhp]
        i += Q
        obs[i] = s.budget_mtu[s.mtu] / cfg.budget_mtu
        obs[i + 1:i + 1 + K] = s.budget_device / cfg.budget_device
        obs[i + 1 + K] = s.budget_uav / cfg.budget_uav
        i += K + 2
        obs[i] = self._dev_mtu[s.mtu]
        obs[i + 1:i + 2 + K] = self._dev_rest
        obs[-1] = s.slot / cfg.N
        np.maximum(obs, 0.0, out=obs)
        return np.minimum(obs, 1.0, out=obs)

    def _slot_geometry(self) -> None:
        """Normalized MTU-device and MTU-FHP distances for the current slot."""
        here = np.array([(k.location.x, k.location.y) for k in self.state.kinematics])
        self._mtu_dev = np.hypot(*(here[:, None, :] - self._dev_xy[None]).transpose(2, 0, 1)) / self._diag
        gap2 = ((here[:, None, :] - self._fhp_xy[None]) ** 2).sum(axis=2)
        self._mtu_fhp = np.sqrt(gap2 + self._fhp_z2) / self._diag3

    # ---------------------------------------------------------------- helpers
    def nearest_device(self) -> int:
        loc = self.state.kinematics[self.state.mtu].location
        d = [math.hypot(loc.x - p.x, loc.y - p.y) for p in self.world.devices]
        return int(np.argmin(d))  # argmin keeps the lowest index on ties

    def write_trace(self, path, append: bool = False) -> None:
        write_trace_csv(path, self.trace, append=append)


def write_trace_csv(path, rows, append: bool = False) -> None:
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not append:
            w.writerow(TRACE_HEADER)
        for ep, n, m, a, lat, e, v in rows:
            w.writerow([ep, n, m, a, f"{lat:.9g}", f"{e:.9g}", v])


def rollout(env: OffloadEnv, policy, episode=0):
    """Run one episode with ``policy(env, obs) -> action``; returns the
    per-step infos."""
    obs = env.reset(episode)
    done = False
    while not done:
        obs, _, done, _ = env.step(policy(env, obs))
    return env.steps


__all__ = ["OffloadEnv", "EnvState", "RewardConfig", "StepInfo", "observation_size",
           "rollout", "write_trace_csv", "TRACE_HEADER"]
