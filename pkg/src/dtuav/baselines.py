"""The proposed design and its five comparison designs."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .config import ScenarioConfig, dump_config
from .ddqn import TrainConfig, TrainResult, train
from .env import OffloadEnv
from .joint import JointConfig, JointResult, evaluate_policy, run_joint

DESIGNS = ("proposed", "dqn", "no_f_opt", "local_only", "greedy_devices", "no_dt")
LEARNED = ("proposed", "dqn", "no_f_opt", "no_dt")
METRICS_HEADER = ["design", "seed", "total_energy", "mtu_energy", "uav_energy", "violations"]


@dataclass
class DesignResult:
    design: str
    seed: int
    joint: JointResult

    @property
    def metrics(self):
        return self.joint.metrics

    def row(self) -> list:
        m = self.metrics
        return [self.design, self.seed, m.total_energy, m.mtu_energy, m.uav_energy, m.violations]


def make_env(design: str, cfg: ScenarioConfig) -> OffloadEnv:
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}; choose from {', '.join(DESIGNS)}")
    return OffloadEnv(cfg, use_dt=design != "no_dt", optimize_frequency=design != "no_f_opt")


def local_policy(env, obs) -> int:
    return 0


def greedy_device_policy(env, obs) -> int:
    return 2 + env.nearest_device()


class PolicyCache:
    """Trained policies keyed by (scenario, training settings, design) so
    that designs sharing a policy train it once."""

    def __init__(self):
        self._store = {}

    def get(self, key, build):
        if key not in self._store:
            self._store[key] = build()
        return self._store[key]


def train_design(design: str, cfg: ScenarioConfig, train_cfg: TrainConfig,
                 cache: PolicyCache | None = None) -> TrainResult:
    """Policy used by a learned design.  ``no_dt`` reuses the proposed
    policy: the learner is the same, only the planner loses the twin."""
    owner = "proposed" if design == "no_dt" else design
    rule = "dqn" if owner == "dqn" else "ddqn"

    def build():
        return train(make_env(owner, cfg), train_cfg, rule)

    if cache is None:
        return build()
    return cache.get((dump_config(cfg), repr(train_cfg), owner), build)


def run_design(design: str, cfg: ScenarioConfig, train_cfg: TrainConfig | None = None,
               joint_cfg: JointConfig = JointConfig(), cache: PolicyCache | None = None) -> DesignResult:
    env = make_env(design, cfg)
    if design == "local_only":
        policy, training = local_policy, None
    elif design == "greedy_devices":
        policy, training = greedy_device_policy, None
    else:
        train_cfg = train_cfg or TrainConfig(seed=cfg.seed)
        if joint_cfg.retrain_policy and design != "no_dt":
            rule = "dqn" if design == "dqn" else "ddqn"
            return DesignResult(design, cfg.seed, run_joint(env, train_cfg, joint_cfg, rule))
        training = train_design(design, cfg, train_cfg, cache)
        policy = training.policy()
    return DesignResult(design, cfg.seed, evaluate_policy(env, policy, joint_cfg, training=training))


def write_metrics_csv(path, results) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in results:
            d, s, *vals = r.row()
            w.writerow([d, s, *(f"{v:.9g}" for v in vals[:3]), vals[3]])


__all__ = ["DESIGNS", "LEARNED", "METRICS_HEADER", "DesignResult", "PolicyCache", "make_env",
           "run_design", "train_design", "local_policy", "greedy_device_policy", "write_metrics_csv"]
