"""Joint optimization: learn placements, then alternate power and capacity
updates on the resulting episode until the objective stops improving."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

from .allocation import initial_allocation, on_time, outcome, power_step
from .capacity import budget_violations, entity_energy, solve_capacity
from .ddqn import QNetwork, TrainConfig, TrainResult, train
from .env import OffloadEnv, rollout

EVAL_EPISODE = "eval"


@dataclass(frozen=True)
class JointConfig:
    threshold: float = 1e-3  # stop once the fractional decrease falls below this
    max_iterations: int = 20
    retrain_policy: bool = False
    retrain_rounds: int = 2
    retrain_episodes: int = 50

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class ConvergenceLog:
    objectives: list = field(default_factory=list)  # entry 0 is the starting point
    fractional: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return max(len(self.objectives) - 1, 0)

    def is_nonincreasing(self, rtol: float = 1e-12) -> bool:
        return all(b <= a * (1 + rtol) + 1e-12 for a, b in zip(self.objectives, self.objectives[1:]))

    def rows(self):
        for r, phi in enumerate(self.objectives):
            yield r, phi, (self.fractional[r - 1] if r else float("nan"))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective", "frac_decrease"])
            for r, phi, frac in self.rows():
                w.writerow([r, f"{phi:.9g}", f"{frac:.9g}"])


def objective(records, allocations, planned: bool = False) -> float:
    """Total energy of a set of tasks; late tasks count their energy only."""
    return math.fsum(outcome(r, a, planned=planned).total_energy for r, a in zip(records, allocations))


def alternate(records, cfg: JointConfig = JointConfig(), optimize_frequency: bool = True,
              allocations=None):
    """Power then capacity updates over every task until the fractional
    decrease of the planned objective drops below the threshold.

    The objective is evaluated in the planner's view, where each update is
    guaranteed not to increase it; a rise means the updates are broken.
    """
    allocs = list(allocations) if allocations is not None else [initial_allocation(r) for r in records]
    log = ConvergenceLog([objective(records, allocs, planned=True)], [])
    for _ in range(cfg.max_iterations):
        allocs = [power_step(r, a) for r, a in zip(records, allocs)]
        if optimize_frequency:
            allocs = solve_capacity(records, allocs).allocations
        phi = objective(records, allocs, planned=True)
        prev = log.objectives[-1]
        if phi > prev * (1 + 1e-12) + 1e-12:
            raise AssertionError(f"objective increased from {prev!r} to {phi!r}")
        frac = (prev - phi) / prev if prev > 0 else 0.0
        log.objectives.append(phi)
        log.fractional.append(frac)
        if frac < cfg.threshold:
            break
    return allocs, log


@dataclass
class EpisodeMetrics:
    total_energy: float
    mtu_energy: float
    uav_energy: float
    device_energy: float
    late: int
    budget_breaches: int

    @property
    def violations(self) -> int:
        return self.late + self.budget_breaches


def episode_metrics(records, allocations, idle_uav_energy: float, profiles) -> EpisodeMetrics:
    """True-view energies and violations of an executed episode."""
    outs = [outcome(r, a) for r, a in zip(records, allocations)]
    used = entity_energy(records, outs, idle_uav_energy)
    mtus, devices, uav = profiles
    return EpisodeMetrics(
        total_energy=math.fsum(o.total_energy for o in outs),
        mtu_energy=math.fsum(o.mtu_energy for o in outs),
        uav_energy=math.fsum(o.uav_energy for o in outs),
        device_energy=math.fsum(o.device_energy for o in outs),
        late=sum(not on_time(o, r.task) for r, o in zip(records, outs)),
        budget_breaches=len(budget_violations(used, mtus, devices, uav)),
    )


@dataclass
class JointResult:
    records: list
    allocations: list
    log: ConvergenceLog
    metrics: EpisodeMetrics
    trace: list
    training: TrainResult | None = None
    logs: list = field(default_factory=list)  # one per retraining round


def evaluate_policy(env: OffloadEnv, policy, cfg: JointConfig = JointConfig(), episode=EVAL_EPISODE,
                    training: TrainResult | None = None) -> JointResult:
    """Greedy rollout on the evaluation episode, then the alternation on the
    placements it produced."""
    steps = rollout(env, policy, episode)
    records = [s.record for s in steps]
    allocs, log = alternate(records, cfg, optimize_frequency=env.optimize_frequency)
    idle = math.fsum(s.idle_uav_energy for s in steps)
    metrics = episode_metrics(records, allocs, idle, env.true_profiles)
    return JointResult(records, allocs, log, metrics, list(env.trace), training, [log])


def run_joint(env: OffloadEnv, train_cfg: TrainConfig, cfg: JointConfig = JointConfig(),
              rule: str = "ddqn", online: QNetwork | None = None) -> JointResult:
    """Train the placement policy, then run the alternation.  With
    ``retrain_policy`` the policy is trained further between rounds and the
    alternation is repeated on the new placements."""
    training = train(env, train_cfg, rule, online=online)
    result = evaluate_policy(env, training.policy(), cfg, training=training)
    if cfg.retrain_policy:
        offset = train_cfg.episodes
        for _ in range(cfg.retrain_rounds):
            more = train(env, _with_episodes(train_cfg, cfg.retrain_episodes), rule,
                         online=training.online, episode_offset=offset)
            offset += cfg.retrain_episodes
            training.curve.extend((offset - cfg.retrain_episodes + ep, *rest) for ep, *rest in more.curve)
            training.train_steps += more.train_steps
            nxt = evaluate_policy(env, training.policy(), cfg, training=training)
            result.logs.append(nxt.log)
            result = JointResult(nxt.records, nxt.allocations, nxt.log, nxt.metrics, nxt.trace,
                                 training, result.logs)
    return result


def _with_episodes(cfg: TrainConfig, episodes: int) -> TrainConfig:
    return replace(cfg, episodes=episodes, epsilon=cfg.epsilon_floor)


__all__ = ["JointConfig", "ConvergenceLog", "JointResult", "EpisodeMetrics", "objective", "alternate",
           "episode_metrics", "evaluate_policy", "run_joint", "EVAL_EPISODE"]
