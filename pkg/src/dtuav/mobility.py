"""Gauss-Markov random mobility for MTUs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import Location, ScenarioConfig


@dataclass(frozen=True)
class MobilityConfig:
    mu1: float
    mu2: float
    v_bar: float
    theta_bar: tuple  # per-MTU mean direction, rad
    lambda_params: tuple = (0.0, 1.0)  # (mean, std) of the velocity noise
    gamma_params: tuple = (0.0, 0.3)  # (mean, std) of the direction noise
    region: tuple = (400.0, 400.0)
    literal_eq7: bool = False

    def __post_init__(self):
        if not (0 <= self.mu1 <= 1 and 0 <= self.mu2 <= 1):
            raise ValueError("memory factors must lie in [0, 1]")
        if self.lambda_params[1] < 0 or self.gamma_params[1] < 0:
            raise ValueError("noise std must be >= 0")

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig, theta_bar) -> "MobilityConfig":
        return cls(cfg.mu1, cfg.mu2, cfg.v_mean, tuple(float(t) for t in theta_bar),
                   (cfg.lambda_mean, cfg.lambda_std), (cfg.gamma_mean, cfg.gamma_std),
                   (cfg.region_x, cfg.region_y), cfg.literal_eq7)


@dataclass(frozen=True)
class MtuKinematics:
    location: Location
    v: float
    theta: float


def wrap_angle(theta: float) -> float:
    """Map an angle onto (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2 * math.pi)
    if wrapped <= 0:
        wrapped += 2 * math.pi
    return wrapped - math.pi


def step_velocity(prev_v: float, cfg: MobilityConfig, rng: np.random.Generator) -> float:
    mean, std = cfg.lambda_params
    noise = rng.normal(mean, std) if std > 0 else mean
    v = cfg.mu1 * prev_v + (1 - cfg.mu1) * cfg.v_bar + math.sqrt(1 - cfg.mu1 ** 2) * noise
    return max(v, 0.0)


def step_direction(prev_theta: float, cfg: MobilityConfig, rng: np.random.Generator,
                   m: int = 0, prev_v: float | None = None) -> float:
    """Direction update.  The default is the standard autoregressive form on
    the previous direction; ``literal_eq7`` drives it with the previous
    velocity instead, as the printed equation reads."""
    mean, std = cfg.gamma_params
    noise = rng.normal(mean, std) if std > 0 else mean
    memory = prev_v if (cfg.literal_eq7 and prev_v is not None) else prev_theta
    theta = cfg.mu2 * memory + (1 - cfg.mu2) * cfg.theta_bar[m] + math.sqrt(1 - cfg.mu2 ** 2) * noise
    return wrap_angle(theta)


def _reflect(value: float, upper: float) -> float:
    period = 2 * upper
    value = math.fmod(value, period)
    if value < 0:
        value += period
    return period - value if value > upper else value


def update_position(kin: MtuKinematics, t: float, region=(400.0, 400.0)) -> Location:
    if t <= 0:
        raise ValueError("duration must be positive")
    x = kin.location.x + kin.v * math.cos(kin.theta) * t
    y = kin.location.y + kin.v * math.sin(kin.theta) * t
    return Location(_reflect(x, region[0]), _reflect(y, region[1]), 0.0)


def advance(kins: list, cfg: MobilityConfig, t: float, rng: np.random.Generator) -> list:
    """One slot for every MTU: move with the previous slot's (v, theta),
    then draw the new velocity and direction."""
    out = []
    for m, kin in enumerate(kins):
        loc = update_position(kin, t, cfg.region)
        v = step_velocity(kin.v, cfg, rng)
        theta = step_direction(kin.theta, cfg, rng, m=m, prev_v=kin.v)
        out.append(MtuKinematics(loc, v, theta))
    return out


def write_trajectory_csv(path, trajectory) -> None:
    """``trajectory[n][m]`` of MtuKinematics -> CSV ``slot,mtu,x,y,v,theta``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "mtu", "x", "y", "v", "theta"])
        for n, row in enumerate(trajectory):
            for m, k in enumerate(row):
                w.writerow([n, m, f"{k.location.x:.6f}", f"{k.location.y:.6f}", f"{k.v:.6f}", f"{k.theta:.6f}"])
