"""Closed-form minimum-energy transmit powers and a brute-force check.

Transmission energy p * D / R(p) is nondecreasing in p, so the cheapest
power is the one whose transmit time exactly fills the time left after
computing (or after the first relay hop), clipped at the power cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compute import InfeasibleError, actual_compute_time
from .config import TaskSpec
from .radio import LinkBudget

MAX_EXPONENT = 1024.0


@dataclass(frozen=True)
class PowerSolution:
    p_star: float
    capped: bool
    xi: float  # SNR needed to meet the deadline exactly
    uncapped: float  # xi * sigma2 / gain before clipping


@dataclass(frozen=True)
class PowerProblem:
    """Single-link transmission that must finish within ``t_budget``."""

    D: float
    t_budget: float
    gain: float
    B: float
    sigma2: float
    p_max: float

    def transmit_time(self, p):
        return self.D / (self.B * np.log2(1.0 + np.asarray(p) * self.gain / self.sigma2))

    def energy(self, p):
        return np.asarray(p) * self.transmit_time(p)


def snr_threshold(D: float, B: float, t_rem: float) -> float:
    if t_rem <= 0:
        raise InfeasibleError("no time left for transmission")
    exponent = D / (B * t_rem)
    if exponent > MAX_EXPONENT:
        raise InfeasibleError("required spectral efficiency overflows")
    return math.expm1(exponent * math.log(2.0))


def closed_form_power(D: float, t_rem: float, gain: float, B: float, sigma2: float, p_max: float) -> PowerSolution:
    xi = snr_threshold(D, B, t_rem)
    p = xi * sigma2 / gain
    return PowerSolution(min(p, p_max), p > p_max, xi, p)


def optimal_power_device(task: TaskSpec, link: LinkBudget, f_est: float, f_dev: float,
                         B: float, sigma2: float, p_max: float) -> PowerSolution:
    """MTU -> resource device power given the device's allocated frequency."""
    t_rem = task.deadline - actual_compute_time(task.data_bits, task.cycles_per_bit, f_est, f_dev)
    return closed_form_power(task.data_bits, t_rem, link.gain, B, sigma2, p_max)


def optimal_power_uav(task: TaskSpec, link: LinkBudget, f_est: float, f_dev: float,
                      B: float, sigma2: float, p_max: float) -> PowerSolution:
    """MTU -> UAV power given the UAV's allocated frequency."""
    t_rem = task.deadline - actual_compute_time(task.data_bits, task.cycles_per_bit, f_est, f_dev)
    return closed_form_power(task.data_bits, t_rem, link.gain, B, sigma2, p_max)


def optimal_power_bs(task: TaskSpec, first_hop_time: float, uav_bs_link: LinkBudget,
                     B: float, sigma2: float, p_max_uav: float) -> PowerSolution:
    """UAV -> BS relay power given the MTU -> UAV hop duration."""
    return closed_form_power(task.data_bits, task.deadline - first_hop_time, uav_bs_link.gain,
                             B, sigma2, p_max_uav)


def verify_optimality(solution: PowerSolution, problem: PowerProblem, points: int = 1000,
                      rtol: float = 1e-12) -> bool:
    """True when no grid power in (0, p_max] meets the time budget with less
    transmission energy than ``solution.p_star``."""
    grid = np.linspace(problem.p_max / points, problem.p_max, points)
    feasible = problem.transmit_time(grid) <= problem.t_budget * (1 + rtol)
    if not feasible.any():
        return True
    if problem.transmit_time(solution.p_star) > problem.t_budget * (1 + 1e-9):
        return False
    best = float(problem.energy(solution.p_star))
    return bool(np.all(problem.energy(grid[feasible]) >= best * (1 - rtol)))
