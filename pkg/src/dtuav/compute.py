"""Latency and energy of the four execution modes.

Every server frequency here is the DT-estimated value ``f_est`` chosen by
the planner; the hardware actually runs at ``f_est - f_dev``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import Location, NodeProfile, TaskSpec
from .radio import LinkBudget, horizontal_distance, rate

LOCAL, RELAY, DEVICE, UAV = "local", "relay", "device", "uav"


class InfeasibleError(ValueError):
    """A quantity is undefined for the given inputs (zero rate, zero actual
    frequency, ...)."""


def estimated_time(D: float, C: float, f_est: float) -> float:
    if f_est <= 0:
        raise InfeasibleError("estimated frequency must be positive")
    return D * C / f_est


def latency_gap(D: float, C: float, f_est: float, f_dev: float) -> float:
    """Actual minus DT-estimated compute time; negative when the twin
    underestimates the available frequency."""
    if f_est - f_dev <= 0:
        raise InfeasibleError("f_est - f_dev must be positive")
    return D * C * f_dev / (f_est * (f_est - f_dev))


def actual_compute_time(D: float, C: float, f_est: float, f_dev: float) -> float:
    return estimated_time(D, C, f_est) + latency_gap(D, C, f_est, f_dev)


def compute_energy(D: float, C: float, f_est: float, f_dev: float, kappa: float) -> float:
    return kappa * (f_est - f_dev) ** 2 * C * D


def transmit_outcome(D: float, p: float, link: LinkBudget, B: float, sigma2: float):
    """(time, energy) to push ``D`` bits over ``link`` at power ``p``."""
    if p <= 0:
        raise InfeasibleError("zero transmit power never completes")
    r = rate(p, link.gain, B, sigma2)
    if r <= 0:
        raise InfeasibleError("rate underflow")
    t = D / r
    return t, p * t


def uav_fly_energy(prev: Location, nxt: Location, P_f: float, V: float) -> float:
    return P_f * horizontal_distance(prev, nxt) / V


def uav_hover_energy(times, P_h: float) -> float:
    if isinstance(times, (int, float)):
        return P_h * times
    return P_h * math.fsum(times)


@dataclass(frozen=True)
class OffloadDecision:
    """Placement of one task.  ``index`` is the device or FHP number for the
    ``device``/``uav`` kinds and unused otherwise."""

    kind: str
    index: int = -1

    @classmethod
    def from_action(cls, action: int, K: int, Q: int) -> "OffloadDecision":
        if not 0 <= action < K + Q + 2:
            raise ValueError(f"action {action} outside [0, {K + Q + 2})")
        if action == 0:
            return cls(LOCAL)
        if action == 1:
            return cls(RELAY)
        if action < K + 2:
            return cls(DEVICE, action - 2)
        return cls(UAV, action - K - 2)

    def to_action(self, K: int) -> int:
        if self.kind == LOCAL:
            return 0
        if self.kind == RELAY:
            return 1
        return 2 + self.index if self.kind == DEVICE else K + 2 + self.index


@dataclass(frozen=True)
class Allocation:
    """Powers (W) and DT-estimated frequencies (Hz) for one task; entries not
    used by the task's mode stay zero."""

    p_device: float = 0.0
    p_uav: float = 0.0  # MTU -> UAV, also the first relay hop
    p_bs: float = 0.0  # UAV -> BS relay hop
    f_local: float = 0.0
    f_device: float = 0.0
    f_uav: float = 0.0


@dataclass(frozen=True)
class Physics:
    B: float
    sigma2: float
    beta0: float
    P_f: float
    P_h: float
    V: float

    @classmethod
    def from_scenario(cls, cfg) -> "Physics":
        return cls(cfg.B, cfg.sigma2, cfg.beta0, cfg.P_f, cfg.P_h, cfg.V)


@dataclass(frozen=True)
class TaskContext:
    """Snapshot of the world needed to evaluate one task.

    ``uav_from`` is where the UAV hovers before this task is served; ``fhps``
    are the hover points it can move to.
    """

    mtu_location: Location
    mtu: NodeProfile
    devices: tuple
    uav: NodeProfile
    uav_from: Location
    fhps: tuple
    bs: Location
    phy: Physics

    def with_deviations(self, mtu_dev: float, device_devs, uav_dev: float) -> "TaskContext":
        from dataclasses import replace
        return replace(
            self,
            mtu=replace(self.mtu, f_dev=mtu_dev),
            devices=tuple(replace(d, f_dev=float(v)) for d, v in zip(self.devices, device_devs)),
            uav=replace(self.uav, f_dev=uav_dev),
        )

    def hover_point(self, decision: OffloadDecision) -> Location:
        return self.fhps[decision.index] if decision.kind == UAV else self.uav_from


@dataclass(frozen=True)
class ModeOutcome:
    """Latency chain and energy breakdown of one executed task.

    ``server_energy`` is the computing energy at a device or the UAV, or the
    UAV->BS transmit energy for a relayed task.
    """

    mode: str
    transmit_time: float
    compute_time: float
    total_latency: float
    mtu_energy: float
    server_energy: float
    uav_fly_energy: float
    uav_hover_energy: float
    total_energy: float

    @property
    def uav_energy(self) -> float:
        """Energy drawn from the UAV battery by this task."""
        if self.mode == UAV or self.mode == RELAY:
            return self.server_energy + self.uav_fly_energy + self.uav_hover_energy
        return 0.0

    @property
    def device_energy(self) -> float:
        return self.server_energy if self.mode == DEVICE else 0.0


def _outcome(mode, t_tx, t_cmp, e_mtu, e_srv, e_fly, e_hov) -> ModeOutcome:
    return ModeOutcome(mode, t_tx, t_cmp, t_tx + t_cmp, e_mtu, e_srv, e_fly, e_hov,
                       e_mtu + e_srv + e_fly + e_hov)


def evaluate_mode(decision: OffloadDecision, task: TaskSpec, alloc: Allocation, ctx: TaskContext) -> ModeOutcome:
    D, C = task.data_bits, task.cycles_per_bit
    phy = ctx.phy
    if decision.kind == LOCAL:
        f = alloc.f_local
        t = actual_compute_time(D, C, f, ctx.mtu.f_dev)
        return _outcome(LOCAL, 0.0, t, compute_energy(D, C, f, ctx.mtu.f_dev, ctx.mtu.kappa), 0.0, 0.0, 0.0)

    if decision.kind == DEVICE:
        dev = ctx.devices[decision.index]
        link = LinkBudget.between(ctx.mtu_location, dev.location, phy.beta0)
        t_tx, e_tx = transmit_outcome(D, alloc.p_device, link, phy.B, phy.sigma2)
        f = alloc.f_device
        t_cmp = actual_compute_time(D, C, f, dev.f_dev)
        return _outcome(DEVICE, t_tx, t_cmp, e_tx, compute_energy(D, C, f, dev.f_dev, dev.kappa), 0.0, 0.0)

    if decision.kind == UAV:
        fhp = ctx.fhps[decision.index]
        link = LinkBudget.between(ctx.mtu_location, fhp, phy.beta0)
        t_tx, e_tx = transmit_outcome(D, alloc.p_uav, link, phy.B, phy.sigma2)
        f = alloc.f_uav
        t_cmp = actual_compute_time(D, C, f, ctx.uav.f_dev)
        e_fly = uav_fly_energy(ctx.uav_from, fhp, phy.P_f, phy.V)
        e_hov = uav_hover_energy((t_tx, t_cmp), phy.P_h)
        return _outcome(UAV, t_tx, t_cmp, e_tx, compute_energy(D, C, f, ctx.uav.f_dev, ctx.uav.kappa), e_fly, e_hov)

    if decision.kind == RELAY:
        # BS computing is external: neither its time nor its energy is counted
        hover = ctx.uav_from
        hop1 = LinkBudget.between(ctx.mtu_location, hover, phy.beta0)
        hop2 = LinkBudget.between(hover, ctx.bs, phy.beta0)
        t1, e1 = transmit_outcome(D, alloc.p_uav, hop1, phy.B, phy.sigma2)
        t2, e2 = transmit_outcome(D, alloc.p_bs, hop2, phy.B, phy.sigma2)
        e_hov = uav_hover_energy((t1, t2), phy.P_h)
        return _outcome(RELAY, t1 + t2, 0.0, e1, e2, 0.0, e_hov)

    raise ValueError(f"unknown decision kind {decision.kind!r}")
