"""CPU-frequency assignment for fixed decisions and powers.

Compute energy grows with ``f - f_dev`` while latency shrinks, so under a
deadline the cheapest frequency is the smallest one that still finishes on
time.  Tasks share no frequency variable under TDMA, so the problem splits
into independent per-task minima.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .compute import DEVICE, LOCAL, RELAY, UAV, InfeasibleError

MIN_FREQUENCY = 1.0  # Hz; keeps f - f_dev strictly positive when D*C/T_rem underflows
FREQUENCY_RTOL = 1e-9  # round-off allowance when the deadline binds exactly at f_max


def minimal_feasible_frequency(D: float, C: float, T_rem: float, f_dev: float, f_max: float) -> float:
    """Smallest estimated frequency whose actual compute time fits in
    ``T_rem``."""
    if T_rem <= 0:
        raise InfeasibleError("no time left for computing")
    f = D * C / T_rem + f_dev
    if f > f_max * (1 + FREQUENCY_RTOL):
        raise InfeasibleError(f"needs {f:.6g} Hz > f_max {f_max:.6g} Hz")
    return min(max(f, f_dev + MIN_FREQUENCY, MIN_FREQUENCY), f_max)


@dataclass(frozen=True)
class FrequencyAssignment:
    """Frequency of one task at its server; ``server`` is ``local``,
    ``device`` or ``uav`` (``relay`` tasks carry no frequency)."""

    server: str
    index: int
    f: float


def assignment_of(record, alloc) -> FrequencyAssignment:
    kind = record.decision.kind
    if kind == LOCAL:
        return FrequencyAssignment(LOCAL, record.mtu, alloc.f_local)
    if kind == DEVICE:
        return FrequencyAssignment(DEVICE, record.decision.index, alloc.f_device)
    if kind == UAV:
        return FrequencyAssignment(UAV, 0, alloc.f_uav)
    return FrequencyAssignment(RELAY, -1, 0.0)


def entity_energy(records, outcomes, idle_uav_energy: float = 0.0) -> dict:
    """Energy drawn from each battery, keyed ``("mtu", m)``, ``("device", k)``
    and ``("uav", 0)``."""
    used = defaultdict(float)
    for rec, out in zip(records, outcomes):
        used[("mtu", rec.mtu)] += out.mtu_energy
        if out.mode == DEVICE:
            used[("device", rec.decision.index)] += out.device_energy
        if out.mode in (UAV, RELAY):
            used[("uav", 0)] += out.uav_energy
    if idle_uav_energy:
        used[("uav", 0)] += idle_uav_energy
    return dict(used)


def budget_violations(used: dict, mtus, devices, uav) -> dict:
    """Entities whose cumulative energy exceeds their budget, with the
    overshoot in J."""
    caps = {("uav", 0): uav.energy_budget}
    caps.update({("mtu", p.id): p.energy_budget for p in mtus})
    caps.update({("device", p.id): p.energy_budget for p in devices})
    return {key: e - caps[key] for key, e in sorted(used.items()) if e > caps[key]}


@dataclass
class CapacityResult:
    allocations: list
    assignments: list
    objective: float  # total true energy, J
    late: list = field(default_factory=list)  # task positions that miss the deadline
    infeasible: list = field(default_factory=list)  # no on-time frequency exists at the server
    budget_violations: dict = field(default_factory=dict)


def solve_capacity(records, allocations, mtus=None, devices=(), uav=None,
                   idle_uav_energy: float = 0.0) -> CapacityResult:
    """Assign every task the minimal on-time frequency at its decided server
    given the transmit times implied by ``allocations``.

    Budgets are checked after the fact when the entity profiles are given.
    """
    from .allocation import capacity_step, on_time, outcome, transmit_time_of

    new, infeasible = [], []
    for i, (rec, alloc) in enumerate(zip(records, allocations)):
        if rec.decision.kind != RELAY and not _has_feasible_frequency(rec, alloc, transmit_time_of):
            infeasible.append(i)
        new.append(capacity_step(rec, alloc))
    outs = [outcome(r, a) for r, a in zip(records, new)]
    late = [i for i, (r, o) in enumerate(zip(records, outs)) if not on_time(o, r.task)]
    violations = {}
    if mtus is not None and uav is not None:
        violations = budget_violations(entity_energy(records, outs, idle_uav_energy), mtus, devices, uav)
    return CapacityResult(
        allocations=new,
        assignments=[assignment_of(r, a) for r, a in zip(records, new)],
        objective=sum(o.total_energy for o in outs),
        late=late,
        infeasible=infeasible,
        budget_violations=violations,
    )


def _has_feasible_frequency(rec, alloc, transmit_time_of) -> bool:
    ctx, task = rec.plan, rec.task
    kind = rec.decision.kind
    server = ctx.mtu if kind == LOCAL else ctx.uav if kind == UAV else ctx.devices[rec.decision.index]
    try:
        t_tx = 0.0 if kind == LOCAL else transmit_time_of(rec, alloc)
        minimal_feasible_frequency(task.data_bits, task.cycles_per_bit, task.deadline - t_tx,
                                   server.f_dev, server.f_max)
    except InfeasibleError:
        return False
    return True
