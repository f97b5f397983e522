"""Per-task power/frequency updates shared by the environment and the joint
optimizer.

A task is planned against ``record.plan`` (the planner's view of the DT
deviations) and executed against ``record.true``.  Both updates are
safeguarded: a closed-form candidate replaces the current value only if it
keeps the task on time and does not raise its planned energy.  Hover power
makes the total energy non-monotone in transmit power, so the bare closed
form could otherwise increase the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .capacity import minimal_feasible_frequency
from .compute import (DEVICE, LOCAL, RELAY, UAV, Allocation, InfeasibleError, ModeOutcome,
                      OffloadDecision, TaskContext, evaluate_mode, transmit_outcome)
from .config import TaskSpec
from .power import optimal_power_bs, optimal_power_device, optimal_power_uav
from .radio import LinkBudget

DEADLINE_RTOL = 1e-9


@dataclass(frozen=True)
class TaskRecord:
    slot: int
    mtu: int
    task: TaskSpec
    decision: OffloadDecision
    true: TaskContext
    plan: TaskContext


def on_time(outcome: ModeOutcome, task: TaskSpec) -> bool:
    return outcome.total_latency <= task.deadline * (1 + DEADLINE_RTOL)


def outcome(record: TaskRecord, alloc: Allocation, planned: bool = False) -> ModeOutcome:
    ctx = record.plan if planned else record.true
    try:
        return evaluate_mode(record.decision, record.task, alloc, ctx)
    except InfeasibleError:
        # actual frequency collapsed (f_dev above the allocated f): the task
        # runs at the cap instead and is still reported late
        kind = record.decision.kind
        fixed = replace(
            alloc,
            f_local=ctx.mtu.f_max if kind == LOCAL else alloc.f_local,
            f_device=ctx.devices[record.decision.index].f_max if kind == DEVICE else alloc.f_device,
            f_uav=ctx.uav.f_max if kind == UAV else alloc.f_uav,
        )
        return replace(evaluate_mode(record.decision, record.task, fixed, ctx), total_latency=float("inf"))


def _links(record: TaskRecord):
    ctx, d = record.plan, record.decision
    beta0 = ctx.phy.beta0
    if d.kind == DEVICE:
        return LinkBudget.between(ctx.mtu_location, ctx.devices[d.index].location, beta0), None
    if d.kind == UAV:
        return LinkBudget.between(ctx.mtu_location, ctx.fhps[d.index], beta0), None
    if d.kind == RELAY:
        return (LinkBudget.between(ctx.mtu_location, ctx.uav_from, beta0),
                LinkBudget.between(ctx.uav_from, ctx.bs, beta0))
    return None, None


def transmit_time_of(record: TaskRecord, alloc: Allocation) -> float:
    """Planned transmit time ahead of computing for device and UAV tasks."""
    link, _ = _links(record)
    p = alloc.p_device if record.decision.kind == DEVICE else alloc.p_uav
    t, _ = transmit_outcome(record.task.data_bits, p, link, record.plan.phy.B, record.plan.phy.sigma2)
    return t


def initial_allocation(record: TaskRecord) -> Allocation:
    """Feasible starting point: powers at half their caps (raised to the caps
    when half power misses the deadline) and every frequency at its cap."""
    ctx = record.plan
    if record.decision.kind == LOCAL:
        return Allocation(f_local=ctx.mtu.f_max)
    half = Allocation(
        p_device=ctx.mtu.p_max / 2 if record.decision.kind == DEVICE else 0.0,
        p_uav=ctx.mtu.p_max / 2 if record.decision.kind in (UAV, RELAY) else 0.0,
        p_bs=ctx.uav.p_max / 2 if record.decision.kind == RELAY else 0.0,
        f_device=ctx.devices[record.decision.index].f_max if record.decision.kind == DEVICE else 0.0,
        f_uav=ctx.uav.f_max if record.decision.kind == UAV else 0.0,
    )
    if on_time(outcome(record, half, planned=True), record.task):
        return half
    return replace(half, p_device=2 * half.p_device, p_uav=2 * half.p_uav, p_bs=2 * half.p_bs)


def _accept(record, current: Allocation, candidate: Allocation, current_out=None):
    """Safeguard: keep ``current`` unless ``candidate`` is on time and not
    more expensive (any on-time candidate beats a late current).  Returns
    the chosen allocation and its planned outcome."""
    new = outcome(record, candidate, planned=True)
    if not on_time(new, record.task):
        return current, current_out
    old = current_out if current_out is not None else outcome(record, current, planned=True)
    if on_time(old, record.task) and new.total_energy > old.total_energy:
        return current, old
    return candidate, new


def _power_candidate(record: TaskRecord, alloc: Allocation):
    ctx, task, kind = record.plan, record.task, record.decision.kind
    if kind == LOCAL:
        return None
    phy, a = ctx.phy, alloc
    link, hop2 = _links(record)
    try:
        if kind == DEVICE:
            dev = ctx.devices[record.decision.index]
            sol = optimal_power_device(task, link, a.f_device, dev.f_dev, phy.B, phy.sigma2, ctx.mtu.p_max)
            return Allocation(sol.p_star, a.p_uav, a.p_bs, a.f_local, a.f_device, a.f_uav)
        if kind == UAV:
            sol = optimal_power_uav(task, link, a.f_uav, ctx.uav.f_dev, phy.B, phy.sigma2, ctx.mtu.p_max)
            return Allocation(a.p_device, sol.p_star, a.p_bs, a.f_local, a.f_device, a.f_uav)
        t1, _ = transmit_outcome(task.data_bits, a.p_uav, link, phy.B, phy.sigma2)
        sol = optimal_power_bs(task, t1, hop2, phy.B, phy.sigma2, ctx.uav.p_max)
        return Allocation(a.p_device, a.p_uav, sol.p_star, a.f_local, a.f_device, a.f_uav)
    except InfeasibleError:
        return None


def _capacity_candidate(record: TaskRecord, alloc: Allocation):
    ctx, task, kind = record.plan, record.task, record.decision.kind
    D, C, a = task.data_bits, task.cycles_per_bit, alloc
    try:
        if kind == LOCAL:
            f = minimal_feasible_frequency(D, C, task.deadline, ctx.mtu.f_dev, ctx.mtu.f_max)
            return Allocation(a.p_device, a.p_uav, a.p_bs, f, a.f_device, a.f_uav)
        if kind == DEVICE:
            dev = ctx.devices[record.decision.index]
            f = minimal_feasible_frequency(D, C, task.deadline - transmit_time_of(record, a), dev.f_dev, dev.f_max)
            return Allocation(a.p_device, a.p_uav, a.p_bs, a.f_local, f, a.f_uav)
        if kind == UAV:
            f = minimal_feasible_frequency(D, C, task.deadline - transmit_time_of(record, a),
                                           ctx.uav.f_dev, ctx.uav.f_max)
            return Allocation(a.p_device, a.p_uav, a.p_bs, a.f_local, a.f_device, f)
    except InfeasibleError:
        pass
    return None


def power_step(record: TaskRecord, alloc: Allocation) -> Allocation:
    """Closed-form power update for fixed frequencies."""
    cand = _power_candidate(record, alloc)
    return alloc if cand is None else _accept(record, alloc, cand)[0]


def capacity_step(record: TaskRecord, alloc: Allocation) -> Allocation:
    """Smallest on-time frequency at the decided server for fixed powers."""
    cand = _capacity_candidate(record, alloc)
    return alloc if cand is None else _accept(record, alloc, cand)[0]


def allocate_with_outcome(record: TaskRecord, optimize_frequency: bool = True, max_rounds: int = 20):
    """Alternate power and capacity updates for one task until neither
    moves.  Returns the allocation and its planned outcome, or ``None`` in
    place of the outcome when it was never evaluated."""
    alloc = initial_allocation(record)
    if record.decision.kind == LOCAL:
        max_rounds = 1  # a single frequency block: one capacity step is exact
    out = None
    for _ in range(max_rounds):
        new = alloc
        cand = _power_candidate(record, new)
        if cand is not None and cand != new:
            new, out = _accept(record, new, cand, out)
        if optimize_frequency:
            cand = _capacity_candidate(record, new)
            if cand is not None and cand != new:
                new, out = _accept(record, new, cand, out)
        if new == alloc:
            break
        alloc = new
    return alloc, out


def allocate_task(record: TaskRecord, optimize_frequency: bool = True, max_rounds: int = 20) -> Allocation:
    return allocate_with_outcome(record, optimize_frequency, max_rounds)[0]
