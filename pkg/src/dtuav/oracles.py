"""Independent property checks used by ``dtuav verify`` and the acceptance
suite.  Each check recomputes its reference from first principles (closed
formulas, grids, finite differences, value iteration) rather than calling
the code path it audits."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .compute import DEVICE, LOCAL, UAV, OffloadDecision, Physics, TaskContext, estimated_time, latency_gap
from .config import Location, NodeProfile, TaskSpec, derive_rng
from .power import PowerProblem, optimal_power_bs, optimal_power_device, optimal_power_uav
from .radio import LinkBudget


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} ({self.seconds:.2f}s) {info}"


def _fmt(v):
    return f"{v:.3g}" if isinstance(v, float) else str(v)


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    run.__name__, run.__doc__ = fn.__name__, fn.__doc__
    return run


# ---------------------------------------------------------------- DT latency
@_timed
def dt_latency_identity(n: int = 10_000, seed: int = 0, tol: float = 1e-12) -> OracleResult:
    """Estimated time plus latency gap equals D*C/(f_est - f_dev)."""
    rng = derive_rng(seed, "oracle", "latency")
    worst = 0.0
    for _ in range(n):
        D = rng.uniform(1e6, 2e8)
        C = rng.uniform(1, 100)
        f_est = rng.uniform(1e8, 1e10)
        f_dev = rng.uniform(-0.9, 0.9) * f_est
        ref = D * C / (f_est - f_dev)
        got = estimated_time(D, C, f_est) + latency_gap(D, C, f_est, f_dev)
        worst = max(worst, abs(got - ref) / ref)
    return OracleResult("dt_latency_identity", worst <= tol, {"draws": n, "max_rel_err": worst})


# ------------------------------------------------------------------- powers
B, SIGMA2, BETA0 = 100e6, 1e-9, 1e-3


def _power_instance(rng, kind: str):
    """Random link, task and server frequency whose uncapped optimal power
    is below the cap; returns the solution and the time budget it fills."""
    while True:
        D = rng.uniform(50e6, 150e6)
        C = rng.uniform(5, 30)
        T = rng.uniform(0.5, 1.5)
        d = rng.uniform(10, 1500)
        link = LinkBudget(d, BETA0 / d ** 2)
        task = TaskSpec(D, C, T)
        p_max = rng.uniform(0.5, 5.0)
        f = rng.uniform(3e9, 1e10)
        f_dev = rng.uniform(-0.1, 0.1) * f
        if kind == "relay":
            t1 = rng.uniform(0.05, 0.6) * T
            try:
                sol = optimal_power_bs(task, t1, link, B, SIGMA2, p_max)
            except ValueError:
                continue
            budget = T - t1
        else:
            solver = optimal_power_device if kind == "device" else optimal_power_uav
            try:
                sol = solver(task, link, f, f_dev, B, SIGMA2, p_max)
            except ValueError:
                continue
            budget = T - D * C / (f - f_dev)
        if not sol.capped:
            return sol, PowerProblem(D, budget, link.gain, B, SIGMA2, p_max)


@_timed
def power_theorems(n: int = 1000, points: int = 1000, seed: int = 0,
                   eq_tol: float = 1e-9) -> OracleResult:
    """Uncapped optimal powers fill the time budget exactly and no grid
    power meets the budget with less transmission energy."""
    rng = derive_rng(seed, "oracle", "power")
    detail = {}
    ok = True
    for kind in ("device", "uav", "relay"):
        worst_eq, beaten = 0.0, 0
        for _ in range(n):
            sol, prob = _power_instance(rng, kind)
            t = prob.D / (prob.B * math.log2(1 + sol.p_star * prob.gain / prob.sigma2))
            worst_eq = max(worst_eq, abs(t - prob.t_budget) / prob.t_budget)
            grid = np.linspace(prob.p_max / points, prob.p_max, points)
            t_grid = prob.D / (prob.B * np.log2(1 + grid * prob.gain / prob.sigma2))
            e_grid = grid * t_grid
            e_star = sol.p_star * t
            feasible = t_grid <= prob.t_budget
            beaten += int(np.any(e_grid[feasible] < e_star * (1 - 1e-12)))
        detail[f"{kind}_eq_err"] = worst_eq
        detail[f"{kind}_beaten"] = beaten
        ok &= worst_eq <= eq_tol and beaten == 0
    return OracleResult("power_theorems", ok, detail)


@_timed
def power_monotonicity(links: int = 100, points: int = 1000, seed: int = 0) -> OracleResult:
    """p * D / R(p) is nondecreasing on a power grid for every link type."""
    rng = derive_rng(seed, "oracle", "monotone")
    violations = 0
    for _ in range(3 * links):  # device, UAV and UAV->BS links alike
        d = rng.uniform(1, 3000)
        gain = BETA0 / d ** 2
        D = rng.uniform(1e6, 2e8)
        p = np.linspace(1e-4, rng.uniform(0.5, 5.0), points)
        e = p * D / (B * np.log2(1 + p * gain / SIGMA2))
        violations += int(np.sum(np.diff(e) < -1e-12 * e[1:]))
    return OracleResult("power_monotonicity", violations == 0, {"links": 3 * links, "violations": violations})


# ----------------------------------------------------------------- capacity
def random_record(rng, kind: str, f_dev_frac: float = 0.1):
    """A one-task record with random geometry and deviations; plan and true
    views coincide."""
    from .allocation import TaskRecord

    def node(i, loc, f_max, p_max):
        return NodeProfile(i, loc, f_max, float(rng.uniform(-f_dev_frac, f_dev_frac) * f_max), f_max,
                           1e-26, p_max, 1e6)

    mtu_loc = Location(*rng.uniform(0, 400, size=2))
    devices = tuple(node(k, Location(*rng.uniform(0, 400, size=2)), 8e9, 1.0) for k in range(2))
    fhps = (Location(100.0, 200.0, 500.0), Location(300.0, 200.0, 500.0))
    uav = node(0, fhps[0], 10e9, 5.0)
    phy = Physics(B, SIGMA2, BETA0, 0.11, 0.08, 20.0)
    ctx = TaskContext(mtu_loc, node(0, Location(0, 0), 6e9, 1.0), devices, uav, fhps[0], fhps,
                      Location(-1200.0, 200.0), phy)
    task = TaskSpec(float(rng.uniform(50e6, 150e6)), 30.0, float(rng.uniform(0.75, 1.5)))
    return TaskRecord(0, 0, task, OffloadDecision(kind, int(rng.integers(2))), ctx, ctx)


def small_instance(seed: int):
    """Records of one episode of a two-MTU, one-device, two-slot scenario
    under random placements (relay excluded: it has no frequency)."""
    from .config import ScenarioConfig
    from .env import OffloadEnv

    cfg = ScenarioConfig(M=2, K=1, Q=1, fhp_rows=1, fhp_cols=1, N=2, seed=seed)
    env = OffloadEnv(cfg)
    rng = derive_rng(seed, "oracle", "placements")
    env.reset(0)
    while not env.done:
        env.step(int(rng.choice([0, 2, 3])))
    return [st.record for st in env.steps]


def _grid_task(record, alloc, step: float):
    """Cheapest on-time (compute, transmit) energy on a uniform frequency
    grid, from closed formulas; ``None`` when no grid point is on time."""
    ctx, task, kind = record.plan, record.task, record.decision.kind
    D, C, T = task.data_bits, task.cycles_per_bit, task.deadline
    node = ctx.mtu if kind == LOCAL else ctx.uav if kind == UAV else ctx.devices[record.decision.index]
    t_tx = e_tx = 0.0
    if kind != LOCAL:
        far = ctx.devices[record.decision.index].location if kind == DEVICE else ctx.fhps[record.decision.index]
        near = ctx.mtu_location
        d2 = (near.x - far.x) ** 2 + (near.y - far.y) ** 2 + (near.z - far.z) ** 2
        p = alloc.p_device if kind == DEVICE else alloc.p_uav
        t_tx = D / (ctx.phy.B * math.log2(1 + p * ctx.phy.beta0 / d2 / ctx.phy.sigma2))
        e_tx = p * t_tx
    f = np.arange(step, node.f_max + step / 2, step)
    f = f[f > node.f_dev]
    ok = t_tx + D * C / (f - node.f_dev) <= T * (1 + 1e-9)
    if not ok.any():
        return None
    e = node.kappa * (f[ok] - node.f_dev) ** 2 * C * D
    i = int(np.argmin(e))
    return float(f[ok][i]), float(e[i]), e_tx


@_timed
def capacity_oracle(n: int = 50, step: float = 1e6, seed: int = 0, energy_rtol: float = 1e-3) -> OracleResult:
    """``solve_capacity`` against an exhaustive frequency grid on small
    scenario instances."""
    from .allocation import initial_allocation, power_step
    from .capacity import solve_capacity
    from .compute import compute_energy

    worst_f, worst_e, tasks, mismatched = 0.0, 0.0, 0, 0
    for k in range(n):
        records = small_instance(seed * 1000 + k)
        allocs = [power_step(r, initial_allocation(r)) for r in records]
        res = solve_capacity(records, allocs)
        got_total = ref_total = 0.0
        for i, (rec, alloc) in enumerate(zip(records, res.allocations)):
            ref = _grid_task(rec, allocs[i], step)
            if ref is None:
                mismatched += int(i not in res.infeasible)
                continue
            mismatched += int(i in res.infeasible)
            f_ref, e_ref, e_tx = ref
            kind = rec.decision.kind
            got = alloc.f_local if kind == LOCAL else alloc.f_device if kind == DEVICE else alloc.f_uav
            node = rec.plan.mtu if kind == LOCAL else rec.plan.uav if kind == UAV else \
                rec.plan.devices[rec.decision.index]
            worst_f = max(worst_f, abs(got - f_ref))
            got_total += compute_energy(rec.task.data_bits, rec.task.cycles_per_bit, got, node.f_dev,
                                        node.kappa) + e_tx
            ref_total += e_ref + e_tx
            tasks += 1
        if ref_total > 0:
            worst_e = max(worst_e, abs(got_total - ref_total) / ref_total)
    ok = tasks > 0 and worst_f <= step and worst_e <= energy_rtol and mismatched == 0
    return OracleResult("capacity_oracle", ok, {"instances": n, "tasks": tasks, "max_f_gap_hz": worst_f,
                                                "max_energy_rel": worst_e, "infeasible_mismatch": mismatched})


# ---------------------------------------------------------------- learning
@_timed
def gradient_check(nets: int = 20, seed: int = 0, tol: float = 1e-4, h: float = 1e-6) -> OracleResult:
    """Backprop gradients against central finite differences."""
    from .ddqn import QNetwork

    rng = derive_rng(seed, "oracle", "gradient")
    worst = 0.0
    for _ in range(nets):
        sizes = [int(rng.integers(2, 6)), *rng.integers(3, 8, size=int(rng.integers(1, 3))), int(rng.integers(2, 5))]
        net = QNetwork.init([int(s) for s in sizes], rng)
        x = rng.normal(size=(6, sizes[0]))
        a = rng.integers(sizes[-1], size=6)
        y = rng.normal(size=6)
        _, gw, gb = net.loss_and_grads(x, a, y)
        for params, grads in ((net.weights, gw), (net.biases, gb)):
            for p, g in zip(params, grads):
                num = np.zeros_like(p)
                for idx in np.ndindex(p.shape):
                    keep = p[idx]
                    p[idx] = keep + h
                    up = net.loss_and_grads(x, a, y)[0]
                    p[idx] = keep - h
                    down = net.loss_and_grads(x, a, y)[0]
                    p[idx] = keep
                    num[idx] = (up - down) / (2 * h)
                scale = max(np.linalg.norm(num), np.linalg.norm(g), 1e-12)
                worst = max(worst, float(np.linalg.norm(num - g) / scale))
    return OracleResult("gradient_check", worst <= tol, {"nets": nets, "max_rel_err": worst})


TOY_TRAIN = dict(epsilon=1.0, epsilon_decrement=2e-4, epsilon_floor=0.1, discount=0.5, learning_rate=0.05,
                 batch_size=32, memory=500, target_sync=50, episodes=250, hidden=(16,), dtype="float64")


@_timed
def toy_mdp(seeds: int = 5, tol: float = 0.05, max_steps: int = 5000) -> OracleResult:
    """DDQN on a two-state MDP reaches the value-iteration optimum."""
    from .ddqn import ToyMDP, TrainConfig, train

    q_star = ToyMDP.q_star(TOY_TRAIN["discount"])
    detail, ok = {}, True
    for seed in range(seeds):
        env = ToyMDP(seed=seed)
        res = train(env, TrainConfig(seed=seed, **TOY_TRAIN), "ddqn")
        q = res.online.forward(np.eye(2))
        err = float(np.max(np.abs(q - q_star)))
        steps = TOY_TRAIN["episodes"] * env.horizon
        optimal = bool(np.array_equal(q.argmax(axis=1), q_star.argmax(axis=1)))
        detail[f"seed{seed}_err"] = err
        ok &= optimal and err <= tol and steps <= max_steps
    return OracleResult("toy_mdp", ok, detail)


def overestimation_instance():
    """Online and target nets that disagree on the best next action: the
    online net prefers an action the target net values low."""
    from .ddqn import QNetwork

    online = QNetwork([np.array([[1.0, 3.0]])], [np.zeros(2)])
    target = QNetwork([np.array([[2.0, 0.5]])], [np.zeros(2)])
    return online, target, np.array([[1.0]])


@_timed
def target_rules() -> OracleResult:
    """Double targets sit below max targets when the nets disagree and
    match them when the nets coincide."""
    from .ddqn import ddqn_target, dqn_target

    online, target, s2 = overestimation_instance()
    d = ddqn_target(0.0, s2, False, online, target, 0.9)
    q = dqn_target(0.0, s2, False, target, 0.9)
    same_d = ddqn_target(1.0, s2, False, target, target, 0.9)
    same_q = dqn_target(1.0, s2, False, target, 0.9)
    ok = d < q and abs(same_d - same_q) <= 1e-15 * max(1.0, abs(same_q))
    return OracleResult("target_rules", ok, {"ddqn": d, "dqn": q, "equal_gap": abs(same_d - same_q)})


# ---------------------------------------------------------------- mobility
@_timed
def gmrm_statistics(mu1_values=(0.0, 0.5, 0.99), steps: int = 100_000, v_bar: float = 5.0,
                    std: float = 1.0, seed: int = 0) -> OracleResult:
    """Long-run mean speed lies in the 99% CI of v_bar, using the AR(1)
    variance inflation (1 + mu1) / (1 - mu1)."""
    from .mobility import MobilityConfig, step_velocity

    detail, ok = {}, True
    for mu1 in mu1_values:
        cfg = MobilityConfig(mu1, 0.5, v_bar, (0.0,), (0.0, std))
        rng = derive_rng(seed, "oracle", "gmrm", int(round(mu1 * 100)))
        v, total = v_bar, 0.0
        for _ in range(steps):
            v = step_velocity(v, cfg, rng)
            total += v
        mean = total / steps
        half = 2.5758 * std * math.sqrt((1 + mu1) / (1 - mu1) / steps) if mu1 < 1 else math.inf
        detail[f"mu1={mu1}"] = f"{mean:.4f}+-{half:.4f}"
        ok &= abs(mean - v_bar) <= half
    return OracleResult("gmrm_statistics", ok, detail)


def run_all(quick: bool = False):
    """Every oracle; ``quick`` shrinks the sample sizes."""
    scale = 10 if quick else 1
    return [
        dt_latency_identity(n=10_000 // scale),
        power_theorems(n=1000 // scale),
        power_monotonicity(links=100 // scale),
        capacity_oracle(n=50 // scale if quick else 50),
        gradient_check(nets=20 // scale if quick else 20),
        toy_mdp(seeds=1 if quick else 5),
        target_rules(),
        gmrm_statistics(steps=100_000 // scale),
    ]


__all__ = ["OracleResult", "dt_latency_identity", "power_theorems", "power_monotonicity", "capacity_oracle",
           "gradient_check", "toy_mdp", "target_rules", "gmrm_statistics", "overestimation_instance",
           "random_record", "run_all", "TOY_TRAIN"]
