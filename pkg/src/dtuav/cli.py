"""Command-line driver: ``train``, ``sweep``, ``report`` and ``verify``.

Outputs follow ``<out>/<experiment>/<design>/<seed>/``; every CSV is a
pure function of (config, seed, design) so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .baselines import DESIGNS, METRICS_HEADER, PolicyCache, run_design, write_metrics_csv
from .config import ConfigError, ScenarioConfig, dump_config, load_config
from .ddqn import TrainConfig, save_checkpoint, write_curve_csv
from .joint import JointConfig

SWEEP_VARIABLES = ("L", "M", "deviation_delta", "f_max_mtu", "learning_rate")
RUNS_HEADER = ["variable", "value", "design", "seed", "total_energy", "mtu_energy", "uav_energy", "violations"]
SUMMARY_HEADER = ["variable", "value", "design", "runs", "mean_energy", "std_energy", "mean_violations"]


@dataclass(frozen=True)
class SweepSpec:
    """``L`` is in Mbit (task sizes drawn from [0.8 L, 1.2 L]) and
    ``f_max_mtu`` in GHz; the other variables take raw values."""

    variable: str
    values: tuple
    seeds: tuple
    designs: tuple

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; choose from {', '.join(SWEEP_VARIABLES)}")
        if not (self.values and self.seeds and self.designs):
            raise ValueError("values, seeds and designs must be nonempty")
        bad = [d for d in self.designs if d not in DESIGNS]
        if bad:
            raise ValueError(f"unknown design(s) {', '.join(bad)}; choose from {', '.join(DESIGNS)}")
        for v in self.values:  # fail before any training starts
            apply_sweep_value(ScenarioConfig(), TrainConfig(), self.variable, v)


def apply_sweep_value(cfg: ScenarioConfig, train_cfg: TrainConfig, variable: str, value: float):
    if variable == "L":
        return cfg.replace(data_bits_min=0.8 * value * 1e6, data_bits_max=1.2 * value * 1e6), train_cfg
    if variable == "M":
        if value != int(value):
            raise ConfigError("M must be an integer")
        return cfg.replace(M=int(value)), train_cfg
    if variable == "deviation_delta":
        return cfg.replace(deviation_mode="positive", deviation_delta=value), train_cfg
    if variable == "f_max_mtu":
        return cfg.replace(f_max_mtu=value * 1e9), train_cfg
    if variable == "learning_rate":
        return cfg, replace(train_cfg, learning_rate=value)
    raise ValueError(f"unknown sweep variable {variable!r}")


def _fmt(v) -> str:
    return f"{v:.9g}" if isinstance(v, float) else str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([_fmt(v) for v in row] for row in rows)


def _base_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if args.literal_eq7:
        changes["literal_eq7"] = True
    return cfg.replace(**changes) if changes else cfg


def _train_config(args, seed: int) -> TrainConfig:
    kw = {"seed": seed}
    if args.episodes is not None:
        kw["episodes"] = args.episodes
    return TrainConfig(**kw)


def write_run(result, cfg: ScenarioConfig, cell: Path) -> None:
    """Per-run artifacts: config, metrics, convergence log, trace and, for
    learned designs, the checkpoint and learning curve."""
    cell.mkdir(parents=True, exist_ok=True)
    (cell / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
    write_metrics_csv(cell / "metrics.csv", [result])
    result.joint.log.write_csv(cell / "convergence.csv")
    from .env import write_trace_csv
    write_trace_csv(cell / "trace.csv", result.joint.trace)
    training = result.joint.training
    if training is not None:
        write_curve_csv(cell / "curve.csv", training.curve)
        save_checkpoint(cell / "checkpoint.json", training.online,
                        {"design": result.design, "seed": result.seed, "train_steps": training.train_steps})


# -------------------------------------------------------------------- train
def cmd_train(args) -> int:
    cfg = _base_config(args)
    joint = JointConfig(retrain_policy=args.retrain_policy)
    result = run_design(args.design, cfg, _train_config(args, cfg.seed), joint)
    cell = Path(args.out) / args.experiment / args.design / str(cfg.seed)
    write_run(result, cfg, cell)
    m = result.metrics
    print(f"{args.design} seed={cfg.seed} energy={m.total_energy:.6g} J violations={m.violations} "
          f"iterations={result.joint.log.iterations} -> {cell}")
    return 0


# -------------------------------------------------------------------- sweep
def _sweep_cell(job):
    """One (value, seed) cell running every design with a shared policy
    cache, so designs that reuse a policy train it once."""
    spec, value, seed, base, episodes, retrain, root = job
    cfg, train_cfg = apply_sweep_value(base.replace(seed=seed), TrainConfig(seed=seed), spec.variable, value)
    if episodes is not None:
        train_cfg = replace(train_cfg, episodes=episodes)
    cache, rows = PolicyCache(), []
    for design in spec.designs:
        res = run_design(design, cfg, train_cfg, JointConfig(retrain_policy=retrain), cache)
        write_run(res, cfg, Path(root) / design / str(seed) / f"{spec.variable}={_fmt(float(value))}")
        m = res.metrics
        rows.append([spec.variable, float(value), design, seed, m.total_energy, m.mtu_energy, m.uav_energy,
                     m.violations])
    return rows


def summarize(rows):
    """Mean and sample std of energy per (variable, value, design)."""
    groups = {}
    for var, value, design, _, energy, _, _, viol in rows:
        groups.setdefault((var, float(value), design), []).append((float(energy), float(viol)))
    out = []
    for (var, value, design), vals in groups.items():
        e = np.array([v[0] for v in vals])
        out.append([var, value, design, len(vals), float(e.mean()),
                    float(e.std(ddof=1)) if len(e) > 1 else 0.0, float(np.mean([v[1] for v in vals]))])
    return out


def run_sweep(spec: SweepSpec, base: ScenarioConfig, root: Path, episodes=None, workers: int = 1,
              retrain: bool = False):
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, v, s, base, episodes, retrain, str(root)) for v in spec.values for s in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]
    order = {d: i for i, d in enumerate(spec.designs)}
    rows = sorted((r for cell in results for r in cell), key=lambda r: (r[1], order[r[2]], r[3]))
    _write_csv(root / "runs.csv", RUNS_HEADER, rows)
    summary = summarize(rows)
    _write_csv(root / "summary.csv", SUMMARY_HEADER, summary)
    return rows, summary


def _numbers(text: str, kind=float):
    try:
        return tuple(kind(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}") from None


def cmd_sweep(args) -> int:
    spec = SweepSpec(args.variable, args.values, args.seeds, args.designs)
    base = _base_config(args)
    root = Path(args.out) / (args.experiment or f"sweep_{args.variable}")
    _, summary = run_sweep(spec, base, root, args.episodes, args.workers, args.retrain_policy)
    for var, value, design, n, mean, std, viol in summary:
        print(f"{var}={value:g} {design:15s} energy={mean:.6g} +- {std:.3g} J violations={viol:.2f} (n={n})")
    print(f"wrote {root / 'runs.csv'} and {root / 'summary.csv'}")
    return 0


# ------------------------------------------------------------------- report
def read_runs(path: Path):
    """Rows of a sweep ``runs.csv`` or a single-run ``metrics.csv``, as
    dicts with a ``value`` key (``nan`` when there is none)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if header not in (RUNS_HEADER, METRICS_HEADER):
            raise ValueError(f"{path}: unrecognized header {header}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    for r in rows:
        r.setdefault("variable", "")
        r["value"] = float(r.get("value") or "nan")
        for key in ("total_energy", "mtu_energy", "uav_energy", "violations"):
            r[key] = float(r[key])
    return rows


def energy_gap(base: float, proposed: float) -> float:
    """Fractional saving of ``proposed`` over ``base``; negative when the
    proposed design uses more energy."""
    return (base - proposed) / base if base else 0.0


def report(rows, reference: str = "proposed"):
    """Per-design means, gaps against ``reference`` and violation totals,
    pooled over all sweep values."""
    designs = list(dict.fromkeys(r["design"] for r in rows))
    ref = reference if reference in designs else designs[0]
    mean = {d: float(np.mean([r["total_energy"] for r in rows if r["design"] == d])) for d in designs}
    viol = {d: int(sum(r["violations"] for r in rows if r["design"] == d)) for d in designs}
    runs = {d: sum(r["design"] == d for r in rows) for d in designs}
    return [(d, runs[d], mean[d], energy_gap(mean[d], mean[ref]), viol[d]) for d in designs], ref


def cmd_report(args) -> int:
    path = Path(args.csv)
    rows = read_runs(path)
    table, ref = report(rows, args.reference)
    lines = [f"{'design':15s} {'runs':>5s} {'mean energy (J)':>16s} {'gap vs ' + ref:>16s} {'violations':>10s}"]
    lines += [f"{d:15s} {n:5d} {m:16.6g} {g:+15.2%} {v:10d}" for d, n, m, g, v in table]
    text = "\n".join(lines)
    print(text)
    out = Path(args.out) if args.out else path.parent
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    _write_csv(out / "gaps.csv", ["design", "runs", "mean_energy", "gap_vs_" + ref, "violations"], table)
    if not args.no_plots:
        from . import plots
        for f in plots.render_report(rows, path.parent, out):
            print(f"figure {f}")
    return 0


# ------------------------------------------------------------------- verify
def cmd_verify(args) -> int:
    from .oracles import run_all
    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} oracles passed")
    return 1 if failed else 0


# ---------------------------------------------------------------- arguments
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtuav", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_flags(sp):
        sp.add_argument("--config", help="key = value scenario file (defaults when omitted)")
        sp.add_argument("--out", default="out", help="output root (default: out)")
        sp.add_argument("--episodes", type=int, help="training episodes (default 300)")
        sp.add_argument("--literal-eq7", action="store_true",
                        help="drive the direction update with the previous speed")
        sp.add_argument("--retrain-policy", action="store_true",
                        help="keep training the policy between alternation rounds")

    t = sub.add_parser("train", help="train and evaluate one design")
    scenario_flags(t)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--design", choices=DESIGNS, default="proposed")
    t.add_argument("--experiment", default="train")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="grid of (design x value x seed) runs")
    scenario_flags(s)
    s.add_argument("--variable", choices=SWEEP_VARIABLES, required=True)
    s.add_argument("--values", type=_numbers, required=True,
                   help="comma-separated; L in Mbit, f_max_mtu in GHz")
    s.add_argument("--seeds", type=lambda t: _numbers(t, int), default=(0, 1, 2, 3, 4))
    s.add_argument("--designs", type=lambda t: tuple(t.split(",")), default=DESIGNS)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--experiment")
    s.set_defaults(func=cmd_sweep, seed=None)

    r = sub.add_parser("report", help="summary table, gaps and figures from runs.csv or metrics.csv")
    r.add_argument("csv")
    r.add_argument("--reference", default="proposed")
    r.add_argument("--out", help="where to write report files (default: next to the CSV)")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=cmd_report)

    v = sub.add_parser("verify", help="run every property oracle")
    v.add_argument("--quick", action="store_true", help="smaller samples")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"dtuav {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
