"""Matplotlib figures for ``dtuav report``."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

AXIS_LABELS = {
    "L": "task quantity L (Mbit)",
    "M": "number of MTUs M",
    "deviation_delta": "DT deviation fraction",
    "f_max_mtu": "MTU max CPU frequency (GHz)",
    "learning_rate": "learning rate",
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def energy_by_design(rows, path: Path) -> Path:
    designs = list(dict.fromkeys(r["design"] for r in rows))
    vals = [[r["total_energy"] for r in rows if r["design"] == d] for d in designs]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(designs, [np.mean(v) for v in vals], yerr=[np.std(v) for v in vals], capsize=3, color="tab:blue")
    ax.set_ylabel("total energy (J)")
    ax.tick_params(axis="x", rotation=30)
    return _save(fig, path)


def energy_vs_value(rows, variable: str, path: Path) -> Path:
    by = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by[r["design"]][r["value"]].append(r["total_energy"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for design, cells in by.items():
        xs = sorted(cells)
        ax.errorbar(xs, [np.mean(cells[x]) for x in xs], yerr=[np.std(cells[x]) for x in xs],
                    marker="o", capsize=3, label=design)
    ax.set_xlabel(AXIS_LABELS.get(variable, variable))
    ax.set_ylabel("total energy (J)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def _read_columns(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in (rows[0] if rows else {})}


def _label(curve_path: Path, root: Path) -> str:
    # <design>/<seed>[/<variable>=<value>]/curve.csv
    parts = curve_path.relative_to(root).parts[:-1]
    if len(parts) < 2:
        return "run"
    return " ".join((parts[0], *parts[2:]))


def learning_curves(root: Path, path: Path, window: int = 10):
    """Seed-averaged learning curves with a moving average."""
    groups = defaultdict(list)
    for f in sorted(root.glob("**/curve.csv")):
        cols = _read_columns(f)
        if cols:
            groups[_label(f, root)].append(cols["total_reward"])
    if not groups:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, curves in groups.items():
        n = min(len(c) for c in curves)
        mean = np.mean([c[:n] for c in curves], axis=0)
        k = max(1, min(window, n))
        ax.plot(np.convolve(mean, np.ones(k) / k, mode="valid"), label=label)
    ax.set_xlabel("episode")
    ax.set_ylabel("episode reward")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def convergence(root: Path, path: Path):
    files = sorted(root.glob("**/convergence.csv"))
    if not files:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for f in files:
        cols = _read_columns(f)
        if cols:
            ax.plot(cols["iteration"], cols["objective"], marker=".", alpha=0.6)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("planned objective (J)")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_report(rows, data_root: Path, out: Path) -> list:
    """Every figure that the available data supports; returns the paths."""
    figs = [energy_by_design(rows, out / "energy_by_design.png")]
    variables = {r["variable"] for r in rows if r["variable"]}
    for var in sorted(variables):
        sub = [r for r in rows if r["variable"] == var]
        figs.append(energy_vs_value(sub, var, out / f"energy_vs_{var}.png"))
    figs.append(learning_curves(data_root, out / "learning_curves.png"))
    figs.append(convergence(data_root, out / "convergence.png"))
    return [f for f in figs if f is not None]


__all__ = ["energy_by_design", "energy_vs_value", "learning_curves", "convergence", "render_report"]
