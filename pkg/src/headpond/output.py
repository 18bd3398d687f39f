"""Trajectory CSV, metrics reports and SVG charts."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .integrate import Trajectory
from .scenarios import Comparison, Metrics, Scenario

CSV_COLUMNS = ("t", "x0", "x1", "x2", "Qt", "xs", "U1", "U2", "s1", "s2", "d")


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """One row per recorded sample; floats written round-trip exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for t, s, u, d in zip(traj.t, traj.states, traj.controls, traj.disturbance):
            writer.writerow([repr(float(v)) for v in (t, *s, *u, d)])
    return path


def read_trajectory_csv(path: str | Path, plant: str = "three-pond") -> Trajectory:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(CSV_COLUMNS))
    return Trajectory(data[:, 0], data[:, 1:6], data[:, 6:10], data[:, 10], plant=plant)


def _minutes(value: float | None) -> str:
    return "not settled" if value is None else f"{value / 60:.1f} min"


def format_metrics(scenario: Scenario, metrics: Metrics) -> str:
    lines = [
        f"[{scenario.name}] {scenario.plant}, {scenario.controller} control, "
        f"targets {'/'.join(f'{v:g}' for v in scenario.targets)} m, band {metrics.band:g} m"
    ]
    ponds = (0,) if scenario.plant == "single-pond" else (0, 1, 2)
    for i in ponds:
        lines.append(
            f"  pond {i}: settling {_minutes(metrics.settling_time[i])}, "
            f"steady-state error {metrics.steady_state_error[i]:.3f} m, "
            f"overshoot {metrics.overshoot[i]:.2f} m, "
            f"steady-state peak-to-peak {metrics.peak_to_peak[i]:.3f} m"
        )
        if metrics.peak_deviation is not None:
            lines.append(
                f"          peak deviation {metrics.peak_deviation[i]:.3f} m, "
                f"return to band {_minutes(metrics.return_to_band[i])} after onset"
            )
    return "\n".join(lines)


def format_comparison(cmp: Comparison) -> str:
    parts = [
        format_metrics(cmp.first, cmp.first_metrics),
        format_metrics(cmp.second, cmp.second_metrics),
        f"  settles first: {cmp.faster or 'tie'}",
    ]
    if cmp.first_metrics.peak_deviation is not None:
        parts.append(f"  head-pond peak deviation ratio (second/first): {cmp.ratio('peak_deviation'):.2f}")
    if cmp.first.disturbance.kind.value != "none":
        parts.append(f"  head-pond peak-to-peak ratio (second/first): {cmp.ratio('peak_to_peak'):.2f}")
    return "\n".join(parts)


def metrics_document(scenario: Scenario, metrics: Metrics) -> dict:
    return {
        "scenario": scenario.name,
        "plant": scenario.plant,
        "controller": scenario.controller,
        "targets": list(scenario.targets),
        "onset": scenario.disturbance.onset,
        "metrics": {k: list(v) if isinstance(v, tuple) else v for k, v in metrics.as_dict().items()},
    }


def write_metrics_json(docs: Sequence[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(list(docs), indent=2) + "\n", encoding="utf-8")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "headpond"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_levels(traj: Trajectory, scenario: Scenario, path: str | Path) -> Path:
    """Pond levels against time in minutes, with dashed target lines."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    minutes = traj.t / 60.0
    styles = (("pond 0", "tab:blue", "-"), ("pond 1", "tab:red", ":"), ("pond 2", "tab:green", "-"))
    ponds = 1 if scenario.plant == "single-pond" else 3
    for i in range(ponds):
        label, color, ls = styles[i]
        ax.plot(minutes, traj.levels[:, i], color=color, linestyle=ls, label=label)
        ax.axhline(scenario.targets[i], color=color, linestyle="--", linewidth=0.6)
    ax.set_xlabel("time (min)")
    ax.set_ylabel("water level (m)")
    ax.set_title(scenario.description or scenario.name)
    ax.grid(True, alpha=0.3)
    ax.legend()
    out = _save(fig, Path(path))
    plt.close(fig)
    return out


def plot_comparison(cmp: Comparison, path: str | Path) -> Path:
    """Head-pond response of both legs.

    Disturbance comparisons plot the deviation from target; the others plot
    the level itself.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    deviation = cmp.first.disturbance.kind.value != "none"
    for sc, traj, color, ls in (
        (cmp.first, cmp.first_traj, "tab:red", ":"),
        (cmp.second, cmp.second_traj, "tab:blue", "-"),
    ):
        y = traj.levels[:, 0] - (sc.targets[0] if deviation else 0.0)
        ax.plot(traj.t / 60.0, y, color=color, linestyle=ls, label=f"{sc.plant}, {sc.controller}")
    if deviation:
        ax.axhline(0.0, color="grey", linewidth=0.6)
        ax.set_ylabel("head-pond deviation from target (m)")
    else:
        ax.axhline(cmp.first.targets[0], color="grey", linestyle="--", linewidth=0.6)
        ax.set_ylabel("head-pond level (m)")
    ax.set_xlabel("time (min)")
    ax.set_title(cmp.first.description)
    ax.grid(True, alpha=0.3)
    ax.legend()
    out = _save(fig, Path(path))
    plt.close(fig)
    return out

