"""PNG figures for a solved run (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .constants import MW_H2  # noqa: E402
from .reports import current_histogram  # noqa: E402

_META = {"Software": None}  # keep PNG bytes independent of the matplotlib build string


def _save(fig, path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return Path(path)


def operation_profiles(schedule, path) -> Path:
    """Price, current density, temperature and storage over each representative day."""
    p = schedule.problem
    tr = schedule.trajectories
    k, n = tr["current_density"].shape
    hours = (np.arange(n) + 1) * p.dt_hours
    fig, axes = plt.subplots(3, k, figsize=(3.2 * k + 1, 7), sharex=True, squeeze=False)
    for r in range(k):
        ax = axes[0, r]
        ax.step(hours, tr["current_density"][r], where="post", color="C0")
        ax.set_ylim(0, p.i_bounds[1] * 1.05)
        ax.set_title(f"rep day {r + 1} (w={p.rep_days.weights[r]})", fontsize=9)
        twin = ax.twinx()
        twin.step(hours, tr["price"][r], where="post", color="C3", alpha=0.6)
        if r == k - 1:
            twin.set_ylabel("price ($/MWh)", color="C3")
        axes[1, r].plot(hours, tr["temperature"][r] - 273.15, color="C1")
        soc = (schedule.storage.level[p.rep_days.medoid_indices[r]] + schedule.storage.soc_rep[r, 1:]) * MW_H2 / 1e3
        axes[2, r].plot(hours, soc, color="C2")
        axes[2, r].set_xlabel("hour")
    axes[0, 0].set_ylabel("i (A/cm2)")
    axes[1, 0].set_ylabel("T (C)")
    axes[2, 0].set_ylabel("storage (t H2)")
    return _save(fig, path)


def current_histograms(schedules: dict, path) -> Path:
    """Annual hours per current-density bin, one series per labelled schedule."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, sched in schedules.items():
        edges, hours = current_histogram(sched)
        ax.stairs(hours, edges, label=label)
    ax.set_xlabel("current density (A/cm2)")
    ax.set_ylabel("hours per year")
    ax.legend()
    return _save(fig, path)


def lcoh_bars(reports: dict, path) -> Path:
    """Stacked LCOH contributions per scenario."""
    fig, ax = plt.subplots(figsize=(1.6 * len(reports) + 3, 4))
    names = list(reports)
    bottom = np.zeros(len(names))
    parts = ("capex", "planned_replacement", "unplanned_replacement", "fopex", "vopex")
    for part in parts:
        vals = np.array([reports[nm].breakdown()[part] for nm in names])
        ax.bar(names, vals, bottom=bottom, label=part.replace("_", " "))
        bottom += vals
    ax.set_ylabel("LCOH ($/kg)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def duration_curves(series, schedule, path) -> Path:
    p = schedule.problem
    annual_i = np.sort(schedule.trajectories["current_density"][p.rep_days.mapping].ravel())[::-1]
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    a.plot(np.arange(1, series.values.size + 1), series.duration_curve())
    a.set_xlabel("hours exceeded")
    a.set_ylabel("price ($/MWh)")
    b.plot((np.arange(annual_i.size) + 1) * p.dt_hours, annual_i, color="C1")
    b.set_xlabel("hours exceeded")
    b.set_ylabel("i (A/cm2)")
    return _save(fig, path)


def render_all(schedule, report, series, out_dir, label="run") -> list:
    out_dir = Path(out_dir)
    return [
        operation_profiles(schedule, out_dir / "operation_profiles.png"),
        current_histograms({label: schedule}, out_dir / "current_histogram.png"),
        lcoh_bars({label: report}, out_dir / "lcoh_bars.png"),
        duration_curves(series, schedule, out_dir / "duration_curves.png"),
    ]
