"""Deterministic JSON/CSV writers and the run manifest.

Everything except the manifest is a pure function of the scenario and seed;
wall-clock times and timestamps live only in ``manifest.json``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .constants import MW_H2

SCHEDULE_COLUMNS = ("step", "price", "i", "T", "V_undeg", "V_deg_cuml", "h2_gen", "y_h2_anode", "soc", "purge",
                    "water_in", "to_storage", "from_storage", "direct_to_demand", "h2_net", "y_o2_anode",
                    "y_n2_anode", "power_kw")


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return obj.name
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ""
    return v


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def schedule_rows(schedule, r: int):
    """Rows of ``schedule_r<k>.csv`` for representative day ``r`` (0-based).

    ``V_deg_cuml`` and ``soc`` are absolute values on the cluster's medoid
    day: degradation carried in from earlier days plus the day's own, and the
    inventory level in mol.
    """
    tr = schedule.trajectories
    medoid = int(schedule.problem.rep_days.medoid_indices[r])
    carried = schedule.ledger.start_of_day()[medoid]
    level = schedule.storage.level[medoid]
    for t in range(tr["current_density"].shape[1]):
        yield (t, tr["price"][r, t], tr["current_density"][r, t], tr["temperature"][r, t], tr["v_undeg"][r, t],
               carried + tr["v_deg_intraday"][r, t], tr["h2_gen"][r, t], tr["y_h2_anode"][r, t],
               level + schedule.storage.soc_rep[r, t + 1], tr["n2_purge"][r, t], tr["water_in"][r, t],
               tr["to_storage"][r, t], tr["from_storage"][r, t], tr["direct_to_demand"][r, t], tr["h2_net"][r, t],
               tr["y_o2_anode"][r, t], tr["y_n2_anode"][r, t], tr["power_total_kw"][r, t])


def write_schedule(schedule, out_dir) -> list:
    out_dir = Path(out_dir)
    paths = []
    for r in range(schedule.problem.rep_days.k):
        paths.append(write_csv(out_dir / f"schedule_r{r + 1}.csv", SCHEDULE_COLUMNS, schedule_rows(schedule, r)))
    paths.append(write_json(out_dir / "schedule_summary.json", schedule_summary(schedule)))
    return paths


def schedule_summary(schedule) -> dict:
    p = schedule.problem
    return {
        "status": schedule.status,
        "iterations": schedule.iterations,
        "objective": schedule.objective,
        "vopex": schedule.vopex.as_dict(),
        "vopex_cumulative_degradation_share": schedule.vopex.elec_degradation_share,
        "peak_power_kw": schedule.peak_power_kw,
        "daily_h2_kg": schedule.daily_h2_kg,
        "end_of_year_degradation_v": schedule.end_of_year_degradation,
        "per_rep_day_degradation_v": schedule.ledger.per_rep_day_delta,
        "storage": {
            "capacity_kg": p.capacity_mol * MW_H2,
            "delta_kg": schedule.storage.delta * MW_H2,
            "start_of_year_kg": schedule.storage.level[0] * MW_H2,
            "bound_violation_kg": schedule.storage.bound_violation() * MW_H2,
        },
        "constraint_violation": schedule.constraint_violation,
        "design": {"n_cells": p.n_cells, "storage_days": p.storage_days},
        "dt_hours": p.dt_hours,
        "steps_per_day": p.steps_per_day,
    }


GSS_COLUMNS = ("iteration", "winner", "new_evaluations", "n_cells_lo", "n_cells_hi", "storage_lo", "storage_hi",
               "A_n_cells", "A_storage_days", "A_pv", "B_n_cells", "B_storage_days", "B_pv",
               "C_n_cells", "C_storage_days", "C_pv", "D_n_cells", "D_storage_days", "D_pv",
               "incumbent_n_cells", "incumbent_storage_days", "incumbent_pv")


def write_gss_trace(trace, path) -> Path:
    return write_csv(path, GSS_COLUMNS, ([row[c] for c in GSS_COLUMNS] for row in trace))


BREAKDOWN_COLUMNS = ("scenario", "capex", "planned_replacement", "unplanned_replacement", "fopex", "vopex", "lcoh")


def write_lcoh_breakdown(rows, path) -> Path:
    """``rows`` is a list of (scenario name, CostReport)."""
    out = []
    for name, rep in rows:
        b = rep.breakdown()
        out.append((name, b["capex"], b["planned_replacement"], b["unplanned_replacement"], b["fopex"], b["vopex"],
                    rep.lcoh))
    return write_csv(path, BREAKDOWN_COLUMNS, out)


def current_histogram(schedule, bins=None):
    """Hours per year spent in each current-density bin."""
    p = schedule.problem
    bins = np.linspace(p.i_bounds[0], p.i_bounds[1], 40) if bins is None else bins
    i = schedule.trajectories["current_density"]
    weights = np.repeat(p.rep_days.weights[:, None], i.shape[1], axis=1) * p.dt_hours
    hours, edges = np.histogram(i, bins=bins, weights=weights)
    return edges, hours


def write_plot_data(schedule, series, out_dir) -> list:
    """Plot-ready CSVs: current histogram and price/current duration curves."""
    out_dir = Path(out_dir)
    edges, hours = current_histogram(schedule)
    paths = [write_csv(out_dir / "current_histogram.csv", ("i_lo", "i_hi", "hours"),
                       zip(edges[:-1], edges[1:], hours))]
    p = schedule.problem
    annual_i = schedule.trajectories["current_density"][p.rep_days.mapping]  # (days, steps)
    hourly_i = _to_hourly(annual_i, p.dt_hours).ravel()
    price = series.duration_curve()
    n = min(price.size, hourly_i.size)
    rows = zip(np.arange(1, n + 1), price[:n], np.sort(hourly_i)[::-1][:n])
    paths.append(write_csv(out_dir / "duration_curves.csv", ("hours_exceeded", "price", "current_density"), rows))
    return paths


def _to_hourly(x, dt_hours):
    """Average sub-hourly steps to hours, or hold coarser steps for each hour."""
    if dt_hours <= 1:
        per = round(1 / dt_hours)
        return x.reshape(x.shape[0], -1, per).mean(axis=2)
    return np.repeat(x, round(dt_hours), axis=1)


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files, meta: dict) -> Path:
    """List every output file with its checksum, plus run metadata."""
    out_dir = Path(out_dir)
    entries = []
    for f in sorted({Path(f).resolve() for f in files}):
        entries.append({"file": str(f.relative_to(out_dir.resolve())), "sha256": sha256(f), "bytes": f.stat().st_size})
    return write_json(out_dir / "manifest.json", {**meta, "files": entries})
