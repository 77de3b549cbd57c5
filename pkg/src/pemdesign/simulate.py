"""Forward simulation of a given operating schedule and constraint checking.

Controls per step (current density, feed water, N2 purge, storage charge and
discharge) are integrated with the same implicit Euler equations the scheduler
uses.  Given the temperature at the end of a step, every flow is explicit, so
each step reduces to one scalar root find on the energy balance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import balances as bal
from .constants import SECONDS_PER_HOUR
from .degradation import DegradationLedger, intraday_profile
from .electrochem import undegraded_voltage
from .prices import resample_day
from .schedule_opt import ScheduleProblem, VopexBreakdown, annual_vopex, plant_trajectories, steady_point
from .storage import StorageLink

LFL_H2_IN_O2 = 0.04
REQUIRED_COLUMNS = ("step", "i")


class ScheduleFormatError(ValueError):
    pass


@dataclass
class Violation:
    kind: str
    rep_day: int
    step: int
    value: float
    limit: float


@dataclass
class SimulationResult:
    trajectories: dict
    storage: StorageLink
    ledger: DegradationLedger
    vopex: VopexBreakdown
    violations: list = field(default_factory=list)
    lfl_fraction: float = 0.0  # weighted share of time points above the LFL

    def count(self, kind: str) -> int:
        return sum(v.kind == kind for v in self.violations)

    def summary(self) -> dict:
        kinds = sorted({v.kind for v in self.violations})
        return {
            "violations": {k: self.count(k) for k in kinds},
            "lfl_time_fraction": self.lfl_fraction,
            "vopex": self.vopex.as_dict(),
            "end_of_year_degradation_v": self.ledger.end_of_year,
        }


def _step(p: ScheduleProblem, i, w, purge, state, dv):
    """Advance one implicit Euler step; ``state`` is (T, y_h2, y_o2, y_n2) at the previous step."""
    ec, pl = p.electrochem, p.plant
    cell = p.cell
    dt = p.dt_hours * SECONDS_PER_HOUR
    T_p, yh_p, yo_p, yn_p = state
    rates = bal.faradaic_rates(i, cell)
    cross = bal.h2_crossover(i, ec.p_cathode, ec.p_anode, cell, pl.recombination, pl.crossover_coefficient)
    src = np.array([cross.h2_to_anode, rates.o2_gen - cross.o2_consumed, purge])
    y_prev = np.array([yh_p, yo_p, yn_p])
    n_an_p = bal.anode_gas_holdup(T_p, cell, ec.p_anode)
    n_cat_p = bal.cathode_h2_holdup(T_p, cell, ec.p_cathode)

    def flows_at(T):
        yv = bal.saturation_pressure(T) / ec.p_anode
        n_an = bal.anode_gas_holdup(T, cell, ec.p_anode)
        dry_acc = ((1 - yv) * n_an - (1 - bal.saturation_pressure(T_p) / ec.p_anode) * n_an_p) / dt
        g3 = (src.sum() - dry_acc) / (1 - yv)
        y = (src + y_prev * n_an_p / dt) / (g3 + n_an / dt)
        drag = bal.electroosmotic_drag(i, T, ec.p_cathode, cell, clamp=False)
        liq3 = w - yv * g3 - drag - rates.h2o_consumed + cross.water_from_recombination
        yv4 = bal.saturation_pressure(T) / ec.p_cathode
        g4 = (rates.h2_gen - cross.gross - (bal.cathode_h2_holdup(T, cell, ec.p_cathode) - n_cat_p) / dt) / (1 - yv4)
        return bal.FlowState(water_in=w, anode_out_liquid_water=liq3, anode_out_gas=g3,
                             cathode_out_liquid_water=drag - yv4 * g4, cathode_out_gas=g4, n2_purge=purge,
                             y_h2_anode=y[0], y_o2_anode=y[1], y_n2_anode=y[2], h2_net=(1 - yv4) * g4)

    def residual(T):
        v = undegraded_voltage(i, T, ec) + dv
        return (T - T_p) / dt - bal.energy_balance_rhs(T, flows_at(T), v, i, cell, ec.p_anode, ec.p_cathode)

    T = brentq(residual, 290.0, 372.0, xtol=1e-12, rtol=1e-14, maxiter=200)
    return T, flows_at(T)


def simulate(p: ScheduleProblem, controls: dict, initial: dict | None = None, periodic_sweeps: int = 0,
             temperature_tol: float = 1e-3, fraction_tol: float = 1e-6, flow_tol: float = 1e-6):
    """Integrate per-representative-day controls forward and check constraints.

    Parameters
    ----------
    controls : dict
        ``(k, steps)`` arrays: ``i`` (A/cm2) and optionally ``water_in``,
        ``n2_purge``, ``to_storage``, ``from_storage`` (plant mol/s).  Missing
        storage flows default to storing surplus and drawing deficits.
    initial : dict, optional
        State entering step 0: ``T`` and anode fractions per representative day.
        Defaults to a 70 C, O2-saturated start.
    periodic_sweeps : int
        Extra passes over each day restarting from the end state, to approach
        the periodic orbit when no consistent initial state is known.
    """
    i_all = np.atleast_2d(np.asarray(controls["i"], float))
    k, n = i_all.shape
    if n != p.steps_per_day or k != p.rep_days.k:
        raise ScheduleFormatError(f"expected {p.rep_days.k} x {p.steps_per_day} steps, got {k} x {n}")
    if np.any(~np.isfinite(i_all)) or np.any(i_all < 0):
        raise ScheduleFormatError("current density must be finite and non-negative")
    n_c = p.n_cells
    water = controls.get("water_in")
    purge = controls.get("n2_purge")
    per_cell = {name: np.zeros((k, n)) for name in ("T", "w", "g3", "liq3", "g4", "liq4", "purge", "y_h2", "y_o2",
                                                    "y_n2", "n13", "n15", "n16")}
    deg = np.array([intraday_profile(row, p.dt_hours, p.degradation) for row in i_all])
    for r in range(k):
        if initial is not None:
            state = (float(initial["T"][r]), float(initial["y_h2"][r]), float(initial["y_o2"][r]),
                     float(initial["y_n2"][r]))
        else:
            state = (343.15, 0.0, 1.0 - bal.saturation_pressure(343.15) / p.electrochem.p_anode, 0.0)
        for sweep in range(periodic_sweeps + 1):
            for t in range(n):
                i = i_all[r, t]
                pg = (purge[r, t] if purge is not None else 0.0) / n_c
                if water is None:
                    # steady-state feed at the previous temperature, with a small margin
                    w_cell = _default_feed(p, i, state[0])
                else:
                    w_cell = water[r, t] / n_c
                T, f = _step(p, i, w_cell, pg, state, deg[r, t])
                state = (T, f.y_h2_anode, f.y_o2_anode, f.y_n2_anode)
                if sweep == periodic_sweeps:
                    for name, val in (("T", T), ("w", w_cell), ("g3", f.anode_out_gas),
                                      ("liq3", f.anode_out_liquid_water), ("g4", f.cathode_out_gas),
                                      ("liq4", f.cathode_out_liquid_water), ("purge", pg), ("y_h2", f.y_h2_anode),
                                      ("y_o2", f.y_o2_anode), ("y_n2", f.y_n2_anode)):
                        per_cell[name][r, t] = val
    per_cell["i"] = i_all
    unit = p.flow_unit
    h2_net = n_c * (1 - bal.saturation_pressure(per_cell["T"]) / p.electrochem.p_cathode) * per_cell["g4"]
    demand = p.demand_mol_s
    charge = controls.get("to_storage")
    discharge = controls.get("from_storage")
    if charge is None:
        charge = np.maximum(h2_net - demand, 0.0)
    if discharge is None:
        discharge = np.maximum(demand - h2_net, 0.0)
    per_cell["n15"] = np.asarray(charge, float) / unit
    per_cell["n16"] = np.asarray(discharge, float) / unit
    per_cell["n13"] = h2_net / unit - per_cell["n15"]
    per_cell["dv"] = deg
    traj = plant_trajectories(p, per_cell, resample_day(p.rep_days.rep_days, p.dt_hours))

    net = per_cell["n15"] - per_cell["n16"]
    soc = np.cumsum(net * unit * p.dt_hours * SECONDS_PER_HOUR, axis=1)
    rel = StorageLink.from_solution(soc, np.zeros(p.rep_days.n_days), p.rep_days.mapping, p.capacity_mol)
    # lowest start level that keeps the inventory non-negative
    start = -float(np.min(rel.reconstruct() - rel.level[0]))
    storage = StorageLink.from_dispatch(net * unit, p.dt_hours, p.rep_days.mapping, start, p.capacity_mol)
    traj["soc_intraday"] = storage.soc_rep[:, 1:]
    ledger = DegradationLedger(traj["v_deg_intraday"][:, -1], p.rep_days.mapping)
    vopex = annual_vopex(traj, p, ledger)

    violations = []
    lo, hi = p.t_bounds

    def flag(kind, mask, values, limit):
        for r, t in zip(*np.nonzero(mask)):
            violations.append(Violation(kind, int(r), int(t), float(values[r, t]), float(limit)))

    T = traj["temperature"]
    flag("temperature_low", T < lo - temperature_tol, T, lo)
    flag("temperature_high", T > hi + temperature_tol, T, hi)
    y = traj["y_h2_anode"]
    flag("safety", y > p.y_h2_max + fraction_tol, y, p.y_h2_max)
    flag("lfl", y > LFL_H2_IN_O2, y, LFL_H2_IN_O2)
    i_lo, i_hi = p.i_bounds
    flag("current_bounds", (i_all < i_lo - 1e-6) | (i_all > i_hi + 1e-6), i_all, i_hi)
    scale = max(demand, 1.0)
    for name in ("anode_liquid_out", "cathode_liquid_out", "direct_to_demand"):
        flag(f"negative_{name}", traj[name] < -flow_tol * scale, traj[name], 0.0)
    delivered = traj["direct_to_demand"] + traj["from_storage"]
    flag("demand", delivered < demand * (1 - 1e-6), delivered, demand)
    rec = storage.reconstruct()
    cap_tol = 1e-6 * max(p.capacity_mol, 1.0)
    if rec.max() > p.capacity_mol + cap_tol:
        d, t = np.unravel_index(rec.argmax(), rec.shape)
        violations.append(Violation("storage_capacity", int(p.rep_days.mapping[d]), int(t), float(rec.max()),
                                    p.capacity_mol))
    wrap = storage.wrap_residual()
    if abs(wrap) > cap_tol:
        violations.append(Violation("storage_wrap", -1, -1, wrap, 0.0))
    w = p.rep_days.weights
    lfl_fraction = float(np.sum(w[:, None] * (y > LFL_H2_IN_O2)) / (w.sum() * n))
    return SimulationResult(traj, storage, ledger, vopex, violations, lfl_fraction)


def _default_feed(p: ScheduleProblem, i, temperature):
    pt = steady_point(p, i, float(np.clip(temperature, *p.t_bounds)))
    return float(pt["w"][0]) * 1.02


def atom_balance(traj: dict, p: ScheduleProblem) -> dict:
    """Relative H and O atom imbalance over each representative day.

    Holdup changes telescope over a periodic day, so in - out should vanish.
    """
    ec = p.electrochem
    yv3 = bal.saturation_pressure(traj["temperature"]) / ec.p_anode
    yv4 = bal.saturation_pressure(traj["temperature"]) / ec.p_cathode
    g3, g4 = traj["anode_gas_out"], traj["cathode_gas_out"]
    h_in = 2 * traj["water_in"]
    h_out = (2 * (traj["anode_liquid_out"] + traj["cathode_liquid_out"]) + 2 * g3 * (yv3 + traj["y_h2_anode"])
             + 2 * g4)
    o_in = traj["water_in"]
    o_out = (traj["anode_liquid_out"] + traj["cathode_liquid_out"] + g3 * (yv3 + 2 * traj["y_o2_anode"])
             + g4 * yv4)
    return {
        "H": np.abs(h_in.sum(1) - h_out.sum(1)) / h_in.sum(1),
        "O": np.abs(o_in.sum(1) - o_out.sum(1)) / o_in.sum(1),
    }


def read_schedule_csv(paths) -> tuple:
    """Controls from ``schedule_r<k>.csv`` files, one per representative day.

    Returns ``(controls, initial)``; ``initial`` holds the end-of-day state
    (``T`` and anode fractions from the last row) when those columns exist,
    which is the periodic start state of a solver schedule, else ``None``.
    """
    cols = {"i": "i", "water_in": "water_in", "n2_purge": "purge", "to_storage": "to_storage",
            "from_storage": "from_storage", "T": "T", "y_h2": "y_h2_anode", "y_o2": "y_o2_anode",
            "y_n2": "y_n2_anode"}
    days = []
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise ScheduleFormatError(f"schedule file not found: {path}")
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ScheduleFormatError(f"{path}: empty schedule")
        missing = [c for c in REQUIRED_COLUMNS if c not in rows[0]]
        if missing:
            raise ScheduleFormatError(f"{path}: missing columns {missing}")
        day = {}
        for key, col in cols.items():
            if col in rows[0]:
                try:
                    day[key] = np.array([float(row[col]) for row in rows])
                except (TypeError, ValueError) as exc:
                    raise ScheduleFormatError(f"{path}: {exc}") from None
        days.append(day)
    if not days:
        raise ScheduleFormatError("no schedule files given")
    if len({d["i"].size for d in days}) != 1:
        raise ScheduleFormatError("schedule files differ in step count")
    stacked = {key: np.vstack([d[key] for d in days]) for key in days[0] if all(key in d for d in days)}
    state_keys = ("T", "y_h2", "y_o2", "y_n2")
    initial = None
    if all(key in stacked for key in state_keys):
        initial = {key: stacked[key][:, -1] for key in state_keys}
    controls = {key: v for key, v in stacked.items() if key not in state_keys}
    return controls, initial
