"""Inner problem: cost-minimizing operation of a fixed plant design.

The schedule over the representative days is transcribed with implicit Euler
into a sparse NLP and solved with IPOPT through CasADi.  Stack-internal
quantities are carried per cell (so solutions transfer between designs as warm
starts); plant-level H2 flows are expressed in units of the plant's Faradaic
output at 1 A/cm2.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from types import SimpleNamespace

import casadi as ca
import numpy as np

from . import balances as bal
from .constants import (FARADAY, GAS_CONSTANT, HOURS_PER_DAY, LITERS_PER_GALLON, MW_H2, MW_H2O, MW_N2,
                        SECONDS_PER_HOUR, T_AMBIENT, WATER_DENSITY)
from .degradation import DegradationLedger, DegradationParams, degradation_rate, smooth_degradation_rate
from .electrochem import ElectrochemParams, undegraded_voltage
from .prices import RepDaySet, resample_day
from .storage import StorageLink

log = logging.getLogger(__name__)

CASADI_MATH = SimpleNamespace(exp=ca.exp, log=ca.log, arcsinh=ca.asinh, sqrt=ca.sqrt, fabs=ca.fabs)


class BuildError(ValueError):
    pass


class InfeasibleDesign(RuntimeError):
    """Demand cannot be met by the design even at maximum current."""

    def __init__(self, message, max_daily_kg):
        super().__init__(message)
        self.max_daily_kg = max_daily_kg


@dataclass(frozen=True)
class PlantParams:
    cell_area: float = 450.0  # cm2
    thermal: bal.ThermalReference = bal.ThermalReference()
    crossover_coefficient: float = bal.CROSSOVER_COEFF_PER_BAR
    recombination: float = 0.9
    p_storage: float = 200.0  # bar
    compressor_efficiency: float = 0.7
    heat_capacity_ratio: float = 1.41
    bop_kwh_per_kg: float = 5.1
    water_price_per_kgal: float = 2.78
    n2_price_per_kg: float = 0.20
    max_water_in: float = 50_000.0  # mol/s, plant total
    max_purge: float = 1_000.0  # mol/s
    storage_day_kg: float = 50_000.0  # kg represented by one "day" of storage
    degradation_beta: float = 50.0

    @property
    def water_price_per_mol(self) -> float:
        gallons_per_mol = MW_H2O / WATER_DENSITY * 1000.0 / LITERS_PER_GALLON
        return self.water_price_per_kgal / 1000.0 * gallons_per_mol


@dataclass
class ScheduleProblem:
    n_cells: float
    storage_days: float
    rep_days: RepDaySet
    electrochem: ElectrochemParams = field(default_factory=ElectrochemParams)
    degradation: DegradationParams = field(default_factory=DegradationParams)
    plant: PlantParams = field(default_factory=PlantParams)
    demand_kg_per_day: float = 50_000.0
    dt_hours: float = 0.25
    i_bounds: tuple = (0.1, 4.0)
    t_bounds: tuple = (333.15, 353.15)
    y_h2_max: float = 0.02

    def validate(self):
        for name in ("i_bounds", "t_bounds"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise BuildError(f"{name}: lower bound {lo} must be below upper bound {hi}")
        if self.demand_kg_per_day < 0:
            raise BuildError("demand must be non-negative")
        if self.n_cells < 1:
            raise BuildError("n_cells must be >= 1")
        if self.storage_days < 0:
            raise BuildError("storage_days must be non-negative")
        if not 0 < self.y_h2_max <= 1:
            raise BuildError("y_h2_max must lie in (0, 1]")
        steps = HOURS_PER_DAY / self.dt_hours
        if abs(steps - round(steps)) > 1e-9:
            raise BuildError("dt must divide 24 h")

    @property
    def steps_per_day(self) -> int:
        return round(HOURS_PER_DAY / self.dt_hours)

    @property
    def geometry(self) -> bal.StackGeometry:
        return bal.StackGeometry.scaled(self.n_cells, self.plant.thermal, self.plant.cell_area)

    @property
    def cell(self) -> bal.StackGeometry:
        return bal.StackGeometry.scaled(1, self.plant.thermal, self.plant.cell_area)

    @property
    def demand_mol_s(self) -> float:
        return self.demand_kg_per_day / MW_H2 / (HOURS_PER_DAY * SECONDS_PER_HOUR)

    @property
    def flow_unit(self) -> float:
        """Plant H2 generation at 1 A/cm2, mol/s."""
        return self.n_cells * self.plant.cell_area / (2 * FARADAY)

    @property
    def capacity_mol(self) -> float:
        return self.storage_days * self.plant.storage_day_kg / MW_H2

    @property
    def crossover_fraction(self) -> float:
        ec = self.electrochem
        return self.plant.crossover_coefficient * (ec.p_cathode - ec.p_anode)

    def max_daily_production_kg(self) -> float:
        i_max = self.i_bounds[1]
        return (self.flow_unit * i_max * (1 - self.crossover_fraction)
                * HOURS_PER_DAY * SECONDS_PER_HOUR * MW_H2)

    def check_throughput(self):
        cap = self.max_daily_production_kg()
        if cap < self.demand_kg_per_day:
            raise InfeasibleDesign(
                f"design with {self.n_cells:.0f} cells produces at most {cap:.0f} kg/day at "
                f"{self.i_bounds[1]} A/cm2; demand is {self.demand_kg_per_day:.0f} kg/day", cap)


def compressor_work(flow, p_in, p_out, temperature=T_AMBIENT, gamma=1.41, efficiency=0.7):
    """Single-stage isentropic compression power in kW for ``flow`` mol/s."""
    if isinstance(p_in, (int, float)) and (p_in <= 0 or p_out < p_in):
        raise ValueError("require p_out >= p_in > 0")
    k = (gamma - 1) / gamma
    return flow * GAS_CONSTANT * temperature / k * ((p_out / p_in) ** k - 1) / efficiency / 1000.0


def pair_counts(mapping, k) -> np.ndarray:
    """counts[r, s] = #{(d', d): d' < d, f(d') = s, f(d) = r}."""
    mapping = np.asarray(mapping)
    counts = np.zeros((k, k))
    seen = np.zeros(k)
    for r in mapping:
        counts[r] += seen
        seen[r] += 1
    return counts


# per-cell flows are carried in mmol/s, water in 10 mmol/s
_VARS = (
    ("i", 1.0), ("T", 100.0), ("w", 1e-2), ("g3", 1e-3), ("liq3", 1e-2), ("g4", 1e-3), ("liq4", 1e-3),
    ("purge", 1e-3), ("y_h2", 1.0), ("y_o2", 1.0), ("y_n2", 1.0),
    ("n13", 1.0), ("n15", 1.0), ("n16", 1.0), ("soc", 1.0), ("dv", 1e-3),
)
VAR_NAMES = tuple(n for n, _ in _VARS)
VAR_SCALE = dict(_VARS)
EQUALITIES_PER_STEP = 11
INEQUALITIES_PER_STEP = 3


class _Layout:
    def __init__(self, k, n, n_days):
        self.k, self.n, self.n_days = k, n, n_days
        self.block = len(VAR_NAMES) * n + 2
        self.size = k * self.block + n_days

    def var(self, r, name):
        start = r * self.block + VAR_NAMES.index(name) * self.n
        return slice(start, start + self.n)

    def lo(self, r):
        return r * self.block + len(VAR_NAMES) * self.n

    def hi(self, r):
        return self.lo(r) + 1

    def days(self):
        return slice(self.k * self.block, self.size)


@dataclass
class Schedule:
    """Solved operation over the representative days (arrays shaped (k, steps))."""

    problem: ScheduleProblem
    status: str
    iterations: int
    objective: float
    solve_seconds: float
    trajectories: dict  # plant-level, SI units
    per_cell: dict  # raw per-cell solution used for warm starts
    storage: StorageLink
    ledger: DegradationLedger
    vopex: "VopexBreakdown"
    peak_power_kw: float
    daily_h2_kg: float
    constraint_violation: float = 0.0

    @property
    def success(self) -> bool:
        return self.status in ("optimal", "acceptable")

    @property
    def end_of_year_degradation(self) -> float:
        return self.ledger.end_of_year

    def __getitem__(self, key):
        return self.trajectories[key]


@dataclass
class VopexBreakdown:
    elec: float
    bop: float
    water: float
    n2: float
    elec_degradation_share: float = 0.0  # part of `elec` due to cumulative degradation

    @property
    def total(self) -> float:
        return self.elec + self.bop + self.water + self.n2

    def as_dict(self) -> dict:
        return {"total": self.total, "C_elec": self.elec, "C_bop": self.bop, "C_water": self.water,
                "C_n2": self.n2}


class ScheduleNLP:
    """Direct-transcription NLP for one design."""

    f_scale = 1e6  # $/yr per unit of the scaled objective ``f``

    def __init__(self, problem: ScheduleProblem):
        problem.validate()
        self.problem = problem
        self.k = problem.rep_days.k
        self.n = problem.steps_per_day
        self.n_days = problem.rep_days.n_days
        self.layout = _Layout(self.k, self.n, self.n_days)
        self.prices = resample_day(problem.rep_days.rep_days, problem.dt_hours)  # (k, n)
        self._build()

    # -- construction -----------------------------------------------------
    def _build(self):
        p = self.problem
        L = self.layout
        ec, pl = p.electrochem, p.plant
        cell = p.cell
        xp = CASADI_MATH
        dt_s = p.dt_hours * SECONDS_PER_HOUR
        dt_h = p.dt_hours
        unit = p.flow_unit  # plant mol/s per unit of plant flow variables
        n_c = p.n_cells
        area = n_c * pl.cell_area
        x = ca.SX.sym("x", L.size)
        eqs, ineqs = [], []
        lbx = np.full(L.size, 0.0)
        ubx = np.full(L.size, np.inf)
        cost_elec = cost_bop = cost_water = cost_n2 = 0
        energy_per_volt, day_delta = [], []
        weights = p.rep_days.weights
        comp_kw_per_mol = compressor_work(1.0, ec.p_cathode, pl.p_storage, T_AMBIENT,
                                          pl.heat_capacity_ratio, pl.compressor_efficiency)
        cap_units = p.capacity_mol / (unit * SECONDS_PER_HOUR)
        self.cap_units = cap_units

        for r in range(self.k):
            v = {name: x[L.var(r, name)] * VAR_SCALE[name] for name in VAR_NAMES}
            i, T = v["i"], v["T"]
            prev = lambda a: ca.vertcat(a[-1], a[:-1])  # noqa: E731  periodic within the day
            shift0 = lambda a: ca.vertcat(0, a[:-1])  # noqa: E731  starts from zero
            rates = bal.faradaic_rates(i, cell)
            cross = bal.h2_crossover(i, ec.p_cathode, ec.p_anode, cell, pl.recombination,
                                     pl.crossover_coefficient)
            drag = bal.electroosmotic_drag(i, T, ec.p_cathode, cell, clamp=False)
            flows = bal.FlowState(water_in=v["w"], anode_out_liquid_water=v["liq3"], anode_out_gas=v["g3"],
                                  cathode_out_liquid_water=v["liq4"], cathode_out_gas=v["g4"],
                                  n2_purge=v["purge"], y_h2_anode=v["y_h2"], y_o2_anode=v["y_o2"],
                                  y_n2_anode=v["y_n2"])
            n_an = bal.anode_gas_holdup(T, cell, ec.p_anode)
            n_an_prev = prev(n_an)
            acc = {s: (v[f"y_{s}"] * n_an - prev(v[f"y_{s}"]) * n_an_prev) / dt_s for s in ("o2", "h2", "n2")}
            an = bal.anode_balance(flows, rates, cross, T, drag, ec.p_anode, acc)
            n_cat = bal.cathode_h2_holdup(T, cell, ec.p_cathode)
            cat = bal.cathode_balance(flows, rates, cross, drag, T, ec.p_cathode, (n_cat - prev(n_cat)) / dt_s)
            y_vap_an = bal.saturation_pressure(T) / ec.p_anode
            y_vap_cat = bal.saturation_pressure(T) / ec.p_cathode
            v_undeg = undegraded_voltage(i, T, ec, xp)
            v_tot = v_undeg + v["dv"]
            dTdt = bal.energy_balance_rhs(T, flows, v_tot, i, cell, ec.p_anode, ec.p_cathode)
            h2_net_cell = (1 - y_vap_cat) * v["g4"]
            h2_net_units = h2_net_cell * n_c / unit
            deg_rate = smooth_degradation_rate(i, p.degradation, pl.degradation_beta, xp)  # V/h

            eqs += [
                (T - prev(T)) / dt_s - dTdt,
                an["water"] * 1e2, an["o2"] * 1e3, an["h2"] * 1e3, an["n2"] * 1e3,
                v["y_h2"] + v["y_o2"] + v["y_n2"] + y_vap_an - 1.0,
                cat["water"] * 1e3, cat["h2"] * 1e3,
                h2_net_units - v["n13"] - v["n15"],
                v["soc"] - shift0(v["soc"]) - dt_h * (v["n15"] - v["n16"]),
                (v["dv"] - shift0(v["dv"]) - dt_h * deg_rate) * 1e3,
            ]
            s = x[L.var(r, "soc")]
            ineqs += [
                (v["n13"] + v["n16"]) - p.demand_mol_s / unit,  # delivery >= demand
                s - x[L.lo(r)],
                x[L.hi(r)] - s,
            ]

            price = self.prices[r]  # $/MWh
            p_stack_w = area * i * v_tot
            production_kg_h = h2_net_cell * n_c * MW_H2 * SECONDS_PER_HOUR
            p_aux_kw = pl.bop_kwh_per_kg * production_kg_h + comp_kw_per_mol * v["n15"] * unit
            w_r = float(weights[r])
            cost_elec += w_r * ca.dot(price, p_stack_w) * 1e-6 * dt_h
            cost_bop += w_r * ca.dot(price, p_aux_kw) * 1e-3 * dt_h
            water_mol_s = n_c * (rates.h2o_consumed + y_vap_an * v["g3"] + y_vap_cat * v["g4"])
            cost_water += w_r * ca.sum1(water_mol_s) * dt_s * pl.water_price_per_mol
            cost_n2 += w_r * ca.sum1(n_c * v["purge"]) * dt_s * MW_N2 * pl.n2_price_per_kg
            energy_per_volt.append(ca.dot(price, area * i) * 1e-6 * dt_h)
            day_delta.append(v["dv"][-1])

            # bounds (scaled variables)
            def bound(name, lo, hi):
                sl = L.var(r, name)
                lbx[sl] = lo / VAR_SCALE[name]
                ubx[sl] = hi / VAR_SCALE[name]

            bound("i", *p.i_bounds)
            bound("T", *p.t_bounds)
            bound("w", 0.0, pl.max_water_in / n_c)
            bound("purge", 0.0, pl.max_purge / n_c)
            bound("y_h2", 0.0, p.y_h2_max)
            bound("y_o2", 0.0, 1.0)
            bound("y_n2", 0.0, 1.0)
            bound("soc", -np.inf, np.inf)
            bound("dv", 0.0, np.inf)
            lbx[L.lo(r)], ubx[L.lo(r)] = -np.inf, 0.0
            lbx[L.hi(r)], ubx[L.hi(r)] = 0.0, np.inf

        # inter-day storage carry-over and year wrap
        mapping = p.rep_days.mapping
        lvl = x[L.days()]
        delta = ca.vertcat(*[x[L.var(r, "soc")][-1] for r in range(self.k)])
        nxt = ca.vertcat(lvl[1:], lvl[0])
        select = ca.DM(np.eye(self.k)[mapping])  # (n_days, k) one-hot day -> rep day
        eqs.append(nxt - lvl - ca.mtimes(select, delta))
        lo_r = ca.vertcat(*[x[L.lo(r)] for r in range(self.k)])
        hi_r = ca.vertcat(*[x[L.hi(r)] for r in range(self.k)])
        ineqs.append(lvl + ca.mtimes(select, lo_r))
        ineqs.append(cap_units - lvl - ca.mtimes(select, hi_r))
        lbx[L.days()] = 0.0
        ubx[L.days()] = cap_units

        counts = pair_counts(mapping, self.k)
        e_vec = ca.vertcat(*energy_per_volt)
        d_vec = ca.vertcat(*day_delta)
        cost_cumulative = ca.dot(e_vec, ca.mtimes(ca.DM(counts), d_vec))
        cost_elec = cost_elec + cost_cumulative

        g_eq = ca.vertcat(*eqs)
        g_in = ca.vertcat(*ineqs)
        self.n_equalities = g_eq.numel()
        self.n_inequalities = g_in.numel()
        self.g = ca.vertcat(g_eq, g_in)
        self.lbg = np.concatenate([np.zeros(self.n_equalities), np.zeros(self.n_inequalities)])
        self.ubg = np.concatenate([np.zeros(self.n_equalities), np.full(self.n_inequalities, np.inf)])
        self.lbx, self.ubx = lbx, ubx
        self.x = x
        self.f = (cost_elec + cost_bop + cost_water + cost_n2) / self.f_scale
        self.cost_terms = ca.Function("costs", [x], [cost_elec, cost_bop, cost_water, cost_n2, cost_cumulative])

    @property
    def n_variables(self) -> int:
        return self.layout.size

    @property
    def n_constraints(self) -> int:
        return self.n_equalities + self.n_inequalities

    # -- initial guesses --------------------------------------------------
    def cold_start(self) -> np.ndarray:
        p = self.problem
        i_need = p.demand_mol_s / max(p.flow_unit * (1 - p.crossover_fraction), 1e-12)
        i0 = float(np.clip(i_need, *p.i_bounds))
        t0 = float(np.clip(343.15, *p.t_bounds))
        guess = steady_point(p, i0, t0)
        x0 = np.zeros(self.layout.size)
        for r in range(self.k):
            for name in VAR_NAMES:
                x0[self.layout.var(r, name)] = guess[name] / VAR_SCALE[name]
            x0[self.layout.var(r, "dv")] = np.cumsum(
                np.full(self.n, degradation_rate(i0, p.degradation) * p.dt_hours)) / VAR_SCALE["dv"]
        x0[self.layout.days()] = 0.5 * self.cap_units
        return x0

    def pack(self, per_cell: dict) -> np.ndarray:
        """Initial point from another solution's per-cell trajectories."""
        x0 = self.cold_start()
        src_k = per_cell["i"].shape[0]
        for r in range(self.k):
            rs = min(r, src_k - 1)
            for name in VAR_NAMES:
                if name in per_cell and per_cell[name].shape[1] == self.n:
                    x0[self.layout.var(r, name)] = per_cell[name][rs] / VAR_SCALE[name]
        return np.clip(x0, self.lbx, self.ubx)

    # -- solve ------------------------------------------------------------
    def solve(self, warm_start: dict | None = None, max_iter: int = 3000, print_level: int = 0) -> Schedule:
        opts = {
            "print_time": False,
            "ipopt.print_level": print_level,
            "ipopt.sb": "yes",
            "ipopt.max_iter": max_iter,
            "ipopt.tol": 1e-6,
            "ipopt.constr_viol_tol": 1e-8,
            "ipopt.acceptable_tol": 1e-5,
            "ipopt.acceptable_constr_viol_tol": 1e-8,
            "ipopt.mu_strategy": "adaptive",
        }
        solver = ca.nlpsol("inner", "ipopt", {"x": self.x, "f": self.f, "g": self.g}, opts)
        x0 = self.pack(warm_start) if warm_start is not None else self.cold_start()
        t0 = time.perf_counter()
        sol = solver(x0=x0, lbx=self.lbx, ubx=self.ubx, lbg=self.lbg, ubg=self.ubg)
        elapsed = time.perf_counter() - t0
        stats = solver.stats()
        status = _STATUS.get(stats.get("return_status", ""), "failed")
        # IPOPT relaxes bounds by ~1e-8; report values on the feasible box
        xs = np.clip(np.asarray(sol["x"]).ravel(), self.lbx, self.ubx)
        g = np.asarray(sol["g"]).ravel()
        viol = float(max(np.max(np.maximum(self.lbg - g, 0), initial=0), np.max(np.maximum(g - self.ubg, 0),
                                                                              initial=0)))
        return self._unpack(xs, status, int(stats.get("iter_count", 0)), float(sol["f"]) * self.f_scale, elapsed, viol)

    def _unpack(self, xs, status, iterations, objective, elapsed, viol) -> Schedule:
        p = self.problem
        L = self.layout
        per_cell = {name: np.array([xs[L.var(r, name)] * VAR_SCALE[name] for r in range(self.k)])
                    for name in VAR_NAMES}
        traj = plant_trajectories(p, per_cell, self.prices)
        unit = p.flow_unit
        to_mol = unit * SECONDS_PER_HOUR
        level = xs[L.days()] * to_mol
        storage = StorageLink.from_solution(per_cell["soc"] * to_mol, level, p.rep_days.mapping,
                                            p.capacity_mol)
        traj["soc_intraday"] = storage.soc_rep[:, 1:]
        ledger = DegradationLedger(traj["v_deg_intraday"][:, -1], p.rep_days.mapping)
        vopex = annual_vopex(traj, p, ledger)
        peak = float(np.max(traj["power_total_kw"]))
        w = p.rep_days.weights
        daily_h2 = float(np.sum(w[:, None] * traj["h2_net"]) * p.dt_hours * SECONDS_PER_HOUR * MW_H2
                         / p.rep_days.n_days)
        return Schedule(problem=p, status=status, iterations=iterations, objective=objective,
                        solve_seconds=elapsed, trajectories=traj, per_cell=per_cell, storage=storage,
                        ledger=ledger, vopex=vopex, peak_power_kw=peak, daily_h2_kg=daily_h2,
                        constraint_violation=viol)


_STATUS = {
    "Solve_Succeeded": "optimal",
    "Solved_To_Acceptable_Level": "acceptable",
    "Infeasible_Problem_Detected": "infeasible",
    "Maximum_Iterations_Exceeded": "max_iter",
    "Maximum_CpuTime_Exceeded": "max_iter",
}


def steady_point(p: ScheduleProblem, i, temperature) -> dict:
    """Per-cell steady operating point at (i, T) with no purge.

    Feed water is chosen so the stack sits in thermal steady state when that
    needs cooling; otherwise only the water consumed or carried away is fed.
    """
    ec, pl = p.electrochem, p.plant
    cell = p.cell
    i = np.asarray(i, float)
    T = np.broadcast_to(np.asarray(temperature, float), i.shape) if i.ndim else float(temperature)
    rates = bal.faradaic_rates(i, cell)
    cross = bal.h2_crossover(i, ec.p_cathode, ec.p_anode, cell, pl.recombination, pl.crossover_coefficient)
    drag = bal.electroosmotic_drag(i, T, ec.p_cathode, cell)
    yv_an = bal.saturation_pressure(T) / ec.p_anode
    yv_cat = bal.saturation_pressure(T) / ec.p_cathode
    o2_out = rates.o2_gen - cross.o2_consumed
    dry = o2_out + cross.h2_to_anode
    g3 = dry / (1 - yv_an)
    g4 = (rates.h2_gen - cross.gross) / (1 - yv_cat)
    liq4 = drag - yv_cat * g4
    base_w = yv_an * g3 + drag + rates.h2o_consumed - cross.water_from_recombination
    flows = bal.FlowState(water_in=base_w, anode_out_liquid_water=0.0 * i, anode_out_gas=g3,
                          cathode_out_liquid_water=liq4, cathode_out_gas=g4, y_h2_anode=cross.h2_to_anode / g3,
                          y_o2_anode=o2_out / g3, y_n2_anode=0.0 * i)
    v = undegraded_voltage(i, T, ec)
    q = (bal.heat_generation(v, i, cell) - bal.heat_loss(T, cell)
         - bal.enthalpy_flows(T, flows, ec.p_anode, ec.p_cathode).h_out)
    h_liq = bal.sensible_enthalpy("H2O(l)", T)
    liq3 = np.maximum(q / h_liq, 0.0)
    unit_cell = pl.cell_area / (2 * FARADAY)
    prod = (1 - yv_cat) * g4 / unit_cell
    demand_units = p.demand_mol_s / p.flow_unit
    ones = np.ones(p.steps_per_day)
    return {
        "i": i * ones, "T": T * ones, "w": (base_w + liq3) * ones, "g3": g3 * ones, "liq3": liq3 * ones,
        "g4": g4 * ones, "liq4": liq4 * ones, "purge": 0.0 * ones, "y_h2": cross.h2_to_anode / g3 * ones,
        "y_o2": o2_out / g3 * ones, "y_n2": 0.0 * ones, "n13": np.minimum(prod, demand_units) * ones,
        "n15": np.maximum(prod - demand_units, 0.0) * ones, "n16": np.maximum(demand_units - prod, 0.0) * ones,
        "soc": np.cumsum(np.full(p.steps_per_day, (prod - demand_units) * p.dt_hours)), "dv": 0.0 * ones,
    }


def plant_trajectories(p: ScheduleProblem, per_cell: dict, prices: np.ndarray) -> dict:
    """Plant totals and derived quantities from per-cell trajectories."""
    ec, pl = p.electrochem, p.plant
    n_c = p.n_cells
    cell = p.cell
    unit = p.flow_unit
    i, T = per_cell["i"], per_cell["T"]
    rates = bal.faradaic_rates(i, cell)
    cross = bal.h2_crossover(i, ec.p_cathode, ec.p_anode, cell, pl.recombination, pl.crossover_coefficient)
    yv_an = bal.saturation_pressure(T) / ec.p_anode
    yv_cat = bal.saturation_pressure(T) / ec.p_cathode
    v_undeg = undegraded_voltage(i, T, ec)
    dv_true = np.cumsum(degradation_rate(i, p.degradation) * p.dt_hours, axis=1)
    h2_net = n_c * (1 - yv_cat) * per_cell["g4"]
    comp_kw = compressor_work(per_cell["n15"] * unit, ec.p_cathode, pl.p_storage, T_AMBIENT,
                              pl.heat_capacity_ratio, pl.compressor_efficiency)
    stack_kw = n_c * pl.cell_area * i * (v_undeg + dv_true) / 1000.0
    bop_kw = pl.bop_kwh_per_kg * h2_net * MW_H2 * SECONDS_PER_HOUR
    return {
        "price": prices,
        "current_density": i,
        "temperature": T,
        "water_in": n_c * per_cell["w"],
        "anode_liquid_out": n_c * per_cell["liq3"],
        "anode_gas_out": n_c * per_cell["g3"],
        "cathode_liquid_out": n_c * per_cell["liq4"],
        "cathode_gas_out": n_c * per_cell["g4"],
        "n2_purge": n_c * per_cell["purge"],
        "y_h2_anode": per_cell["y_h2"],
        "y_o2_anode": per_cell["y_o2"],
        "y_n2_anode": per_cell["y_n2"],
        "h2_gen": n_c * rates.h2_gen,
        "h2_crossover": n_c * cross.gross,
        "h2_to_anode": n_c * cross.h2_to_anode,
        "h2_net": h2_net,
        "direct_to_demand": per_cell["n13"] * unit,
        "to_storage": per_cell["n15"] * unit,
        "from_storage": per_cell["n16"] * unit,
        "water_consumed": n_c * rates.h2o_consumed,
        "vapour_anode": n_c * yv_an * per_cell["g3"],
        "vapour_cathode": n_c * yv_cat * per_cell["g4"],
        "v_undeg": v_undeg,
        "v_deg_intraday": dv_true,
        "v_deg_intraday_nlp": per_cell["dv"],
        "power_stack_kw": stack_kw,
        "power_bop_kw": bop_kw,
        "power_compressor_kw": comp_kw,
        "power_total_kw": stack_kw + bop_kw + comp_kw,
    }


def annual_vopex(traj: dict, p: ScheduleProblem, ledger: DegradationLedger | None = None) -> VopexBreakdown:
    """Annual variable operating cost from representative-day trajectories.

    Electricity splits into the weighted representative-day integral (with the
    intra-day degradation) and the cumulative-degradation term summed over all
    real days.
    """
    pl = p.plant
    w = p.rep_days.weights.astype(float)
    dt_h = p.dt_hours
    dt_s = dt_h * SECONDS_PER_HOUR
    price = traj["price"]
    area = p.n_cells * pl.cell_area
    i = traj["current_density"]
    v = traj["v_undeg"] + traj["v_deg_intraday"]
    per_day = np.sum(price * area * i * v, axis=1) * 1e-6 * dt_h
    energy_per_volt = np.sum(price * area * i, axis=1) * 1e-6 * dt_h
    cumulative = 0.0
    if ledger is not None:
        cumulative = float(np.sum(ledger.start_of_day() * energy_per_volt[ledger.mapping]))
    elec = float(w @ per_day) + cumulative
    aux_kw = traj["power_bop_kw"] + traj["power_compressor_kw"]
    bop = float(w @ (np.sum(price * aux_kw, axis=1) * 1e-3 * dt_h))
    water_mol_s = traj["water_consumed"] + traj["vapour_anode"] + traj["vapour_cathode"]
    water = float(w @ np.sum(water_mol_s, axis=1)) * dt_s * pl.water_price_per_mol
    n2 = float(w @ np.sum(traj["n2_purge"], axis=1)) * dt_s * MW_N2 * pl.n2_price_per_kg
    return VopexBreakdown(elec=elec, bop=bop, water=water, n2=n2, elec_degradation_share=cumulative)


def solve_schedule(problem: ScheduleProblem, warm_start: dict | None = None, **kw) -> Schedule:
    """Certify throughput, build and solve; retries once from a cold start."""
    problem.check_throughput()
    nlp = ScheduleNLP(problem)
    sched = nlp.solve(warm_start, **kw)
    if not sched.success and warm_start is not None:
        log.info("warm-started solve ended %s; retrying cold", sched.status)
        sched = nlp.solve(None, **kw)
    return sched


def with_design(problem: ScheduleProblem, n_cells: float, storage_days: float) -> ScheduleProblem:
    return replace(problem, n_cells=n_cells, storage_days=storage_days)
