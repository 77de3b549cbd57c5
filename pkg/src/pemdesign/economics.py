"""Capital and operating cost roll-up, present value and levelized cost of H2."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .constants import DAYS_PER_YEAR
from .degradation import replacement_interval, replacement_ratio
from .electrochem import undegraded_voltage

PRESETS = ("2022", "2030-mid", "2030-low", "2030-high")


@dataclass(frozen=True)
class CostParams:
    stack_capex: float = 2.37  # $/cm2
    bop_capex: float = 289.0  # $/kWe, mechanical + electrical
    storage_capex: float = 500.0  # $/kg
    bop_electrical_share: float = 0.5
    # peak draw (kW) at which the per-kWe BoP figure is converted to a
    # per-(kg/day) mechanical factor
    bop_reference_kw: float = 110_000.0
    bop_reference_kg_per_day: float = 50_000.0
    alpha_mbop: float | None = None  # $/(kg/day); derived from the split when None
    alpha_ebop: float | None = None  # $/kWe
    site_prep: float = 0.02
    engineering: float = 0.10
    contingency: float = 0.15
    permitting: float = 0.15
    planned_replacement: float = 0.15
    unplanned_replacement: float = 0.005
    overhead: float = 0.20
    tax_insurance: float = 0.02
    material: float = 0.0  # $/yr
    bop_electricity: float = 5.1  # kWh/kg
    labor_rate: float = 70.0  # $/h
    workers: float = 10.0
    staffed_hours_per_day: float = 24.0
    operating_days: float = 350.0
    plant_life: int = 40
    discount_rate: float = 0.08
    water_price: float = 2.78  # $/1000 gal

    def __post_init__(self):
        for name in ("bop_electrical_share", "site_prep", "engineering", "contingency", "permitting",
                     "planned_replacement", "unplanned_replacement", "overhead", "tax_insurance"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("stack_capex", "bop_capex", "storage_capex", "labor_rate", "water_price", "material",
                     "bop_electricity", "discount_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.plant_life < 1:
            raise ValueError("plant_life must be at least one year")

    @property
    def ebop_factor(self) -> float:
        if self.alpha_ebop is not None:
            return self.alpha_ebop
        return self.bop_electrical_share * self.bop_capex

    @property
    def mbop_factor(self) -> float:
        if self.alpha_mbop is not None:
            return self.alpha_mbop
        return ((1 - self.bop_electrical_share) * self.bop_capex * self.bop_reference_kw
                / self.bop_reference_kg_per_day)

    @property
    def indirect_rate(self) -> float:
        return self.site_prep + self.engineering + self.contingency + self.permitting

    @classmethod
    def preset(cls, name: str, **overrides) -> "CostParams":
        table = {
            "2022": dict(stack_capex=2.37, bop_capex=289.0, storage_capex=500.0),
            "2030-mid": dict(stack_capex=0.79, bop_capex=103.0, storage_capex=300.0),
            "2030-low": dict(stack_capex=0.39, bop_capex=103.0, storage_capex=300.0),
            "2030-high": dict(stack_capex=1.00, bop_capex=103.0, storage_capex=300.0),
        }
        if name not in table:
            raise ValueError(f"unknown cost preset {name!r}; choose from {PRESETS}")
        return cls(**{**table[name], **overrides})

    def scaled(self, c: float) -> "CostParams":
        """Every monetary input multiplied by ``c``."""
        return replace(self, stack_capex=self.stack_capex * c, bop_capex=self.bop_capex * c,
                       storage_capex=self.storage_capex * c, material=self.material * c,
                       labor_rate=self.labor_rate * c, water_price=self.water_price * c,
                       alpha_mbop=None if self.alpha_mbop is None else self.alpha_mbop * c,
                       alpha_ebop=None if self.alpha_ebop is None else self.alpha_ebop * c)


@dataclass
class Capex:
    c_stack_bare: float
    c_mbop: float
    c_ebop: float
    c_storage: float
    indirect: float

    @property
    def c_stack(self) -> float:
        """Stack including mechanical and electrical BoP."""
        return self.c_stack_bare + self.c_mbop + self.c_ebop

    @property
    def direct(self) -> float:
        return self.c_stack

    @property
    def total(self) -> float:
        return self.direct + self.indirect + self.c_storage

    def as_dict(self) -> dict:
        return {"c_stack_bare": self.c_stack_bare, "c_mbop": self.c_mbop, "c_ebop": self.c_ebop,
                "c_stack": self.c_stack, "c_storage": self.c_storage, "direct": self.direct,
                "indirect": self.indirect, "total": self.total}


def capex(n_cells, storage_days, peak_power_kw, daily_h2_kg, params: CostParams, cell_area=450.0) -> Capex:
    """Installed cost of a design.

    Indirect adders (site preparation, engineering, contingency, permitting)
    apply to the stack and BoP; storage is priced per kg as installed.
    """
    if n_cells <= 0:
        warnings.warn("design has no cells", stacklevel=2)
    bare = n_cells * cell_area * params.stack_capex
    mbop = params.mbop_factor * daily_h2_kg
    ebop = params.ebop_factor * peak_power_kw
    storage = storage_days * daily_h2_kg * params.storage_capex
    direct = bare + mbop + ebop
    return Capex(bare, mbop, ebop, storage, direct * params.indirect_rate)


def annual_labor(params: CostParams) -> float:
    return params.labor_rate * params.workers * params.staffed_hours_per_day * params.operating_days


def annual_fopex(params: CostParams, total_capex: float) -> dict:
    labor = annual_labor(params)
    parts = {
        "labor": labor,
        "overhead": params.overhead * labor,
        "tax_insurance": params.tax_insurance * total_capex,
        "material": params.material,
    }
    parts["total"] = sum(parts.values())
    return parts


def discount_factors(params: CostParams) -> np.ndarray:
    years = np.arange(1, params.plant_life + 1)
    return 1.0 / (1.0 + params.discount_rate) ** years


def replacement_years(interval: int, plant_life: int) -> np.ndarray:
    if interval < 1:
        raise ValueError("replacement interval must be >= 1")
    return np.arange(interval, plant_life + 1, interval)


@dataclass
class AnnualStreams:
    """Yearly cash flows other than capital.

    ``vopex_escalation`` is the extra cost per year of stack age: year ``j``
    after a replacement pays ``vopex_year1 + (j - 1) * vopex_escalation``.
    """

    vopex_year1: float
    fopex: float
    annual_h2_kg: float
    vopex_escalation: float = 0.0


def vopex_by_year(streams: AnnualStreams, interval: int, plant_life: int) -> np.ndarray:
    years = np.arange(1, plant_life + 1)
    age = (years - 1) % interval
    return streams.vopex_year1 + age * streams.vopex_escalation


def pv_h2(annual_h2_kg: float, params: CostParams) -> float:
    return float(annual_h2_kg * discount_factors(params).sum())


def lcoh(pv_total: float, annual_h2_kg: float, params: CostParams) -> float:
    """Present value of cost over discounted production, $/kg."""
    if annual_h2_kg <= 0:
        raise ValueError("LCOH undefined without production")
    return pv_total / pv_h2(annual_h2_kg, params)


@dataclass
class CostReport:
    n_cells: float
    days_storage: float
    capex: Capex
    capex_total: float
    planned_replacement_pv: float
    unplanned_replacement_pv: float
    fopex_pv: float
    vopex_pv: float
    pv_total: float
    pv_h2: float
    lcoh: float
    replacement_interval: int
    replacement_ratio: float = math.inf
    utilization: float = float("nan")
    peak_power_kw: float = float("nan")
    daily_h2_kg: float = float("nan")
    end_of_year_degradation_v: float = 0.0
    vopex_year1: dict = field(default_factory=dict)
    fopex_year: dict = field(default_factory=dict)
    cash_flows: dict = field(default_factory=dict)

    def breakdown(self) -> dict:
        """LCOH split into five contributions, $/kg; they sum to ``lcoh``."""
        parts = {
            "capex": self.capex_total,
            "planned_replacement": self.planned_replacement_pv,
            "unplanned_replacement": self.unplanned_replacement_pv,
            "fopex": self.fopex_pv,
            "vopex": self.vopex_pv,
        }
        return {k: v / self.pv_h2 for k, v in parts.items()}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["capex"] = self.capex.as_dict()
        d["lcoh_breakdown"] = self.breakdown()
        d["replacement_ratio"] = None if math.isinf(self.replacement_ratio) else self.replacement_ratio
        return d


def present_value(n_cells, storage_days, cap: Capex, replacement_interval: int, streams: AnnualStreams,
                  params: CostParams, **extra) -> CostReport:
    """Discount all cash flows over the plant life and form the LCOH."""
    disc = discount_factors(params)
    life = params.plant_life
    planned = np.zeros(life)
    planned[replacement_years(replacement_interval, life) - 1] = params.planned_replacement * cap.direct
    unplanned = np.full(life, params.unplanned_replacement * cap.direct)
    fopex = np.full(life, streams.fopex)
    vopex = vopex_by_year(streams, replacement_interval, life)
    terms = {
        "planned_replacement": float(planned @ disc),
        "unplanned_replacement": float(unplanned @ disc),
        "fopex": float(fopex @ disc),
        "vopex": float(vopex @ disc),
    }
    total = cap.total + sum(terms.values())
    h2 = pv_h2(streams.annual_h2_kg, params)
    return CostReport(
        n_cells=n_cells, days_storage=storage_days, capex=cap, capex_total=cap.total,
        planned_replacement_pv=terms["planned_replacement"], unplanned_replacement_pv=terms["unplanned_replacement"],
        fopex_pv=terms["fopex"], vopex_pv=terms["vopex"], pv_total=total, pv_h2=h2,
        lcoh=lcoh(total, streams.annual_h2_kg, params), replacement_interval=int(replacement_interval),
        cash_flows={"year": list(range(1, life + 1)), "planned_replacement": planned.tolist(),
                    "unplanned_replacement": unplanned.tolist(), "fopex": fopex.tolist(),
                    "vopex": vopex.tolist()},
        **extra)


def annual_energy_price_product(schedule) -> float:
    """Sum over real days of price x stack current x dt, $/V per year.

    Multiplying by a voltage offset gives the extra electricity cost of running
    the year's schedule with that much more cell voltage.
    """
    p = schedule.problem
    tr = schedule.trajectories
    area = p.n_cells * p.plant.cell_area
    per_day = np.sum(tr["price"] * area * tr["current_density"], axis=1) * 1e-6 * p.dt_hours
    return float(p.rep_days.weights @ per_day)


def utilization(schedule) -> float:
    """Stack energy drawn over the energy at maximum current all year.

    Both use the undegraded polarization curve; the reference point runs at
    the upper current and temperature bounds.
    """
    p = schedule.problem
    tr = schedule.trajectories
    w = p.rep_days.weights
    used = float(w @ np.sum(tr["current_density"] * tr["v_undeg"], axis=1))
    i_max = p.i_bounds[1]
    v_max = float(undegraded_voltage(i_max, p.t_bounds[1], p.electrochem))
    return used / (i_max * v_max * p.steps_per_day * w.sum())


def evaluate_design(schedule, params: CostParams) -> CostReport:
    """Economics of a solved schedule."""
    p = schedule.problem
    deg = p.degradation
    eoy = schedule.end_of_year_degradation if deg.enabled else 0.0
    interval = replacement_interval(eoy, deg)
    cap = capex(p.n_cells, p.storage_days, schedule.peak_power_kw, schedule.daily_h2_kg, params, p.plant.cell_area)
    fo = annual_fopex(params, cap.total)
    streams = AnnualStreams(vopex_year1=schedule.vopex.total, fopex=fo["total"],
                            annual_h2_kg=schedule.daily_h2_kg * DAYS_PER_YEAR,
                            vopex_escalation=eoy * annual_energy_price_product(schedule))
    return present_value(p.n_cells, p.storage_days, cap, interval, streams, params,
                         replacement_ratio=replacement_ratio(eoy, deg), utilization=utilization(schedule),
                         peak_power_kw=schedule.peak_power_kw, daily_h2_kg=schedule.daily_h2_kg,
                         end_of_year_degradation_v=eoy, vopex_year1=schedule.vopex.as_dict(), fopex_year=fo)
