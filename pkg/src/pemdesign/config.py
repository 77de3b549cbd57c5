"""Scenario files.

A scenario is a TOML document.  Every table is optional; omitted keys take
library defaults.  ``[costs]`` may name a preset and/or ``include`` another
TOML file holding a cost block, with keys in the scenario taking precedence.

.. code-block:: toml

    schema_version = 1
    name = "2022_degradation"
    seed = 0

    [prices]
    csv = "../data/prices_2022.csv"        # or a [prices.synthetic] table
    k = 7

    [costs]
    preset = "2022"

    [degradation]
    enabled = true
    a = 30.0
    threshold = 1.0

    [operation]
    dt_hours = 0.25
    t_max = 353.15
    safety = true

    [search]
    n_cells = [40000, 300000]
    storage_days = [0.1, 14.0]
    tolerance = 0.001
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .balances import ThermalReference
from .degradation import DegradationParams
from .design_opt import Design, SearchBox
from .economics import PRESETS, CostParams
from .electrochem import ElectrochemParams
from .prices import SYNTHETIC_PATTERNS, PriceLoadError, PriceSeries, load_prices, synthetic_prices
from .schedule_opt import PlantParams, ScheduleProblem

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_TOP = {"schema_version", "name", "seed", "prices", "costs", "degradation", "operation", "search", "design",
        "electrochem", "plant", "output"}
_SECTIONS = {
    "prices": {"csv", "headerless", "synthetic", "k", "cluster_seed"},
    "synthetic": {"pattern", "mean", "volatility", "seed", "n_days"},
    "degradation": {"enabled", "a", "threshold", "knee_current"},
    "operation": {"dt_hours", "t_min", "t_max", "i_min", "i_max", "safety", "y_h2_max", "demand_kg_per_day"},
    "search": {"n_cells", "storage_days", "tolerance", "max_iter"},
    "design": {"n_cells", "storage_days"},
    "output": {"dir"},
}


def _check_keys(table: dict, allowed: set, where: str):
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


@dataclass
class PriceSource:
    csv: Path | None = None
    headerless: bool = False
    synthetic: dict | None = None
    k: int = 7
    cluster_seed: int | None = None

    def load(self, seed: int = 0) -> PriceSeries:
        if self.csv is not None:
            try:
                return load_prices(self.csv, headerless=self.headerless)
            except PriceLoadError as exc:
                raise ConfigError(str(exc)) from None
        syn = dict(self.synthetic or {"pattern": "flat"})
        syn.setdefault("seed", seed)
        return synthetic_prices(**syn)


@dataclass
class Scenario:
    name: str = "scenario"
    seed: int = 0
    prices: PriceSource = field(default_factory=PriceSource)
    costs: CostParams = field(default_factory=CostParams)
    cost_selector: str = "2022"
    degradation: DegradationParams = field(default_factory=DegradationParams)
    electrochem: ElectrochemParams = field(default_factory=ElectrochemParams)
    plant: PlantParams = field(default_factory=PlantParams)
    dt_hours: float = 0.25
    i_bounds: tuple = (0.1, 4.0)
    t_bounds: tuple = (333.15, 353.15)
    y_h2_max: float = 0.02
    demand_kg_per_day: float = 50_000.0
    search: SearchBox = field(default_factory=SearchBox)
    max_iter: int = 60
    design: Design | None = None
    output_dir: Path | None = None
    source: Path | None = None
    resolved: dict = field(default_factory=dict)

    def problem(self, rep_days, design: Design | None = None) -> ScheduleProblem:
        d = design or self.design or Design(1.0, 0.0)
        return ScheduleProblem(
            n_cells=d.n_cells, storage_days=d.storage_days, rep_days=rep_days, electrochem=self.electrochem,
            degradation=self.degradation, plant=self.plant, demand_kg_per_day=self.demand_kg_per_day,
            dt_hours=self.dt_hours, i_bounds=self.i_bounds, t_bounds=self.t_bounds, y_h2_max=self.y_h2_max)

    @property
    def cluster_seed(self) -> int:
        return self.seed if self.prices.cluster_seed is None else self.prices.cluster_seed

    def digest(self) -> str:
        blob = json.dumps(self.resolved, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_seed(self, seed: int) -> "Scenario":
        resolved = {**self.resolved, "seed": seed}
        return replace(self, seed=seed, resolved=resolved)


def _read_toml(path: Path) -> dict:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _dataclass_overrides(cls, table: dict, where: str, renames: dict | None = None) -> dict:
    renames = renames or {}
    names = {f.name for f in fields(cls)}
    out = {}
    for key, value in table.items():
        name = renames.get(key, key)
        if name not in names:
            raise ConfigError(f"unknown key in {where}: {key}")
        out[name] = value
    return out


def _pair(value, where) -> tuple:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{where} must be a two-element [lower, upper] list")
    return (float(value[0]), float(value[1]))


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; raises :class:`ConfigError`."""
    path = Path(path)
    raw = _read_toml(path)
    try:
        return _build(raw, path)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _build(raw: dict, path: Path) -> Scenario:
    base = path.parent
    _check_keys(raw, _TOP, "scenario")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    sc = Scenario(name=str(raw.get("name", path.stem)), seed=int(raw.get("seed", 0)), source=path)

    pr = raw.get("prices", {})
    _check_keys(pr, _SECTIONS["prices"], "[prices]")
    src = PriceSource(k=int(pr.get("k", 7)), headerless=bool(pr.get("headerless", False)),
                      cluster_seed=pr.get("cluster_seed"))
    if "csv" in pr and "synthetic" in pr:
        raise ConfigError("[prices] takes either csv or synthetic, not both")
    if "csv" in pr:
        src.csv = (base / pr["csv"]).resolve()
        if not src.csv.exists():
            raise ConfigError(f"price file not found: {src.csv}")
    elif "synthetic" in pr:
        syn = dict(pr["synthetic"])
        _check_keys(syn, _SECTIONS["synthetic"], "[prices.synthetic]")
        if syn.get("pattern") not in SYNTHETIC_PATTERNS:
            raise ConfigError(f"unknown price pattern {syn.get('pattern')!r}; choose from {SYNTHETIC_PATTERNS}")
        src.synthetic = syn
    if not 1 <= src.k <= 365:
        raise ConfigError("[prices] k must lie in 1..365")
    sc.prices = src

    costs = dict(raw.get("costs", {}))
    if "include" in costs:
        inc = _read_toml((base / costs.pop("include")).resolve())
        costs = {**inc.get("costs", inc), **costs}
    preset = costs.pop("preset", "2022")
    if preset not in PRESETS and preset != "custom":
        raise ConfigError(f"unknown cost preset {preset!r}; choose from {PRESETS + ('custom',)}")
    over = _dataclass_overrides(CostParams, costs, "[costs]")
    sc.costs = CostParams(**over) if preset == "custom" else CostParams.preset(preset, **over)
    sc.cost_selector = preset

    deg = raw.get("degradation", {})
    _check_keys(deg, _SECTIONS["degradation"], "[degradation]")
    sc.degradation = DegradationParams(
        coefficient_a=float(deg.get("a", 30.0)), replacement_threshold=float(deg.get("threshold", 1.0)),
        knee_current=float(deg.get("knee_current", 1.0)), enabled=bool(deg.get("enabled", True)))

    sc.electrochem = ElectrochemParams.from_mapping(raw.get("electrochem", {}))
    plant = dict(raw.get("plant", {}))
    thermal = plant.pop("thermal", None)
    plant_over = _dataclass_overrides(PlantParams, plant, "[plant]")
    if thermal is not None:
        plant_over["thermal"] = ThermalReference(**_dataclass_overrides(ThermalReference, thermal, "[plant.thermal]"))
    # unit prices shared with the economics block
    plant_over.setdefault("bop_kwh_per_kg", sc.costs.bop_electricity)
    plant_over.setdefault("water_price_per_kgal", sc.costs.water_price)
    sc.plant = PlantParams(**plant_over)

    op = raw.get("operation", {})
    _check_keys(op, _SECTIONS["operation"], "[operation]")
    sc.dt_hours = float(op.get("dt_hours", 0.25))
    sc.i_bounds = (float(op.get("i_min", 0.1)), float(op.get("i_max", 4.0)))
    sc.t_bounds = (float(op.get("t_min", 333.15)), float(op.get("t_max", 353.15)))
    sc.y_h2_max = float(op.get("y_h2_max", 0.02)) if op.get("safety", True) else 1.0
    sc.demand_kg_per_day = float(op.get("demand_kg_per_day", 50_000.0))
    for name in ("i_bounds", "t_bounds"):
        lo, hi = getattr(sc, name)
        if not lo < hi:
            raise ConfigError(f"[operation] {name}: lower bound must be below upper bound")
    steps = 24 / sc.dt_hours
    if sc.dt_hours <= 0 or abs(steps - round(steps)) > 1e-9:
        raise ConfigError("[operation] dt_hours must divide 24")

    se = raw.get("search", {})
    _check_keys(se, _SECTIONS["search"], "[search]")
    sc.search = SearchBox(_pair(se.get("n_cells", [40_000, 300_000]), "[search] n_cells"),
                          _pair(se.get("storage_days", [0.1, 14.0]), "[search] storage_days"),
                          float(se.get("tolerance", 1e-3)))
    sc.max_iter = int(se.get("max_iter", 60))

    if "design" in raw:
        de = raw["design"]
        _check_keys(de, _SECTIONS["design"], "[design]")
        sc.design = Design(float(de["n_cells"]), float(de["storage_days"]))

    out = raw.get("output", {})
    _check_keys(out, _SECTIONS["output"], "[output]")
    if "dir" in out:
        sc.output_dir = (base / out["dir"]).resolve()

    sc.resolved = _resolved(sc)
    return sc


def _resolved(sc: Scenario) -> dict:
    """Canonical, path-free view of the effective configuration (hashed for the manifest)."""
    from dataclasses import asdict

    prices = {"k": sc.prices.k, "cluster_seed": sc.prices.cluster_seed, "synthetic": sc.prices.synthetic,
              "csv_name": sc.prices.csv.name if sc.prices.csv else None}
    return {
        "schema_version": SCHEMA_VERSION, "name": sc.name, "seed": sc.seed, "prices": prices,
        "cost_selector": sc.cost_selector, "costs": asdict(sc.costs), "degradation": asdict(sc.degradation),
        "electrochem": asdict(sc.electrochem), "plant": asdict(sc.plant), "dt_hours": sc.dt_hours,
        "i_bounds": list(sc.i_bounds), "t_bounds": list(sc.t_bounds), "y_h2_max": sc.y_h2_max,
        "demand_kg_per_day": sc.demand_kg_per_day,
        "search": {"n_cells": list(sc.search.n_cells_range), "storage_days": list(sc.search.storage_days_range),
                   "tolerance": sc.search.tolerance, "max_iter": sc.max_iter},
        "design": None if sc.design is None else [sc.design.n_cells, sc.design.storage_days],
    }
