"""Hourly price ingestion and k-means reduction to representative days."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from .constants import HOURS_PER_DAY, HOURS_PER_YEAR

log = logging.getLogger(__name__)

CSV_HEADER = ("timestamp", "price_usd_per_mwh")
LEAP_DAY_INDEX = 59  # zero-based day of year of Feb 29


class PriceLoadError(ValueError):
    pass


@dataclass
class PriceSeries:
    values: np.ndarray  # $/MWh, hourly
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size % HOURS_PER_DAY:
            raise PriceLoadError("price series must hold whole days of hourly values")
        if not np.all(np.isfinite(self.values)):
            raise PriceLoadError("price series contains non-finite values")

    @property
    def n_days(self) -> int:
        return self.values.size // HOURS_PER_DAY

    def daily(self) -> np.ndarray:
        return self.values.reshape(self.n_days, HOURS_PER_DAY)

    def duration_curve(self) -> np.ndarray:
        return np.sort(self.values)[::-1]


def _parse_float(text: str, row: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise PriceLoadError(f"row {row}: cannot parse price {text!r}") from None
    if not math.isfinite(value):
        raise PriceLoadError(f"row {row}: non-finite price {text!r}")
    return value


def load_prices(path, headerless: bool = False, label: str | None = None) -> PriceSeries:
    """Read an hourly price CSV (``timestamp,price_usd_per_mwh``).

    With ``headerless=True`` the file is a single column of prices.  A leap
    year (8784 rows) loses Feb 29 so every year has 365 days.
    """
    path = Path(path)
    if not path.exists():
        raise PriceLoadError(f"price file not found: {path}")
    timestamps: list[str] = []
    values: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for n, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if headerless:
                values.append(_parse_float(row[0], n))
                continue
            if n == 1:
                if tuple(c.strip() for c in row[:2]) != CSV_HEADER:
                    raise PriceLoadError(f"expected header {','.join(CSV_HEADER)}, got {','.join(row)}")
                continue
            if len(row) < 2:
                raise PriceLoadError(f"row {n}: expected two columns")
            timestamps.append(row[0])
            values.append(_parse_float(row[1], n))

    arr = np.asarray(values, dtype=float)
    if arr.size == HOURS_PER_YEAR + HOURS_PER_DAY:
        leap = _leap_day_rows(timestamps)
        log.warning("%s has 8784 rows; dropping Feb 29", path.name)
        arr = np.delete(arr, leap)
    if arr.size != HOURS_PER_YEAR:
        raise PriceLoadError(f"expected {HOURS_PER_YEAR} hourly rows, found {arr.size}")
    return PriceSeries(arr, label=label or path.stem)


def _leap_day_rows(timestamps) -> np.ndarray:
    rows = []
    for n, ts in enumerate(timestamps):
        try:
            t = datetime.fromisoformat(ts.strip())
        except ValueError:
            rows = []
            break
        if t.month == 2 and t.day == 29:
            rows.append(n)
    if len(rows) == HOURS_PER_DAY:
        return np.asarray(rows)
    start = LEAP_DAY_INDEX * HOURS_PER_DAY
    return np.arange(start, start + HOURS_PER_DAY)


def write_prices(series: PriceSeries, path, year: int = 2022) -> None:
    """Write the canonical two-column CSV with hourly ISO timestamps."""
    start = np.datetime64(f"{year}-01-01T00:00")
    stamps = start + np.arange(series.values.size) * np.timedelta64(1, "h")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for ts, v in zip(stamps, series.values):
            w.writerow([str(ts), repr(float(v))])


@dataclass
class RepDaySet:
    rep_days: np.ndarray  # (k, 24) hourly prices of the chosen real days
    weights: np.ndarray  # days per cluster
    mapping: np.ndarray  # real day -> cluster
    medoid_indices: np.ndarray  # real day chosen for each cluster
    objective_history: list = field(default_factory=list)

    def __post_init__(self):
        self.rep_days = np.atleast_2d(np.asarray(self.rep_days, dtype=float))
        self.weights = np.asarray(self.weights, dtype=int)
        self.mapping = np.asarray(self.mapping, dtype=int)
        self.medoid_indices = np.asarray(self.medoid_indices, dtype=int)
        if self.weights.sum() != self.mapping.size:
            raise ValueError("weights must sum to the number of real days")
        if np.any(np.bincount(self.mapping, minlength=self.k) != self.weights):
            raise ValueError("weights disagree with the day mapping")

    @property
    def k(self) -> int:
        return self.rep_days.shape[0]

    @property
    def n_days(self) -> int:
        return self.mapping.size

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "weights": self.weights.tolist(),
            "mapping": self.mapping.tolist(),
            "medoid_day_of_year": (self.medoid_indices + 1).tolist(),
            "rep_day_prices": self.rep_days.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RepDaySet":
        return cls(rep_days=data["rep_day_prices"], weights=data["weights"], mapping=data["mapping"],
                   medoid_indices=np.asarray(data["medoid_day_of_year"]) - 1)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "RepDaySet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(x))
        else:
            idx = rng.choice(len(x), p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(centers)


def _sq_dist(x, c):
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def cluster(series: PriceSeries, k: int = 7, seed: int = 0, max_iter: int = 300) -> RepDaySet:
    """Lloyd's k-means on raw 24-hour price vectors with k-means++ seeding.

    Each cluster is represented by its medoid (the member day closest to the
    centroid).  Clusters are ordered by medoid day so results do not depend on
    label permutations.
    """
    x = series.daily()
    n = len(x)
    if not 1 <= k <= n:
        raise ValueError(f"k must be between 1 and {n}")
    distinct = len(np.unique(x, axis=0))
    if k > distinct:
        log.warning("only %d distinct days; reducing k from %d", distinct, k)
        k = distinct

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    labels = np.full(n, -1)
    history = []
    for _ in range(max_iter):
        d = _sq_dist(x, centers)
        new = d.argmin(axis=1)
        history.append(float(d[np.arange(n), new].sum()))
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point worst served by its centre
                far = int(d[np.arange(n), labels].argmax())
                centers[c] = x[far]
                labels[far] = c
    d = _sq_dist(x, centers)
    medoids = np.array([np.flatnonzero(labels == c)[d[labels == c, c].argmin()] for c in range(k)])
    order = np.argsort(medoids)
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    mapping = remap[labels]
    medoids = medoids[order]
    return RepDaySet(rep_days=x[medoids], weights=np.bincount(mapping, minlength=k), mapping=mapping,
                     medoid_indices=medoids, objective_history=history)


def reconstruct_annual(per_rep_day, mapping) -> np.ndarray:
    """Expand a quantity indexed by representative day to every real day."""
    return np.asarray(per_rep_day)[np.asarray(mapping, dtype=int)]


def resample_day(hourly: np.ndarray, dt_hours: float) -> np.ndarray:
    """Hold hourly prices over sub-hourly steps, or average over coarser steps."""
    hourly = np.asarray(hourly, dtype=float)
    steps = round(HOURS_PER_DAY / dt_hours)
    if abs(steps * dt_hours - HOURS_PER_DAY) > 1e-9:
        raise ValueError("dt must divide a day")
    if dt_hours <= 1:
        per_hour = round(1 / dt_hours)
        return np.repeat(hourly, per_hour, axis=-1)
    width = round(dt_hours)
    return hourly.reshape(*hourly.shape[:-1], steps, width).mean(axis=-1)


SYNTHETIC_PATTERNS = ("flat", "diurnal", "spiky", "duration")


def synthetic_prices(pattern: str, mean: float = 50.0, volatility: float = 30.0, seed: int = 0,
                     n_days: int = 365) -> PriceSeries:
    """Stand-in price years for testing and demos.

    ``flat``      constant ``mean``.
    ``diurnal``   cheap nights, expensive days; two levels at mean -/+ volatility.
    ``spiky``     diurnal shape plus noise and rare scarcity spikes.
    ``duration``  right-skewed year with persistent day-level swings, a daily
                  shape and scarcity spikes, rescaled so mean and standard
                  deviation hit ``mean`` and ``volatility`` exactly.
    """
    hours = np.arange(HOURS_PER_DAY)
    if pattern == "flat":
        return PriceSeries(np.full(n_days * HOURS_PER_DAY, float(mean)), label="flat")
    if pattern == "diurnal":
        day = np.where((hours >= 8) & (hours < 20), mean + volatility, mean - volatility)
        # exact mean: 12 high and 12 low hours
        return PriceSeries(np.tile(day, n_days), label="diurnal")
    rng = np.random.default_rng(seed)
    shape = (0.6 * np.sin(2 * np.pi * (hours - 9) / 24)
             + 0.8 * np.exp(-0.5 * ((hours - 18) / 1.5) ** 2)
             - 0.5 * np.exp(-0.5 * ((hours - 3) / 2.0) ** 2))
    if pattern == "spiky":
        v = mean + volatility * (0.6 * shape[None, :] + 0.3 * rng.standard_normal((n_days, HOURS_PER_DAY)))
        spikes = rng.random((n_days, HOURS_PER_DAY)) < 0.01
        v = v + spikes * volatility * rng.exponential(6.0, size=v.shape)
        return PriceSeries(v.ravel(), label="spiky")
    if pattern == "duration":
        # persistent day-level swings and a daily shape on a log scale give a
        # right-skewed bulk; rare heavy-tailed scarcity spikes form the head of
        # the duration curve
        level = np.empty(n_days)
        level[0] = 0.0
        eps = rng.standard_normal(n_days)
        for d in range(1, n_days):
            level[d] = 0.8 * level[d - 1] + 0.6 * eps[d]
        amp = np.exp(0.4 * rng.standard_normal(n_days))
        z = level[:, None] + amp[:, None] * shape[None, :] + 0.35 * rng.standard_normal((n_days, HOURS_PER_DAY))
        base = np.exp(0.55 * z)
        spikes = rng.random(z.shape) < 0.01
        base = (base + spikes * 3.0 * rng.pareto(2.5, size=z.shape)).ravel()
        v = mean + volatility * (base - base.mean()) / base.std()
        return PriceSeries(v, label="duration")
    raise ValueError(f"unknown price pattern {pattern!r}; choose from {SYNTHETIC_PATTERNS}")
