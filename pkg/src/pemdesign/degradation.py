"""Use-dependent voltage degradation and the stack replacement rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MICROVOLT = 1e-6
NO_DEGRADATION_INTERVAL = 7  # years, fixed replacement when degradation is not tracked


@dataclass(frozen=True)
class DegradationParams:
    coefficient_a: float = 30.0  # in `unit_volts` per hour
    knee_current: float = 1.0  # A/cm2
    replacement_threshold: float = 1.0  # V
    unit_volts: float = MICROVOLT
    enabled: bool = True

    def __post_init__(self):
        if self.coefficient_a <= 0:
            raise ValueError("coefficient_a must be positive")
        if self.replacement_threshold <= 0:
            raise ValueError("replacement_threshold must be positive")

    @property
    def a_volts_per_hour(self) -> float:
        return self.coefficient_a * self.unit_volts if self.enabled else 0.0


def degradation_rate(i, params: DegradationParams):
    """Voltage growth rate in V/h.

    Constant ``a`` up to the knee current, ``a (i / knee)^2`` above it.
    """
    i = np.asarray(i, dtype=float)
    if np.any(i < 0):
        raise ValueError("current density must be non-negative")
    x = i / params.knee_current
    rate = params.a_volts_per_hour * np.where(x > 1.0, x * x, 1.0)
    return rate if rate.ndim else float(rate)


def smooth_degradation_rate(i, params: DegradationParams, beta=50.0, xp=np):
    """C-infinity surrogate ``a (1 + softplus_beta(x^2 - 1))`` used inside the NLP."""
    x = i / params.knee_current
    z = beta * (x * x - 1.0)
    # log(1 + e^z) written to stay finite for large z
    softplus = (xp.log(1 + xp.exp(-xp.fabs(z))) + (z + xp.fabs(z)) / 2) / beta
    return params.a_volts_per_hour * (1.0 + softplus)


def accumulate(current_profile, dt_hours, params: DegradationParams) -> float:
    """Degradation (V) accrued over one day.

    Right-endpoint rule on a piecewise-constant schedule, the same quadrature
    the scheduler's implicit Euler discretization uses.
    """
    current_profile = np.asarray(current_profile, dtype=float)
    if current_profile.size == 0:
        return 0.0
    return float(np.sum(degradation_rate(current_profile, params)) * dt_hours)


def intraday_profile(current_profile, dt_hours, params: DegradationParams) -> np.ndarray:
    """Cumulative degradation at the end of each step within the day."""
    return np.cumsum(degradation_rate(np.asarray(current_profile, float), params) * dt_hours)


@dataclass
class DegradationLedger:
    per_rep_day_delta: np.ndarray
    mapping: np.ndarray
    cumulative_by_day: np.ndarray = field(init=False)

    def __post_init__(self):
        self.per_rep_day_delta = np.asarray(self.per_rep_day_delta, dtype=float)
        self.mapping = np.asarray(self.mapping, dtype=int)
        if np.any(self.per_rep_day_delta < 0):
            raise ValueError("degradation increments must be non-negative")
        # V_d = V_{d-1} + dV_{f(d)}, fresh stack at 0 V
        self.cumulative_by_day = np.cumsum(self.per_rep_day_delta[self.mapping])

    @property
    def end_of_year(self) -> float:
        return float(self.cumulative_by_day[-1]) if self.cumulative_by_day.size else 0.0

    def start_of_day(self) -> np.ndarray:
        """Cumulative degradation carried into each real day (V_{d-1})."""
        return np.concatenate([[0.0], self.cumulative_by_day[:-1]])


def replacement_ratio(end_of_year: float, params: DegradationParams) -> float:
    """Unfloored threshold / annual degradation, inf when nothing degrades."""
    if end_of_year < 0:
        raise ValueError("end_of_year must be non-negative")
    if end_of_year == 0:
        return math.inf
    return params.replacement_threshold / end_of_year


def replacement_interval(end_of_year: float, params: DegradationParams) -> int:
    """Whole years between stack replacements.

    A stack passing the threshold mid-year runs to the end of that year, hence
    the one-year floor.  Zero degradation falls back to the fixed 7-year rule.
    """
    if end_of_year < 0:
        raise ValueError("end_of_year must be non-negative")
    if end_of_year == 0:
        return NO_DEGRADATION_INTERVAL
    if end_of_year > params.replacement_threshold:
        return 1
    return max(1, math.floor(params.replacement_threshold / end_of_year + 1e-12))
