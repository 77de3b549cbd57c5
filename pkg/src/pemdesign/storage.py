"""Hydrogen storage state across the full year from representative-day dispatch.

The absolute inventory on real day ``d`` at step ``t`` is the start-of-day
level of ``d`` plus the intra-day deviation of its representative day.  Start
levels chain from day to day by the representative day's net change, and the
year wraps so the inventory returns to its initial value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SECONDS_PER_HOUR


@dataclass
class StorageLink:
    soc_rep: np.ndarray  # (k, steps + 1) deviation from start of day, mol; column 0 is zero
    level: np.ndarray  # (n_days,) start-of-day inventory, mol
    mapping: np.ndarray  # real day -> representative day
    capacity: float  # mol

    def __post_init__(self):
        self.soc_rep = np.atleast_2d(np.asarray(self.soc_rep, float))
        self.level = np.asarray(self.level, float)
        self.mapping = np.asarray(self.mapping, int)
        if self.level.shape != self.mapping.shape:
            raise ValueError("one start level per real day required")

    @classmethod
    def from_solution(cls, soc_steps, level, mapping, capacity):
        soc_steps = np.atleast_2d(np.asarray(soc_steps, float))
        soc = np.hstack([np.zeros((soc_steps.shape[0], 1)), soc_steps])
        return cls(soc, level, mapping, capacity)

    @classmethod
    def from_dispatch(cls, net_flow, dt_hours, mapping, start_level, capacity=np.inf):
        """Chain start-of-day levels from per-representative-day net flow (mol/s, + charges)."""
        net_flow = np.atleast_2d(np.asarray(net_flow, float))
        soc = np.cumsum(net_flow * dt_hours * SECONDS_PER_HOUR, axis=1)
        mapping = np.asarray(mapping, int)
        delta = soc[:, -1]
        level = start_level + np.concatenate([[0.0], np.cumsum(delta[mapping[:-1]])])
        return cls.from_solution(soc, level, mapping, capacity)

    @property
    def delta(self) -> np.ndarray:
        return self.soc_rep[:, -1]

    def wrap_residual(self) -> float:
        """Inventory at year end minus inventory at the start of the year."""
        return float(self.level[-1] + self.delta[self.mapping[-1]] - self.level[0])

    def reconstruct(self) -> np.ndarray:
        """(n_days, steps + 1) absolute inventory; column 0 is the start of each day."""
        return self.level[:, None] + self.soc_rep[self.mapping]

    def chronological(self) -> np.ndarray:
        """Inventory at the end of every step of the year, flattened."""
        return self.reconstruct()[:, 1:].ravel()

    def continuity_gaps(self) -> np.ndarray:
        """End of day d minus start of day d+1 (with the last day wrapping to the first)."""
        rec = self.reconstruct()
        return rec[:, -1] - np.roll(rec[:, 0], -1)

    def bound_violation(self) -> float:
        rec = self.reconstruct()
        return float(max(0.0, -rec.min(), rec.max() - self.capacity))
