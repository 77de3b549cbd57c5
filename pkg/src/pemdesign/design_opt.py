"""Outer problem: two-dimensional golden-section search over plant size.

The search box over (cell count, storage days) shrinks each iteration by
evaluating a 2 x 2 grid of golden-ratio trial points and discarding, on each
axis, the part beyond the trial coordinate that lost.  Golden-ratio spacing
means one trial coordinate per axis carries over, so most iterations need
three new inner solves.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .economics import CostParams, CostReport, evaluate_design
from .schedule_opt import InfeasibleDesign, Schedule, ScheduleProblem, solve_schedule, with_design

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...
TRIAL_LABELS = ("A", "B", "C", "D")


class SearchAborted(RuntimeError):
    """Every trial point of an iteration was infeasible.

    ``statuses`` holds the inner-solve status of each failed trial, so callers
    can tell certified infeasibility from solver failure.
    """

    def __init__(self, message: str, statuses=()):
        super().__init__(message)
        self.statuses = tuple(statuses)

    @property
    def solver_failure(self) -> bool:
        return bool(self.statuses) and "infeasible" not in self.statuses


@dataclass(frozen=True)
class Design:
    n_cells: float
    storage_days: float

    def key(self) -> tuple:
        return (round(self.n_cells, 3), round(self.storage_days, 6))


@dataclass(frozen=True)
class SearchBox:
    n_cells_range: tuple = (40_000.0, 300_000.0)
    storage_days_range: tuple = (0.1, 14.0)
    tolerance: float = 1e-3  # relative to the initial widths

    def __post_init__(self):
        for lo, hi in (self.n_cells_range, self.storage_days_range):
            if not lo < hi:
                raise ValueError(f"search range lower bound {lo} must be below upper bound {hi}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    def contains(self, d: Design) -> bool:
        (a, b), (c, e) = self.n_cells_range, self.storage_days_range
        return a <= d.n_cells <= b and c <= d.storage_days <= e


def _interior(lo, hi):
    return hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo)


@dataclass
class TrialGrid:
    x: tuple  # two trial cell counts
    y: tuple  # two trial storage sizes
    pv: dict = field(default_factory=dict)  # label -> PV

    @classmethod
    def for_box(cls, x_range, y_range) -> "TrialGrid":
        return cls(_interior(*x_range), _interior(*y_range))

    def designs(self) -> dict:
        (x1, x2), (y1, y2) = self.x, self.y
        return {"A": Design(x1, y1), "B": Design(x2, y1), "C": Design(x1, y2), "D": Design(x2, y2)}

    def best(self) -> str:
        finite = {k: v for k, v in self.pv.items() if math.isfinite(v)}
        if not finite:
            raise SearchAborted("all four trial points infeasible")
        # ties resolve in label order (smaller cell count, then storage)
        return min(TRIAL_LABELS, key=lambda k: (finite.get(k, math.inf), TRIAL_LABELS.index(k)))


@dataclass
class TrialResult:
    design: Design
    pv: float  # +inf when infeasible
    status: str = "optimal"
    lcoh: float = float("nan")
    report: CostReport | None = None
    schedule: Schedule | None = None
    seconds: float = 0.0
    iterations: int = 0
    message: str = ""

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.pv)


def gss_step(x_range, y_range, evaluate):
    """One iteration: evaluate the 2 x 2 trial grid and shrink both axes.

    ``evaluate`` maps a :class:`Design` to a PV (``inf`` when infeasible).
    Returns the new ranges, the grid and the winning label.
    """
    grid = TrialGrid.for_box(x_range, y_range)
    for label, d in grid.designs().items():
        grid.pv[label] = evaluate(d)
    win = grid.best()
    new_x, new_y = _shrink(grid, win, x_range, y_range)
    return new_x, new_y, grid, win


def _shrink(grid: TrialGrid, win: str, x_range, y_range):
    """Drop, on each axis, the span beyond the losing trial coordinate."""
    (x1, x2), (y1, y2) = grid.x, grid.y
    new_x = (x_range[0], x2) if win in ("A", "C") else (x1, x_range[1])
    new_y = (y_range[0], y2) if win in ("A", "B") else (y1, y_range[1])
    return new_x, new_y


@dataclass
class SearchResult:
    best: TrialResult
    trace: list  # one dict per iteration
    trials: dict  # design key -> TrialResult
    converged: bool
    iterations: int
    grid_audit: dict | None = None

    @property
    def design(self) -> Design:
        return self.best.design


class TrialCache:
    """Design -> result memo; a rounded design is never solved twice."""

    def __init__(self):
        self._store: dict = {}
        self.order: list = []

    def __contains__(self, d: Design):
        return d.key() in self._store

    def __getitem__(self, d: Design) -> TrialResult:
        return self._store[d.key()]

    def put(self, res: TrialResult):
        k = res.design.key()
        if k in self._store:
            raise KeyError(f"design {k} evaluated twice")
        self._store[k] = res
        self.order.append(k)

    def values(self):
        return [self._store[k] for k in self.order]


def nearest_solved(target: Design, solved: list, box: SearchBox) -> TrialResult | None:
    """Closest feasible solved trial in (log N_c, storage) with ties toward fewer cells."""
    pool = [t for t in solved if t.schedule is not None and t.schedule.success]
    if not pool:
        return None
    lx = math.log(box.n_cells_range[1]) - math.log(box.n_cells_range[0])
    ly = box.storage_days_range[1] - box.storage_days_range[0]

    def dist(t):
        dx = (math.log(t.design.n_cells) - math.log(target.n_cells)) / lx
        dy = (t.design.storage_days - target.storage_days) / ly
        return (round(dx * dx + dy * dy, 12), t.design.n_cells, t.design.storage_days)

    return min(pool, key=dist)


class InnerEvaluator:
    """Solve the schedule for a design and price it."""

    returns_trials = True

    def __init__(self, problem: ScheduleProblem, costs: CostParams):
        self.problem = problem
        self.costs = costs

    def __call__(self, design: Design, warm: dict | None = None) -> TrialResult:
        t0 = time.perf_counter()
        prob = with_design(self.problem, design.n_cells, design.storage_days)
        try:
            sched = solve_schedule(prob, warm)
        except InfeasibleDesign as exc:
            return TrialResult(design, math.inf, "infeasible", message=str(exc),
                               seconds=time.perf_counter() - t0)
        if not sched.success:
            return TrialResult(design, math.inf, sched.status, schedule=sched, iterations=sched.iterations,
                               message=f"inner solve ended with status {sched.status}",
                               seconds=time.perf_counter() - t0)
        report = evaluate_design(sched, self.costs)
        return TrialResult(design, report.pv_total, sched.status, report.lcoh, report, sched,
                           time.perf_counter() - t0, sched.iterations)


def _run(evaluator, design, warm):
    return evaluator(design, warm)


def optimize(evaluator, box: SearchBox = SearchBox(), jobs: int = 1, max_iter: int = 60,
             grid_audit: bool = False, progress=None) -> SearchResult:
    """Golden-section search to the box tolerance.

    ``evaluator(design, warm)`` returns a :class:`TrialResult`; ``warm`` is the
    per-cell solution of the nearest trial solved in an earlier iteration.
    A plain ``design -> PV`` function is accepted too.
    """
    evaluator = _as_trial_evaluator(evaluator)
    cache = TrialCache()
    x_range, y_range = tuple(map(float, box.n_cells_range)), tuple(map(float, box.storage_days_range))
    wx0, wy0 = x_range[1] - x_range[0], y_range[1] - y_range[0]
    trace = []
    incumbent: TrialResult | None = None
    it = 0
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while it < max_iter and ((x_range[1] - x_range[0]) > box.tolerance * wx0
                                 or (y_range[1] - y_range[0]) > box.tolerance * wy0):
            it += 1
            t_iter = time.perf_counter()
            grid = TrialGrid.for_box(x_range, y_range)
            designs = grid.designs()
            todo = [d for d in designs.values() if d not in cache]
            todo = list({d.key(): d for d in todo}.values())
            # warm starts come only from earlier iterations, so results do not depend on order
            previous = cache.values()
            warms = []
            for d in todo:
                near = nearest_solved(d, previous, box)
                warms.append(near.schedule.per_cell if near is not None else None)
            if pool is not None:
                results = list(pool.map(_run, [evaluator] * len(todo), todo, warms))
            else:
                results = [evaluator(d, w) for d, w in zip(todo, warms)]
            for res in results:
                cache.put(res)
            for label, d in designs.items():
                grid.pv[label] = cache[d].pv
            try:
                win = grid.best()
            except SearchAborted:
                msgs = "; ".join(sorted({cache[d].message for d in designs.values() if cache[d].message}))
                raise SearchAborted(f"iteration {it}: all four trial points infeasible ({msgs})",
                                    [cache[d].status for d in designs.values()]) from None
            best_here = cache[designs[win]]
            if incumbent is None or best_here.pv < incumbent.pv:
                incumbent = best_here
            old = (x_range, y_range)
            x_range, y_range = _shrink(grid, win, x_range, y_range)
            row = {"iteration": it, "winner": win, "new_evaluations": len(todo),
                   "seconds": time.perf_counter() - t_iter, "incumbent_pv": incumbent.pv,
                   "incumbent_n_cells": incumbent.design.n_cells,
                   "incumbent_storage_days": incumbent.design.storage_days,
                   "n_cells_lo": old[0][0], "n_cells_hi": old[0][1], "storage_lo": old[1][0],
                   "storage_hi": old[1][1]}
            for label, d in designs.items():
                row[f"{label}_n_cells"] = d.n_cells
                row[f"{label}_storage_days"] = d.storage_days
                row[f"{label}_pv"] = grid.pv[label]
            trace.append(row)
            log.info("gss iter %d: winner %s pv %.6g at (%.0f cells, %.4g days); %d new solves",
                     it, win, incumbent.pv, incumbent.design.n_cells, incumbent.design.storage_days, len(todo))
            if progress:
                progress(row)
        converged = ((x_range[1] - x_range[0]) <= box.tolerance * wx0
                     and (y_range[1] - y_range[0]) <= box.tolerance * wy0)
        if incumbent is None:
            # box already within tolerance: evaluate its centre
            centre = Design(sum(x_range) / 2, sum(y_range) / 2)
            incumbent = evaluator(centre, None)
            cache.put(incumbent)
        audit = None
        if grid_audit:
            audit = audit_grid(evaluator, box, cache, incumbent, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    return SearchResult(incumbent, trace, {k: cache[Design(*k)] for k in cache.order}, converged, it, audit)


def audit_grid(evaluator, box: SearchBox, cache: TrialCache, incumbent: TrialResult, pool=None, n=5) -> dict:
    """Evaluate an n x n grid over the initial box and count its local minima.

    More than one local minimum, or a grid point beating the search result,
    suggests the landscape is not unimodal.
    """
    xs = np.linspace(*box.n_cells_range, n)
    ys = np.linspace(*box.storage_days_range, n)
    designs = [Design(float(x), float(y)) for x in xs for y in ys]
    todo = [d for d in designs if d not in cache]
    solved = cache.values()
    warms = [(lambda t: t.schedule.per_cell if t else None)(nearest_solved(d, solved, box)) for d in todo]
    if pool is not None:
        results = list(pool.map(_run, [evaluator] * len(todo), todo, warms))
    else:
        results = [evaluator(d, w) for d, w in zip(todo, warms)]
    for res in results:
        cache.put(res)
    pv = np.array([[cache[Design(float(x), float(y))].pv for y in ys] for x in xs])
    minima = 0
    for a in range(n):
        for b in range(n):
            if not math.isfinite(pv[a, b]):
                continue
            nb = [pv[a + da, b + db] for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1))
                  if 0 <= a + da < n and 0 <= b + db < n]
            minima += all(pv[a, b] <= v for v in nb)
    best = float(np.min(pv))
    return {"n_cells": xs.tolist(), "storage_days": ys.tolist(),
            "pv": [[v if math.isfinite(v) else None for v in row] for row in pv.tolist()],
            "local_minima": int(minima), "grid_best_pv": best,
            "grid_beats_search": bool(best < incumbent.pv * (1 - 1e-9)),
            "unimodal_suspect": bool(minima > 1 or best < incumbent.pv * (1 - 1e-9))}


class _FunctionEvaluator:
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, design, warm=None):
        return TrialResult(design, float(self.fn(design)))


def _as_trial_evaluator(ev):
    if getattr(ev, "returns_trials", False):
        return ev
    return _FunctionEvaluator(ev)
