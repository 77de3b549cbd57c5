"""Run orchestration behind the command line: optimize, evaluate, simulate."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import reports
from .config import Scenario
from .design_opt import Design, InnerEvaluator, SearchAborted, SearchResult, optimize
from .economics import CostReport, evaluate_design
from .prices import PriceSeries, RepDaySet, cluster
from .schedule_opt import Schedule, solve_schedule
from .simulate import SimulationResult, read_schedule_csv, simulate

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    pass


@dataclass
class RunOutcome:
    out_dir: Path
    files: list = field(default_factory=list)
    report: CostReport | None = None
    schedule: Schedule | None = None
    search: SearchResult | None = None
    simulation: SimulationResult | None = None
    meta: dict = field(default_factory=dict)


def prepare(scenario: Scenario) -> tuple[PriceSeries, RepDaySet]:
    series = scenario.prices.load(scenario.seed)
    rep = cluster(series, scenario.prices.k, scenario.cluster_seed)
    log.info("clustered %d days into %d representative days", series.n_days, rep.k)
    return series, rep


def _start(scenario: Scenario, out_dir, command: str) -> RunOutcome:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"command": command, "scenario": scenario.name, "scenario_sha256": scenario.digest(),
            "seed": scenario.seed, "code_version": __version__,
            "started": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    return RunOutcome(out, meta=meta)


def finish(run: RunOutcome, extra_files=()) -> Path:
    run.meta["finished"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return reports.write_manifest(run.out_dir, list(run.files) + list(extra_files), run.meta)


def _emit_design_outputs(run: RunOutcome, scenario: Scenario, series, rep, sched: Schedule, report: CostReport,
                         figures: bool):
    out = run.out_dir
    run.files.append(reports.write_json(out / "cost_report.json", {"scenario": scenario.name, **report.to_dict()}))
    run.files.append(reports.write_lcoh_breakdown([(scenario.name, report)], out / "lcoh_breakdown.csv"))
    run.files += reports.write_schedule(sched, out)
    run.files.append(reports.write_json(out / "repdays.json", rep.to_dict()))
    run.files.append(reports.write_json(out / "solution.json", {k: v for k, v in sched.per_cell.items()}))
    run.files += reports.write_plot_data(sched, series, out)
    if figures:
        from .plotting import render_all

        run.files += render_all(sched, report, series, out, label=scenario.name)


def run_optimize(scenario: Scenario, out_dir, jobs: int = 1, grid_audit: bool = False,
                 figures: bool = True) -> RunOutcome:
    run = _start(scenario, out_dir, "optimize")
    series, rep = prepare(scenario)
    evaluator = InnerEvaluator(scenario.problem(rep), scenario.costs)
    result = optimize(evaluator, scenario.search, jobs=jobs, max_iter=scenario.max_iter, grid_audit=grid_audit)
    best = result.best
    if not best.feasible:
        raise SearchAborted(best.message or "no feasible design found", [best.status])
    run.search, run.report, run.schedule = result, best.report, best.schedule
    run.files.append(reports.write_gss_trace(result.trace, run.out_dir / "gss_trace.csv"))
    if result.grid_audit is not None:
        run.files.append(reports.write_json(run.out_dir / "grid_audit.json", result.grid_audit))
    _emit_design_outputs(run, scenario, series, rep, best.schedule, best.report, figures)
    run.meta.update({
        "converged": result.converged, "gss_iterations": result.iterations,
        "design": {"n_cells": best.design.n_cells, "n_cells_rounded": int(round(best.design.n_cells)),
                   "storage_days": best.design.storage_days},
        "iterations": [{"iteration": row["iteration"], "seconds": row["seconds"],
                        "new_evaluations": row["new_evaluations"]} for row in result.trace],
        "trials": [{"n_cells": t.design.n_cells, "storage_days": t.design.storage_days, "status": t.status,
                    "pv": t.pv if np.isfinite(t.pv) else None, "inner_iterations": t.iterations,
                    "seconds": t.seconds} for t in result.trials.values()],
    })
    return run


def run_evaluate(scenario: Scenario, design: Design, out_dir, figures: bool = True, warm_start=None) -> RunOutcome:
    """Inner problem and economics for one fixed design."""
    run = _start(scenario, out_dir, "evaluate")
    series, rep = prepare(scenario)
    warm = None
    if warm_start is not None:
        warm = {k: np.asarray(v, float) for k, v in json.loads(Path(warm_start).read_text()).items()}
    t0 = time.perf_counter()
    sched = solve_schedule(scenario.problem(rep, design), warm)
    if not sched.success:
        raise SolverFailure(f"inner solve ended with status {sched.status} after {sched.iterations} iterations")
    report = evaluate_design(sched, scenario.costs)
    run.schedule, run.report = sched, report
    _emit_design_outputs(run, scenario, series, rep, sched, report, figures)
    run.meta.update({"design": {"n_cells": design.n_cells, "storage_days": design.storage_days},
                     "solver": {"status": sched.status, "iterations": sched.iterations,
                                "seconds": time.perf_counter() - t0}})
    return run


def run_simulate(scenario: Scenario, schedule_paths, design: Design, out_dir) -> RunOutcome:
    """Forward-integrate an external schedule and report constraint violations."""
    run = _start(scenario, out_dir, "simulate")
    _, rep = prepare(scenario)
    controls, initial = read_schedule_csv(schedule_paths)
    res = simulate(scenario.problem(rep, design), controls, initial)
    violations = [{"kind": v.kind, "rep_day": v.rep_day + 1 if v.rep_day >= 0 else None, "step": v.step,
                   "value": v.value, "limit": v.limit} for v in res.violations]
    run.files.append(reports.write_json(run.out_dir / "simulation_report.json",
                                        {**res.summary(), "violation_list": violations}))
    tr = res.trajectories
    for r in range(rep.k):
        rows = zip(range(tr["current_density"].shape[1]), tr["current_density"][r], tr["temperature"][r],
                   tr["y_h2_anode"][r], tr["water_in"][r], tr["anode_liquid_out"][r], tr["h2_net"][r],
                   tr["v_deg_intraday"][r])
        run.files.append(reports.write_csv(run.out_dir / f"simulated_r{r + 1}.csv",
                                           ("step", "i", "T", "y_h2_anode", "water_in", "anode_liquid_out",
                                            "h2_net", "V_deg_intraday"), rows))
    run.meta["violations"] = res.summary()["violations"]
    run.meta["design"] = {"n_cells": design.n_cells, "storage_days": design.storage_days}
    run.simulation = res
    return run
