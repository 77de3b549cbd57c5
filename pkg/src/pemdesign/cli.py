"""Command line: ``pemdesign optimize|evaluate|simulate|prices``.

Exit codes: 0 success, 2 bad input (configuration, price file, schedule
file, usage), 3 infeasible design or aborted search, 4 solver failure.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import ConfigError, Scenario, load_scenario
from .design_opt import Design, SearchAborted
from .prices import SYNTHETIC_PATTERNS, PriceLoadError, cluster, load_prices, synthetic_prices, write_prices
from .runner import SolverFailure, finish, run_evaluate, run_optimize, run_simulate
from .schedule_opt import InfeasibleDesign
from .simulate import ScheduleFormatError

EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 2, 3, 4
log = logging.getLogger("pemdesign")


class _JsonLines(logging.Formatter):
    def format(self, record):
        return json.dumps({"time": self.formatTime(record, "%Y-%m-%dT%H:%M:%S"), "level": record.levelname,
                           "logger": record.name, "message": record.getMessage()})


def _setup_logging(verbose: bool):
    log.setLevel(logging.DEBUG)
    if not any(getattr(h, "_pemdesign_console", False) for h in log.handlers):
        h = logging.StreamHandler(sys.stderr)
        h.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        h._pemdesign_console = True
        log.addHandler(h)
    for h in log.handlers:
        if getattr(h, "_pemdesign_console", False):
            h.setLevel(logging.DEBUG if verbose else logging.INFO)


def _attach_run_log(out_dir: Path) -> logging.Handler:
    out_dir.mkdir(parents=True, exist_ok=True)
    h = logging.FileHandler(out_dir / "run.log", mode="w")
    h.setFormatter(_JsonLines())
    h.setLevel(logging.DEBUG)
    log.addHandler(h)
    return h


# options accepted both before and after the subcommand; the later one wins
_COMMON = [
    click.option("--scenario", "scenario_path", type=click.Path(dir_okay=False, path_type=Path),
                 help="Scenario TOML file."),
    click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory."),
    click.option("--seed", type=int, help="Override the scenario seed."),
    click.option("--jobs", type=click.IntRange(min=1), help="Parallel inner solves during the search."),
    click.option("--grid-audit", is_flag=True, default=None, help="Also evaluate a 5 x 5 grid over the box."),
    click.option("--no-figures", is_flag=True, default=None, help="Skip PNG rendering."),
    click.option("-v", "--verbose", is_flag=True, default=None, help="Debug logging on stderr."),
]
_COMMON_KEYS = ("scenario_path", "out_dir", "seed", "jobs", "grid_audit", "no_figures", "verbose")


def common_options(fn):
    for opt in reversed(_COMMON):
        fn = opt(fn)
    return fn


def _settings(ctx: click.Context, local: dict) -> dict:
    merged = dict((ctx.find_root().obj or {}))
    merged.update({k: v for k, v in local.items() if k in _COMMON_KEYS and v is not None})
    merged.setdefault("jobs", 1)
    for flag in ("grid_audit", "no_figures", "verbose"):
        merged[flag] = bool(merged.get(flag))
    _setup_logging(merged["verbose"])
    return merged


def _scenario(s: dict, required: bool = True) -> Scenario | None:
    path = s.get("scenario_path")
    if path is None:
        if required:
            raise click.UsageError("--scenario is required for this command")
        return None
    sc = load_scenario(path)
    if s.get("seed") is not None:
        sc = sc.with_seed(s["seed"])
    return sc


def _out_dir(s: dict, sc: Scenario, command: str) -> Path:
    if s.get("out_dir") is not None:
        return s["out_dir"]
    if sc.output_dir is not None:
        return sc.output_dir
    return Path("runs") / sc.name / command


def _execute(command: str, out: Path, job):
    """Run ``job()`` with a per-run JSON-lines log; always write the manifest."""
    handler = _attach_run_log(out)
    run = None
    try:
        log.info("%s: writing to %s", command, out)
        run = job()
        return run
    except Exception as exc:
        log.error("%s failed: %s: %s", command, type(exc).__name__, exc)
        raise
    finally:
        log.removeHandler(handler)
        handler.close()
        if run is not None:
            finish(run, [out / "run.log"])


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@common_options
@click.version_option(package_name="artifact", prog_name="pemdesign")
@click.pass_context
def cli(ctx, **kw):
    """Size a PEM electrolysis plant and its storage against an hourly price year."""
    ctx.obj = {k: v for k, v in kw.items() if v is not None}


@cli.command()
@common_options
@click.pass_context
def optimize(ctx, **kw):
    """Search cell count and storage size for the least-cost design."""
    s = _settings(ctx, kw)
    sc = _scenario(s)
    out = _out_dir(s, sc, "optimize")
    run = _execute("optimize", out, lambda: run_optimize(sc, out, jobs=s["jobs"], grid_audit=s["grid_audit"],
                                                         figures=not s["no_figures"]))
    r = run.report
    click.echo(f"design: {run.search.best.design.n_cells:.0f} cells, {run.search.best.design.storage_days:.4g} days"
               f" of storage; LCOH {r.lcoh:.3f} $/kg; {'converged' if run.search.converged else 'NOT converged'}"
               f" after {run.search.iterations} iterations")


@cli.command()
@common_options
@click.option("--n-cells", type=click.FloatRange(min=0, min_open=True), help="Cells in the stack.")
@click.option("--storage-days", type=click.FloatRange(min=0), help="Storage size in days of demand.")
@click.option("--warm-start", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="solution.json from an earlier run.")
@click.pass_context
def evaluate(ctx, n_cells, storage_days, warm_start, **kw):
    """Solve the schedule and cost one fixed design."""
    s = _settings(ctx, kw)
    sc = _scenario(s)
    design = _design(sc, n_cells, storage_days)
    out = _out_dir(s, sc, "evaluate")
    run = _execute("evaluate", out, lambda: run_evaluate(sc, design, out, figures=not s["no_figures"],
                                                         warm_start=warm_start))
    click.echo(f"LCOH {run.report.lcoh:.4f} $/kg; PV {run.report.pv_total:.6g} $;"
               f" replacement every {run.report.replacement_interval} years")


def _design(sc: Scenario, n_cells, storage_days) -> Design:
    if n_cells is not None and storage_days is not None:
        return Design(n_cells, storage_days)
    if n_cells is None and storage_days is None and sc.design is not None:
        return sc.design
    raise click.UsageError("give both --n-cells and --storage-days, or a [design] table in the scenario")


@cli.command()
@common_options
@click.argument("schedules", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--n-cells", type=click.FloatRange(min=0, min_open=True))
@click.option("--storage-days", type=click.FloatRange(min=0))
@click.pass_context
def simulate(ctx, schedules, n_cells, storage_days, **kw):
    """Forward-simulate schedule CSVs (one per representative day) and list violations.

    The design comes from the options, else from schedule_summary.json next to
    the first file, else from the scenario.
    """
    s = _settings(ctx, kw)
    sc = _scenario(s)
    if n_cells is None and storage_days is None:
        summary = schedules[0].parent / "schedule_summary.json"
        if summary.exists():
            d = json.loads(summary.read_text())["design"]
            n_cells, storage_days = d["n_cells"], d["storage_days"]
    design = _design(sc, n_cells, storage_days)
    out = _out_dir(s, sc, "simulate")
    run = _execute("simulate", out, lambda: run_simulate(sc, list(schedules), design, out))
    counts = run.simulation.summary()["violations"]
    click.echo("no violations" if not counts else "violations: " + ", ".join(f"{k}={v}" for k, v in counts.items()))


@cli.group()
def prices():
    """Generate or cluster price series."""


@prices.command("gen")
@click.argument("pattern", type=click.Choice(SYNTHETIC_PATTERNS))
@click.option("--mean", type=float, default=50.0, show_default=True)
@click.option("--volatility", type=float, default=30.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--days", type=click.IntRange(1, 365), default=365, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), required=True)
def prices_gen(pattern, mean, volatility, seed, days, output):
    """Write a synthetic hourly price year as timestamp,price CSV."""
    series = synthetic_prices(pattern, mean, volatility, seed, days)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_prices(series, output)
    click.echo(f"{output}: {series.values.size} hours, mean {series.values.mean():.2f} $/MWh")


@prices.command("cluster")
@click.argument("csv_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--k", type=click.IntRange(1, 365), default=7, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--headerless", is_flag=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=Path("repdays.json"),
              show_default=True)
def prices_cluster(csv_path, k, seed, headerless, output):
    """Group the days of a price year into k representative days."""
    series = load_prices(csv_path, headerless=headerless)
    rep = cluster(series, k, seed)
    output.parent.mkdir(parents=True, exist_ok=True)
    rep.save(output)
    click.echo(f"{output}: weights {rep.weights.tolist()}")


def main(argv=None) -> int:
    """Console entry point; maps failures to exit codes."""
    try:
        cli.main(args=argv, prog_name="pemdesign", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except (ConfigError, PriceLoadError, ScheduleFormatError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    except InfeasibleDesign as exc:
        click.echo(f"infeasible: {exc}", err=True)
        return EXIT_INFEASIBLE
    except SearchAborted as exc:
        click.echo(f"search aborted: {exc}", err=True)
        return EXIT_SOLVER if exc.solver_failure else EXIT_INFEASIBLE
    except SolverFailure as exc:
        click.echo(f"solver failure: {exc}", err=True)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
