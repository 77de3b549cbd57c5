import csv
import json
import math

import numpy as np

from pemdesign import reports
from pemdesign.economics import CostParams, evaluate_design


def test_json_cleans_non_finite(tmp_path):
    path = reports.write_json(tmp_path / "a.json", {"x": math.inf, "y": np.float64(1.5), "z": np.arange(2)})
    assert json.loads(path.read_text()) == {"x": None, "y": 1.5, "z": [0, 1]}


def test_csv_round_trips_floats_exactly(tmp_path):
    v = 0.1 + 0.2
    path = reports.write_csv(tmp_path / "a.csv", ("a",), [(v,)])
    assert float(path.read_text().splitlines()[1]) == v


def test_schedule_files(solved, tmp_path):
    paths = reports.write_schedule(solved, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["schedule_r1.csv", "schedule_r2.csv", "schedule_summary.json"]
    with (tmp_path / "schedule_r1.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == reports.SCHEDULE_COLUMNS
    assert len(rows) == solved.problem.steps_per_day
    soc = np.array([float(r["soc"]) for r in rows])
    assert soc.min() >= -1e-6 * solved.problem.capacity_mol


def test_breakdown_csv(solved, tmp_path):
    rep = evaluate_design(solved, CostParams())
    path = reports.write_lcoh_breakdown([("a", rep)], tmp_path / "b.csv")
    row = next(csv.DictReader(path.open()))
    parts = sum(float(row[c]) for c in reports.BREAKDOWN_COLUMNS[1:-1])
    assert parts == __import__("pytest").approx(float(row["lcoh"]), rel=1e-9)


def test_plot_data(solved, skewed_year, tmp_path):
    paths = reports.write_plot_data(solved, skewed_year, tmp_path)
    hist = list(csv.DictReader(paths[0].open()))
    hours = sum(float(r["hours"]) for r in hist)
    assert abs(hours - 8760) < 1e-6
    dur = list(csv.DictReader(paths[1].open()))
    assert len(dur) == 8760
    assert float(dur[0]["price"]) >= float(dur[-1]["price"])


def test_manifest_checksums(tmp_path):
    f = reports.write_json(tmp_path / "x.json", {"a": 1})
    m = json.loads(reports.write_manifest(tmp_path, [f], {"k": "v"}).read_text())
    assert m["files"][0]["sha256"] == reports.sha256(f)
    assert m["k"] == "v"


def test_figures_render(solved, skewed_year, tmp_path):
    from pemdesign.plotting import render_all

    rep = evaluate_design(solved, CostParams())
    paths = render_all(solved, rep, skewed_year, tmp_path)
    assert all(p.stat().st_size > 1000 and p.read_bytes()[:4] == b"\x89PNG" for p in paths)
