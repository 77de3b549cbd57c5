import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pemdesign.design_opt import (GOLDEN, Design, SearchAborted, SearchBox, TrialGrid, TrialResult, gss_step,
                                  optimize)


def _quadratic(x0, y0):
    return lambda d: (d.n_cells - x0) ** 2 / 1e8 + 50 * (d.storage_days - y0) ** 2 + 1.0


def test_golden_ratio():
    assert GOLDEN == pytest.approx((math.sqrt(5) - 1) / 2)


def test_trial_grid_layout():
    g = TrialGrid.for_box((0.0, 10.0), (0.0, 1.0))
    d = g.designs()
    assert d["A"].n_cells < d["B"].n_cells and d["A"].storage_days == d["B"].storage_days
    assert d["C"].storage_days > d["A"].storage_days
    assert d["A"].n_cells == pytest.approx(10 * (1 - GOLDEN))


def test_one_step_keeps_minimum():
    f = _quadratic(60_000, 1.0)
    xr, yr, grid, win = gss_step((40_000, 300_000), (0.1, 14.0), f)
    assert xr[0] <= 60_000 <= xr[1]
    assert yr[0] <= 1.0 <= yr[1]
    assert (xr[1] - xr[0]) == pytest.approx(GOLDEN * 260_000)


@pytest.mark.parametrize("x0, y0", [(50_100, 1.39), (116_200, 0.51), (299_000, 13.9), (40_500, 0.12)])
def test_converges_on_separable_convex(x0, y0):
    box = SearchBox()
    res = optimize(_quadratic(x0, y0), box)
    assert res.converged and res.iterations <= 30
    assert abs(res.best.design.n_cells - x0) <= 1e-3 * 260_000
    assert abs(res.best.design.storage_days - y0) <= 1e-3 * 13.9
    pvs = [row["incumbent_pv"] for row in res.trace]
    assert all(b <= a for a, b in zip(pvs, pvs[1:]))


def test_trials_reused_across_iterations():
    calls = []

    def f(d):
        calls.append(d)
        return _quadratic(80_000, 2.0)(d)

    res = optimize(f, SearchBox())
    assert len(calls) == len(set(calls)) == len(res.trials)
    assert len(calls) < 4 * res.iterations  # golden points are shared between iterations


def test_infeasible_region_is_avoided():
    def f(d):
        return math.inf if d.n_cells < 70_000 else _quadratic(60_000, 1.0)(d)

    res = optimize(f, SearchBox())
    assert res.best.design.n_cells >= 70_000
    assert res.best.design.n_cells == pytest.approx(70_000, abs=1e-3 * 260_000)


def test_all_infeasible_aborts():
    with pytest.raises(SearchAborted):
        optimize(lambda d: math.inf, SearchBox())


class _FailingSolver:
    returns_trials = True

    def __call__(self, d, warm=None):
        return TrialResult(d, math.inf, "max_iter", message="max_iter")


def test_abort_reports_solver_failures():
    with pytest.raises(SearchAborted) as info:
        optimize(_FailingSolver(), SearchBox())
    assert info.value.solver_failure


def test_grid_audit_counts_minima():
    def bimodal(d):
        return min((d.n_cells - 40_000) ** 2, (d.n_cells - 300_000) ** 2 + 1e8) / 1e8 + d.storage_days

    res = optimize(bimodal, SearchBox(), grid_audit=True)
    assert res.grid_audit["local_minima"] >= 1
    uni = optimize(_quadratic(100_000, 3.0), SearchBox(), grid_audit=True)
    assert uni.grid_audit["local_minima"] == 1


def test_parallel_matches_serial():
    f = _Picklable()
    a = optimize(f, SearchBox(), jobs=1)
    b = optimize(f, SearchBox(), jobs=2)
    assert a.best.design == b.best.design
    assert [r["winner"] for r in a.trace] == [r["winner"] for r in b.trace]


class _Picklable:
    def __call__(self, d):
        return _quadratic(90_000, 4.0)(d)


@settings(max_examples=30, deadline=None)
@given(x0=st.floats(40_000, 300_000), y0=st.floats(0.1, 14.0), wx=st.floats(0.1, 10), wy=st.floats(0.1, 10))
def test_separable_property(x0, y0, wx, wy):
    res = optimize(lambda d: wx * ((d.n_cells - x0) / 1e4) ** 2 + wy * (d.storage_days - y0) ** 2,
                   SearchBox(), max_iter=30)
    assert abs(res.best.design.n_cells - x0) <= 1e-3 * 260_000
    assert abs(res.best.design.storage_days - y0) <= 1e-3 * 13.9


def test_design_key_rounding():
    assert Design(1e5 + 1e-9, 1.0).key() == Design(1e5, 1.0).key()


def test_flat_prices_push_storage_to_lower_bound():
    from pemdesign.config import load_scenario
    from pemdesign.design_opt import InnerEvaluator
    from pemdesign.prices import cluster

    from .conftest import SCENARIOS

    sc = load_scenario(SCENARIOS / "flat_prices.toml")
    rep = cluster(sc.prices.load(sc.seed), sc.prices.k, sc.cluster_seed)
    res = optimize(InnerEvaluator(sc.problem(rep), sc.costs), sc.search)
    lo, hi = sc.search.storage_days_range
    assert res.converged
    assert res.best.design.storage_days - lo <= sc.search.tolerance * (hi - lo)
