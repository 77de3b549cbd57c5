import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pemdesign.degradation import DegradationParams, replacement_interval
from pemdesign.economics import (PRESETS, AnnualStreams, CostParams, annual_fopex, annual_labor, capex,
                                 discount_factors, evaluate_design, lcoh, present_value, replacement_years,
                                 vopex_by_year)

C = CostParams.preset("2022")


def test_presets_load():
    for name in PRESETS:
        CostParams.preset(name)
    assert CostParams.preset("2030-low").stack_capex == 0.39
    assert CostParams.preset("2030-mid").bop_capex == 103.0
    with pytest.raises(ValueError):
        CostParams.preset("1999")


def test_capex_components_by_hand():
    cap = capex(100_000, 0.5, 200_000.0, 50_000.0, C)
    assert cap.c_stack_bare == pytest.approx(100_000 * 450 * 2.37)
    assert cap.c_ebop == pytest.approx(0.5 * 289 * 200_000)
    assert cap.c_mbop == pytest.approx(0.5 * 289 * 110_000 / 50_000 * 50_000)
    assert cap.c_storage == pytest.approx(0.5 * 50_000 * 500)
    direct = cap.c_stack_bare + cap.c_ebop + cap.c_mbop
    assert cap.indirect == pytest.approx(0.42 * direct)
    assert cap.total == pytest.approx(1.42 * direct + cap.c_storage)


def test_fixed_opex_by_hand():
    assert annual_labor(C) == 70 * 10 * 24 * 350
    fo = annual_fopex(C, 1e8)
    assert fo["overhead"] == pytest.approx(0.2 * 5_880_000)
    assert fo["tax_insurance"] == pytest.approx(2e6)
    assert fo["total"] == pytest.approx(5_880_000 * 1.2 + 2e6)


def test_discounting():
    d = discount_factors(C)
    assert d.size == 40
    assert d[0] == pytest.approx(1 / 1.08)
    assert d.sum() == pytest.approx((1 - 1.08**-40) / 0.08, rel=1e-12)


def test_replacement_years():
    assert replacement_years(7, 40).tolist() == [7, 14, 21, 28, 35]
    assert replacement_years(2, 40)[-1] == 40
    with pytest.raises(ValueError):
        replacement_years(0, 40)


def test_vopex_escalation_resets_at_replacement():
    s = AnnualStreams(vopex_year1=100.0, fopex=0.0, annual_h2_kg=1.0, vopex_escalation=10.0)
    assert vopex_by_year(s, 3, 7).tolist() == [100, 110, 120, 100, 110, 120, 100]


def _reference_pv(cap, interval, streams, params):
    """Straight year-by-year loop."""
    total = cap.total
    for y in range(1, params.plant_life + 1):
        df = (1 + params.discount_rate) ** -y
        cash = params.unplanned_replacement * cap.direct + streams.fopex
        cash += streams.vopex_year1 + ((y - 1) % interval) * streams.vopex_escalation
        if y % interval == 0:
            cash += params.planned_replacement * cap.direct
        total += cash * df
    return total


@pytest.mark.parametrize("interval", [1, 2, 3, 7])
def test_present_value_matches_loop(interval):
    cap = capex(120_000, 0.7, 250_000.0, 50_500.0, C)
    s = AnnualStreams(vopex_year1=4.5e7, fopex=9e6, annual_h2_kg=50_500.0 * 365, vopex_escalation=2e6)
    rep = present_value(120_000, 0.7, cap, interval, s, C)
    assert rep.pv_total == pytest.approx(_reference_pv(cap, interval, s, C), rel=1e-12)
    assert rep.lcoh == pytest.approx(rep.pv_total / (s.annual_h2_kg * discount_factors(C).sum()), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(n=st.floats(4e4, 3e5), days=st.floats(0.1, 14), interval=st.integers(1, 40),
       vopex=st.floats(0, 1e8), esc=st.floats(0, 1e7))
def test_breakdown_sums_to_lcoh(n, days, interval, vopex, esc):
    cap = capex(n, days, 1e5, 5e4, C)
    s = AnnualStreams(vopex, 8e6, 5e4 * 365, esc)
    rep = present_value(n, days, cap, interval, s, C)
    assert sum(rep.breakdown().values()) == pytest.approx(rep.lcoh, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(vopex=st.floats(0, 1e8), a=st.integers(1, 20), b=st.integers(1, 20))
def test_longer_interval_cheaper_without_escalation(vopex, a, b):
    cap = capex(1e5, 1.0, 1e5, 5e4, C)
    s = AnnualStreams(vopex, 8e6, 5e4 * 365, 0.0)
    lo, hi = sorted((a, b))
    assert present_value(1e5, 1, cap, hi, s, C).pv_total <= present_value(1e5, 1, cap, lo, s, C).pv_total + 1e-6


def test_lcoh_requires_production():
    with pytest.raises(ValueError):
        lcoh(1.0, 0.0, C)


def test_cost_validation():
    with pytest.raises(ValueError):
        CostParams(site_prep=1.5)
    with pytest.raises(ValueError):
        CostParams(stack_capex=-1)


def test_scaled_costs_scale_capex():
    cap1 = capex(1e5, 1, 1e5, 5e4, C)
    cap2 = capex(1e5, 1, 1e5, 5e4, C.scaled(2.0))
    assert cap2.total == pytest.approx(2 * cap1.total)


def test_zero_cells_warns():
    with pytest.warns(UserWarning):
        capex(0, 1.0, 0.0, 5e4, C)


@pytest.mark.parametrize("dv, years", [(0.45, 2), (1.97, 1), (0.0, 7)])
def test_interval_examples(dv, years):
    assert replacement_interval(dv, DegradationParams()) == years


def test_evaluate_design(solved):
    rep = evaluate_design(solved, C)
    assert rep.replacement_interval == replacement_interval(solved.end_of_year_degradation, DegradationParams())
    assert sum(rep.breakdown().values()) == pytest.approx(rep.lcoh, rel=1e-9)
    assert 0 < rep.utilization < 1
    assert rep.daily_h2_kg >= 50_000 * (1 - 1e-6)
    d = rep.to_dict()
    assert d["capex"]["total"] == pytest.approx(rep.capex_total)
    assert math.isfinite(d["lcoh"])


def test_utilization_definition(small_problem):
    from types import SimpleNamespace

    from pemdesign.economics import utilization
    from pemdesign.electrochem import undegraded_voltage

    v_ref = undegraded_voltage(4.0, 353.15, small_problem.electrochem)
    full = np.full((2, 24), 4.0)
    s = SimpleNamespace(problem=small_problem, trajectories={"current_density": full, "v_undeg": full * 0 + v_ref})
    assert utilization(s) == pytest.approx(1.0, rel=1e-14)
    s.trajectories = {"current_density": full / 2, "v_undeg": full * 0 + v_ref}
    assert utilization(s) == pytest.approx(0.5, rel=1e-14)
