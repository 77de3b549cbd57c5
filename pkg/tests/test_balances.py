import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pemdesign import balances as bal
from pemdesign.constants import FARADAY
from pemdesign.electrochem import DomainError

GEOM = bal.StackGeometry(n_cells=100)


def test_faradaic_rates():
    r = bal.faradaic_rates(1.0, GEOM)
    h2 = 100 * 450.0 / (2 * FARADAY)
    assert r.h2_gen == pytest.approx(h2, rel=1e-15)
    assert r.o2_gen == pytest.approx(h2 / 2, rel=1e-15)
    assert r.h2o_consumed == pytest.approx(h2, rel=1e-15)


def test_crossover_fraction_and_recombination():
    c = bal.h2_crossover(2.0, 30.0, 1.0, GEOM, conversion=0.9)
    gen = bal.faradaic_rates(2.0, GEOM).h2_gen
    assert c.gross / gen == pytest.approx(0.0031 * 29, rel=1e-12)
    assert c.h2_to_anode == pytest.approx(0.1 * c.gross, rel=1e-12)
    assert c.o2_consumed == pytest.approx(c.h2_recombined / 2, rel=1e-15)
    assert c.water_from_recombination == pytest.approx(c.h2_recombined, rel=1e-15)


def test_crossover_rejects_reverse_pressure():
    with pytest.raises(DomainError):
        bal.h2_crossover(1.0, 1.0, 30.0, GEOM)
    with pytest.raises(DomainError):
        bal.h2_crossover(1.0, 30.0, 1.0, GEOM, conversion=1.5)


@pytest.mark.parametrize("temp_k, p_sat_bar", [(333.15, 0.19946), (353.15, 0.47414), (363.15, 0.70182)])
def test_saturation_pressure_against_steam_tables(temp_k, p_sat_bar):
    # Antoine fit, about 1 % from the steam tables over 60-90 degC
    assert bal.saturation_pressure(temp_k) == pytest.approx(p_sat_bar, rel=1.5e-2)


def test_drag_polynomial_uses_celsius():
    # hand evaluation at i = 1, 80 degC, 30 bar
    expected = 2.27 - 0.70 - 0.6 + 0.6 + 0.24 + 0.4 - 0.48
    assert bal.drag_coefficient(1.0, 80.0, 30.0) == pytest.approx(expected, abs=1e-12)


def test_drag_clamped_at_zero():
    assert bal.drag_coefficient(0.1, 100.0, 100.0) < 0
    assert bal.electroosmotic_drag(0.1, 373.15, 100.0, GEOM) == 0.0
    assert bal.electroosmotic_drag(0.1, 373.15, 100.0, GEOM, clamp=False) < 0


def test_thermal_scaling_is_area_proportional():
    ref = bal.ThermalReference()
    g1 = bal.StackGeometry.scaled(60, ref)
    g2 = bal.StackGeometry.scaled(600, ref)
    assert g1.thermal_capacitance == pytest.approx(ref.capacitance)
    assert g2.thermal_capacitance == pytest.approx(10 * ref.capacitance)
    assert g2.thermal_resistance == pytest.approx(ref.resistance / 10)


def _consistent_point(i, T, purge=0.0, y_h2=0.015):
    """Steady operating point that satisfies both electrode balances by construction."""
    rates = bal.faradaic_rates(i, GEOM)
    cross = bal.h2_crossover(i, 30.0, 1.0, GEOM)
    drag = bal.electroosmotic_drag(i, T, 30.0, GEOM)
    y_vap_an = bal.anode_vapour_fraction(T, 1.0)
    o2_out = rates.o2_gen - cross.o2_consumed
    g3 = (o2_out + cross.h2_to_anode + purge) / (1 - y_vap_an)
    y_vap_cat = bal.saturation_pressure(T) / 30.0
    g4 = (rates.h2_gen - cross.gross) / (1 - y_vap_cat)
    liq4 = drag - y_vap_cat * g4
    water_in = 3.0 * rates.h2_gen
    liq3 = water_in - y_vap_an * g3 - drag - rates.h2o_consumed + cross.water_from_recombination
    flows = bal.FlowState(water_in=water_in, anode_out_liquid_water=liq3, anode_out_gas=g3,
                          cathode_out_liquid_water=liq4, cathode_out_gas=g4, n2_purge=purge,
                          y_h2_anode=cross.h2_to_anode / g3, y_o2_anode=o2_out / g3, y_n2_anode=purge / g3,
                          h2_net=(1 - y_vap_cat) * g4)
    return flows, rates, cross, drag


@settings(max_examples=100, deadline=None)
@given(i=st.floats(0.1, 4.0), T=st.floats(333.15, 363.15), purge=st.floats(0.0, 0.05))
def test_atom_conservation_at_consistent_points(i, T, purge):
    flows, rates, cross, drag = _consistent_point(i, T, purge)
    an = bal.anode_balance(flows, rates, cross, T, drag, 1.0)
    cat = bal.cathode_balance(flows, rates, cross, drag, T, 30.0)
    scale = rates.h2_gen
    for res in (*an.values(), *cat.values()):
        assert abs(res) <= 1e-12 * scale
    # hydrogen atoms in = out, oxygen atoms in = out
    y_vap_an = bal.anode_vapour_fraction(T, 1.0)
    y_vap_cat = bal.saturation_pressure(T) / 30.0
    water_out = (flows.anode_out_liquid_water + flows.cathode_out_liquid_water
                 + y_vap_an * flows.anode_out_gas + y_vap_cat * flows.cathode_out_gas)
    h_in = 2 * flows.water_in
    h_out = 2 * water_out + 2 * flows.h2_net + 2 * flows.y_h2_anode * flows.anode_out_gas
    o_in = flows.water_in
    o_out = water_out + 2 * flows.y_o2_anode * flows.anode_out_gas
    assert h_out == pytest.approx(h_in, rel=1e-12)
    assert o_out == pytest.approx(o_in, rel=1e-12)


def test_mole_fractions_close_with_vapour():
    T = 343.15
    flows, *_ = _consistent_point(2.0, T, purge=0.01)
    total = flows.y_h2_anode + flows.y_o2_anode + flows.y_n2_anode + bal.anode_vapour_fraction(T, 1.0)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_energy_balance_at_ambient_idle_is_zero():
    flows = bal.FlowState()
    assert bal.energy_balance_rhs(298.15, flows, 1.48, 0.0, GEOM) == pytest.approx(0.0, abs=1e-15)


def test_energy_balance_heats_above_thermoneutral():
    flows, *_ = _consistent_point(2.0, 340.0)
    warm = bal.energy_balance_rhs(340.0, flows, 2.2, 2.0, GEOM)
    cool = bal.energy_balance_rhs(340.0, flows, 1.5, 2.0, GEOM)
    assert warm > cool
    assert bal.heat_generation(1.48, 2.0, GEOM) == 0.0


def test_holdups_follow_ideal_gas():
    g = bal.StackGeometry(n_cells=1)
    assert bal.anode_gas_holdup(300.0, g) == pytest.approx(1e5 * g.electrode_volume / (8.314 * 300.0))
    assert np.all(bal.cathode_h2_holdup(np.array([333.15, 353.15]), g) > 0)


def test_geometry_validation():
    with pytest.raises(ValueError):
        bal.StackGeometry(n_cells=0)
