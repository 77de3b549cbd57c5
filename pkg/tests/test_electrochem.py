import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pemdesign.constants import FARADAY, GAS_CONSTANT
from pemdesign.electrochem import (DomainError, ElectrochemParams, activation_overpotential, enthalpy,
                                   entropy, membrane_conductivity, ohmic_overpotential, open_circuit_voltage,
                                   reaction_gibbs, total_voltage, undegraded_voltage)

P = ElectrochemParams()

# NIST-JANAF standard-state values at 298.15 K
H_F_WATER_LIQ = -285.83e3  # J/mol
S_WATER_LIQ, S_H2, S_O2 = 69.95, 130.68, 205.15  # J/(mol K)


def test_standard_gibbs_matches_tabulated_values():
    dg = H_F_WATER_LIQ - 298.15 * (S_WATER_LIQ - S_H2 - 0.5 * S_O2)
    assert reaction_gibbs(298.15) == pytest.approx(-dg, rel=2e-3)


def test_open_circuit_voltage_standard_state():
    v = open_circuit_voltage(298.15, P, p_h2=1.0, p_o2=1.0)
    assert v == pytest.approx(1.229, abs=0.005)


def test_nernst_pressure_term():
    T = 353.15
    lift = open_circuit_voltage(T, P, p_h2=30.0, p_o2=1.0) - open_circuit_voltage(T, P, p_h2=1.0, p_o2=1.0)
    assert lift == pytest.approx(GAS_CONSTANT * T / (2 * FARADAY) * math.log(30.0), rel=1e-12)


def test_reversible_potential_falls_with_temperature():
    assert open_circuit_voltage(353.15, P, 1.0, 1.0) < open_circuit_voltage(298.15, P, 1.0, 1.0)


@pytest.mark.parametrize("temp_c, expected", [(60.0, 1.78), (80.0, 1.70)])
def test_polarization_anchors(temp_c, expected):
    assert total_voltage(1.0, temp_c + 273.15, 0.0, P) == pytest.approx(expected, abs=0.02)


def test_shomate_water_formation_enthalpy():
    assert enthalpy("H2O(l)", 298.15) == pytest.approx(H_F_WATER_LIQ, rel=1e-3)
    assert entropy("H2", 298.15) == pytest.approx(S_H2, rel=1e-3)


def test_ohmic_term_is_linear_in_current():
    T = 343.15
    assert ohmic_overpotential(2.0, T, P) == pytest.approx(2 * ohmic_overpotential(1.0, T, P), rel=1e-14)
    assert ohmic_overpotential(1.0, T, P) == pytest.approx(P.membrane_thickness / membrane_conductivity(T, P))


def test_degradation_is_additive():
    assert total_voltage(2.0, 340.0, 0.3, P) - total_voltage(2.0, 340.0, 0.0, P) == pytest.approx(0.3, abs=1e-14)


def test_domain_errors():
    with pytest.raises(DomainError):
        activation_overpotential(-0.1, 340.0, P)
    with pytest.raises(DomainError):
        total_voltage(1.0, 340.0, -0.01, P)
    with pytest.raises(DomainError):
        open_circuit_voltage(200.0, P)


def test_array_inputs_broadcast():
    i = np.linspace(0.1, 4.0, 7)
    v = undegraded_voltage(i, 343.15, P)
    assert v.shape == (7,)
    assert np.all(np.isfinite(v))


@settings(max_examples=200, deadline=None)
@given(i=st.floats(0.1, 3.9), di=st.floats(1e-3, 0.1), T=st.floats(333.15, 363.15))
def test_voltage_increases_with_current(i, di, T):
    assert undegraded_voltage(i + di, T, P) > undegraded_voltage(i, T, P)


@settings(max_examples=200, deadline=None)
@given(i=st.floats(0.1, 4.0), T=st.floats(333.15, 353.15), dT=st.floats(0.5, 10.0))
def test_voltage_decreases_with_temperature(i, T, dT):
    assert undegraded_voltage(i, T + dT, P) < undegraded_voltage(i, T, P)


@settings(max_examples=100, deadline=None)
@given(i=st.floats(0.1, 4.0), T=st.floats(333.15, 363.15))
def test_cell_voltage_exceeds_reversible(i, T):
    assert undegraded_voltage(i, T, P) > open_circuit_voltage(T, P)


def test_params_validation():
    with pytest.raises(ValueError):
        ElectrochemParams(alpha_an=1.5, alpha_cat=1.0)
    with pytest.raises(ValueError):
        ElectrochemParams(p_anode=0.0)
