"""Species mole balances and the lumped stack energy balance.

All flows are stack totals in mol/s.  Balance functions return residuals
(in - out - accumulation) so that a consistent operating point evaluates to
zero; the scheduler uses them as equality constraints and the forward
simulator uses them as checks.  Functions are written against an ``xp`` math
namespace so the same expressions can be built symbolically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import FARADAY, GAS_CONSTANT, T_AMBIENT, THERMONEUTRAL_VOLTAGE
from .electrochem import DomainError, sensible_enthalpy, enthalpy

log = logging.getLogger(__name__)

# Crossover correlation coefficient: fraction of Faradaic H2 generation lost per
# bar of differential pressure.  0.31 % / bar gives 9 % gross loss at 29 bar and
# ~1.9 % H2 in the dry anode gas after 90 % recombination.
CROSSOVER_COEFF_PER_BAR = 0.31e-2


@dataclass(frozen=True)
class ThermalReference:
    """Lumped thermal properties of a reference stack, scaled by active area."""

    capacitance: float = 120_000.0  # J/K
    resistance: float = 1.0 / 3.0  # K/W
    area: float = 60 * 450.0  # cm2


@dataclass(frozen=True)
class StackGeometry:
    n_cells: float
    cell_area: float = 450.0  # cm2
    electrode_thickness: float = 8.0e-3  # cm
    thermal_capacitance: float | None = None  # J/K
    thermal_resistance: float | None = None  # K/W

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.cell_area <= 0:
            raise ValueError("cell_area must be positive")
        ref = ThermalReference()
        if self.thermal_capacitance is None:
            object.__setattr__(self, "thermal_capacitance", ref.capacitance * self.total_area / ref.area)
        if self.thermal_resistance is None:
            object.__setattr__(self, "thermal_resistance", ref.resistance * ref.area / self.total_area)

    @classmethod
    def scaled(cls, n_cells, reference: ThermalReference, cell_area=450.0, **kw):
        area = n_cells * cell_area
        return cls(n_cells=n_cells, cell_area=cell_area,
                   thermal_capacitance=reference.capacitance * area / reference.area,
                   thermal_resistance=reference.resistance * reference.area / area, **kw)

    @property
    def total_area(self) -> float:
        return self.n_cells * self.cell_area

    @property
    def electrode_volume(self) -> float:
        """Gas holdup volume of one electrode over all cells, m3."""
        return self.n_cells * self.electrode_thickness * self.cell_area * 1e-6


@dataclass
class FlowState:
    """Stream flows (mol/s) around the stack; stream numbers follow the flowsheet."""

    water_in: float = 0.0  # stream 2
    anode_out_liquid_water: float = 0.0  # stream 3, liquid
    anode_out_gas: float = 0.0  # stream 3, gas incl. vapour
    cathode_out_liquid_water: float = 0.0  # stream 4, liquid
    cathode_out_gas: float = 0.0  # stream 4, gas incl. vapour
    n2_purge: float = 0.0  # stream 11
    y_h2_anode: float = 0.0
    y_o2_anode: float = 0.0
    y_n2_anode: float = 0.0
    h2_net: float = 0.0  # stream 6, dried product


def _numeric(x) -> bool:
    return isinstance(x, (int, float, np.ndarray, np.floating))


class FaradaicRates(NamedTuple):
    h2_gen: float
    o2_gen: float
    h2o_consumed: float


class Crossover(NamedTuple):
    gross: float
    h2_to_anode: float
    h2_recombined: float
    water_from_recombination: float
    o2_consumed: float


def faradaic_rates(i, geom: StackGeometry) -> FaradaicRates:
    """Production rates at 100 % Faradaic efficiency."""
    h2 = geom.n_cells * i * geom.cell_area / (2 * FARADAY)
    return FaradaicRates(h2_gen=h2, o2_gen=h2 / 2, h2o_consumed=h2)


def h2_crossover(i, p_cat, p_an, geom: StackGeometry, conversion=0.9,
                 coefficient=CROSSOVER_COEFF_PER_BAR) -> Crossover:
    """H2 permeation to the anode and its recombination with O2.

    ``coefficient`` multiplies the per-cell Faradaic term ``i A / 2F`` and the
    pressure difference in bar.
    """
    if _numeric(p_cat) and _numeric(p_an) and np.any(np.asarray(p_cat) < np.asarray(p_an)):
        raise DomainError("cathode pressure must be >= anode pressure")
    if _numeric(conversion) and not 0.0 <= conversion <= 1.0:
        raise DomainError("conversion must lie in [0, 1]")
    gross = geom.n_cells * coefficient * i * geom.cell_area / (2 * FARADAY) * (p_cat - p_an)
    recombined = gross * conversion
    return Crossover(gross=gross, h2_to_anode=gross * (1 - conversion), h2_recombined=recombined,
                     water_from_recombination=recombined, o2_consumed=recombined / 2)


def drag_coefficient(i, temperature_c, pressure):
    """Electro-osmotic drag coefficient (mol H2O per mol H+ pair basis).

    Fitted polynomial, evaluated with temperature in degC and cathode
    pressure in bar.
    """
    return (2.27 - 0.70 * i - 0.02 * pressure + 0.02 * pressure * i + 0.003 * temperature_c
            + 0.005 * i * temperature_c - 0.0002 * pressure * temperature_c)


def electroosmotic_drag(i, temperature, p_cat, geom: StackGeometry, clamp=True):
    """Water carried anode -> cathode, mol/s.  ``temperature`` in K."""
    ng = drag_coefficient(i, temperature - 273.15, p_cat)
    if clamp and _numeric(ng):
        if np.any(np.asarray(ng) < 0):
            log.warning("drag coefficient extrapolated below zero; clamped")
            ng = np.maximum(ng, 0.0)
    return geom.n_cells * ng * i * geom.cell_area / (2 * FARADAY)


def saturation_pressure(temperature):
    """Water vapour pressure in bar (Antoine, valid 255-373 K)."""
    return 10.0 ** (4.6543 - 1435.264 / (temperature - 64.848))


def anode_vapour_fraction(temperature, p_an):
    return saturation_pressure(temperature) / p_an


def anode_balance(flows: FlowState, rates: FaradaicRates, crossover: Crossover, temperature, drag=0.0,
                  p_an=1.0, holdup_rates=None) -> dict:
    """Anode residuals (mol/s).

    Liquid water holdup is neglected.  ``holdup_rates`` carries dN/dt for the
    gas species (keys ``o2``, ``h2``, ``n2``) when the caller discretizes them.
    """
    acc = {"o2": 0.0, "h2": 0.0, "n2": 0.0}
    if holdup_rates:
        acc.update(holdup_rates)
    g = flows.anode_out_gas
    y_vap = anode_vapour_fraction(temperature, p_an)
    water = (flows.water_in - flows.anode_out_liquid_water - y_vap * g - drag - rates.h2o_consumed
             + crossover.water_from_recombination)
    return {
        "water": water,
        "o2": rates.o2_gen - flows.y_o2_anode * g - crossover.o2_consumed - acc["o2"],
        "h2": crossover.h2_to_anode - flows.y_h2_anode * g - acc["h2"],
        "n2": flows.n2_purge - flows.y_n2_anode * g - acc["n2"],
    }


def cathode_balance(flows: FlowState, rates: FaradaicRates, crossover: Crossover, drag, temperature,
                    p_cat=30.0, holdup_rate=0.0) -> dict:
    """Cathode residuals (mol/s); O2 crossover is neglected."""
    y_vap = saturation_pressure(temperature) / p_cat
    g = flows.cathode_out_gas
    return {
        "water": drag - flows.cathode_out_liquid_water - y_vap * g,
        "h2": rates.h2_gen - crossover.gross - (1 - y_vap) * g - holdup_rate,
        "product": flows.h2_net - (1 - y_vap) * g,
    }


class AnodeEnthalpy(NamedTuple):
    h_in: float
    h_out: float


def enthalpy_flows(temperature, flows: FlowState, p_an=1.0, p_cat=30.0) -> AnodeEnthalpy:
    """Sensible (plus latent, for vapour) enthalpy flows in/out, W.

    Reference state is each species at ambient temperature; formation
    enthalpies are carried by the thermoneutral voltage.  Feed water and purge
    enter at ambient, so ``h_in`` is zero.
    """
    y_vap_an = saturation_pressure(temperature) / p_an
    y_vap_cat = saturation_pressure(temperature) / p_cat
    h_liq = sensible_enthalpy("H2O(l)", temperature, T_AMBIENT)
    h_vap = enthalpy("H2O(g)", temperature) - enthalpy("H2O(l)", T_AMBIENT)
    h_h2 = sensible_enthalpy("H2", temperature, T_AMBIENT)
    h_o2 = sensible_enthalpy("O2", temperature, T_AMBIENT)
    h_n2 = sensible_enthalpy("N2", temperature, T_AMBIENT)
    g3, g4 = flows.anode_out_gas, flows.cathode_out_gas
    out = ((flows.anode_out_liquid_water + flows.cathode_out_liquid_water) * h_liq
           + (y_vap_an * g3 + y_vap_cat * g4) * h_vap
           + g3 * (flows.y_o2_anode * h_o2 + flows.y_h2_anode * h_h2 + flows.y_n2_anode * h_n2)
           + (1 - y_vap_cat) * g4 * h_h2)
    return AnodeEnthalpy(h_in=0.0, h_out=out)


def heat_generation(v_total, i, geom: StackGeometry):
    """W above the thermoneutral voltage."""
    return geom.n_cells * (v_total - THERMONEUTRAL_VOLTAGE) * i * geom.cell_area


def heat_loss(temperature, geom: StackGeometry, ambient=T_AMBIENT):
    return (temperature - ambient) / geom.thermal_resistance


def energy_balance_rhs(temperature, flows: FlowState, v_total, i, geom: StackGeometry, p_an=1.0, p_cat=30.0):
    """dT/dt in K/s for the lumped stack."""
    h = enthalpy_flows(temperature, flows, p_an, p_cat)
    return (h.h_in - h.h_out + heat_generation(v_total, i, geom) - heat_loss(temperature, geom)) \
        / geom.thermal_capacitance


def anode_gas_holdup(temperature, geom: StackGeometry, p_an=1.0):
    """Total moles of gas (incl. vapour) in all anode compartments."""
    return p_an * 1e5 * geom.electrode_volume / (GAS_CONSTANT * temperature)


def cathode_h2_holdup(temperature, geom: StackGeometry, p_cat=30.0):
    y_vap = saturation_pressure(temperature) / p_cat
    return (1 - y_vap) * p_cat * 1e5 * geom.electrode_volume / (GAS_CONSTANT * temperature)
