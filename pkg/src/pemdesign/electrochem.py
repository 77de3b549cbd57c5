"""Cell polarization model for a PEM electrolyzer.

The cell voltage is the sum of the reversible (Nernst) potential, the
Butler-Volmer activation overpotential of both electrodes, the membrane ohmic
loss and an additive degradation offset.  All functions accept scalars or
numpy arrays.  Passing ``xp=CASADI_MATH`` (see :mod:`pemdesign.schedule_opt`)
evaluates the same expressions symbolically for the optimizer, in which case
domain checks are skipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .constants import FARADAY, GAS_CONSTANT, P_STANDARD

T_VALID_MIN = 273.0
T_VALID_MAX = 373.0


class DomainError(ValueError):
    """Input outside the range over which a correlation is valid."""


@dataclass(frozen=True)
class ElectrochemParams:
    alpha_an: float = 0.58
    alpha_cat: float = 1.28
    # A/cm2, before roughness and temperature correction.  The anode value is
    # calibrated together with activation_energy against the 60/80 C
    # polarization anchors (1.78 V and 1.70 V at 1 A/cm2).
    i0_an_ref: float = 1.33760e-08
    i0_cat_ref: float = 1.0e-3
    gamma_an: float = 1198.0
    gamma_cat: float = 286.0
    activation_energy: float = 62.6749e3  # J/mol
    membrane_thickness: float = 1.75e-2  # cm
    hydration_factor: float = 21.0
    p_cathode: float = 30.0  # bar
    p_anode: float = 1.0  # bar
    t_ref: float = 298.0  # K
    faraday: float = FARADAY
    gas_constant: float = GAS_CONSTANT

    def __post_init__(self):
        if self.alpha_an <= 0 or self.alpha_cat <= 0:
            raise ValueError("charge-transfer coefficients must be positive")
        if self.alpha_an + self.alpha_cat > 2.0 + 1e-12:
            raise ValueError("alpha_an + alpha_cat must not exceed 2")
        for name in ("p_cathode", "p_anode", "membrane_thickness", "i0_an_ref", "i0_cat_ref"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_mapping(cls, data: dict) -> "ElectrochemParams":
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class CellCondition:
    current_density: float  # A/cm2
    temperature: float  # K

    def check_operating(self, i_bounds=(0.1, 4.0), t_bounds=(333.15, 353.15), tol=1e-6):
        """Return a list of bound violations for the scheduling context."""
        problems = []
        if not i_bounds[0] - tol <= self.current_density <= i_bounds[1] + tol:
            problems.append(f"current density {self.current_density:.4g} outside {i_bounds}")
        if not t_bounds[0] - tol <= self.temperature <= t_bounds[1] + tol:
            problems.append(f"temperature {self.temperature:.4g} outside {t_bounds}")
        return problems


# --- gas/liquid thermochemistry -------------------------------------------

@lru_cache(maxsize=1)
def shomate_table() -> dict:
    with resources.files("pemdesign.data").joinpath("shomate.json").open() as fh:
        return json.load(fh)["species"]


def enthalpy(species: str, temperature, xp=np):
    """Absolute molar enthalpy in J/mol (formation enthalpy included)."""
    c = shomate_table()[species]
    t = temperature / 1000.0
    h = c["A"] * t + c["B"] * t**2 / 2 + c["C"] * t**3 / 3 + c["D"] * t**4 / 4 - c["E"] / t + c["F"]
    return 1000.0 * h


def sensible_enthalpy(species: str, temperature, t_ref=298.15, xp=np):
    """Enthalpy relative to the same species at ``t_ref`` (J/mol)."""
    return enthalpy(species, temperature, xp) - enthalpy(species, t_ref, xp)


def entropy(species: str, temperature, xp=np):
    c = shomate_table()[species]
    t = temperature / 1000.0
    return (c["A"] * xp.log(t) + c["B"] * t + c["C"] * t**2 / 2 + c["D"] * t**3 / 3
            - c["E"] / (2 * t**2) + c["G"])


def reaction_gibbs(temperature, xp=np):
    """Delta G (J/mol) of H2O(l) -> H2 + 1/2 O2 at 1 bar."""
    dh = enthalpy("H2", temperature) + 0.5 * enthalpy("O2", temperature) - enthalpy("H2O(l)", temperature)
    ds = (entropy("H2", temperature, xp) + 0.5 * entropy("O2", temperature, xp)
          - entropy("H2O(l)", temperature, xp))
    return dh - temperature * ds


def _check_temperature(temperature):
    t = np.asarray(temperature, dtype=float)
    if np.any(t < T_VALID_MIN) or np.any(t > T_VALID_MAX):
        raise DomainError(f"temperature outside {T_VALID_MIN}-{T_VALID_MAX} K: {temperature}")


# --- potentials -------------------------------------------------------------

def open_circuit_voltage(temperature, params: ElectrochemParams, p_h2=None, p_o2=None, xp=np):
    """Nernst potential with unit water activity.

    Partial pressures default to the cathode (H2) and anode (O2) pressures.
    """
    if xp is np:
        _check_temperature(temperature)
    p_h2 = params.p_cathode if p_h2 is None else p_h2
    p_o2 = params.p_anode if p_o2 is None else p_o2
    v_rev = reaction_gibbs(temperature, xp) / (2 * params.faraday)
    nernst = params.gas_constant * temperature / (2 * params.faraday) * np.log(
        (p_h2 / P_STANDARD) * np.sqrt(p_o2 / P_STANDARD))
    return v_rev + nernst


def exchange_current_densities(temperature, params: ElectrochemParams, xp=np):
    arrhenius = xp.exp(-params.activation_energy / params.gas_constant
                       * (1.0 / temperature - 1.0 / params.t_ref))
    return (params.gamma_an * params.i0_an_ref * arrhenius,
            params.gamma_cat * params.i0_cat_ref * arrhenius)


def activation_overpotential(current_density, temperature, params: ElectrochemParams, xp=np):
    if xp is np and np.any(np.asarray(current_density) < 0):
        raise DomainError("current density must be non-negative")
    i0_an, i0_cat = exchange_current_densities(temperature, params, xp)
    rt_f = params.gas_constant * temperature / params.faraday
    return (rt_f / params.alpha_an * xp.arcsinh(current_density / (2 * i0_an))
            + rt_f / params.alpha_cat * xp.arcsinh(current_density / (2 * i0_cat)))


def membrane_conductivity(temperature, params: ElectrochemParams, xp=np):
    """S/cm, hydration held at ``params.hydration_factor``."""
    lam = params.hydration_factor
    return (0.00514 * lam - 0.00326) * xp.exp(1268.0 * (1.0 / 303.0 - 1.0 / temperature))


def ohmic_overpotential(current_density, temperature, params: ElectrochemParams, xp=np):
    if xp is np and np.any(np.asarray(temperature) <= 0):
        raise DomainError("temperature must be positive")
    return params.membrane_thickness * current_density / membrane_conductivity(temperature, params, xp)


def undegraded_voltage(current_density, temperature, params: ElectrochemParams, xp=np):
    return (open_circuit_voltage(temperature, params, xp=xp)
            + activation_overpotential(current_density, temperature, params, xp)
            + ohmic_overpotential(current_density, temperature, params, xp))


def total_voltage(current_density, temperature, cumulative_degradation, params: ElectrochemParams, xp=np):
    if xp is np and np.any(np.asarray(cumulative_degradation) < 0):
        raise DomainError("cumulative degradation must be non-negative")
    return undegraded_voltage(current_density, temperature, params, xp) + cumulative_degradation
