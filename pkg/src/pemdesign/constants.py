"""Physical constants and unit conversions shared across the package."""

FARADAY = 96485.0  # C/mol
GAS_CONSTANT = 8.314  # J/(mol K)
T_AMBIENT = 298.15  # K, also feed-water inlet and enthalpy reference
P_STANDARD = 1.0  # bar
THERMONEUTRAL_VOLTAGE = 1.48  # V

MW_H2 = 2.01588e-3  # kg/mol
MW_H2O = 18.01528e-3  # kg/mol
MW_N2 = 28.0134e-3  # kg/mol

SECONDS_PER_HOUR = 3600.0
HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365
HOURS_PER_YEAR = DAYS_PER_YEAR * HOURS_PER_DAY

LITERS_PER_GALLON = 3.785411784
WATER_DENSITY = 997.0  # kg/m3 near ambient
