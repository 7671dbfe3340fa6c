"""Physical constants (CODATA 2022), pinned so results do not drift with scipy releases."""

from math import pi

ELEMENTARY_CHARGE = 1.602176634e-19  # C, exact
VACUUM_PERMITTIVITY = 8.8541878188e-12  # F/m
HBAR = 1.054571817e-34  # J s, exact
ATOMIC_MASS_UNIT = 1.66053906892e-27  # kg

COULOMB_CONSTANT = 1.0 / (4.0 * pi * VACUUM_PERMITTIVITY)

# 40Ca atomic mass in u
CA40_MASS_U = 39.962590851
ELECTRON_MASS = 9.1093837139e-31  # kg
