"""Bichromatic Raman drive: site phases, spin-dependent forces and calibrations.

The drive is parameterized directly by the differential light shifts
``rabi_up`` / ``rabi_down`` (rad/s) and the static Stark shifts
``stark_up`` / ``stark_down``. Each ion sees both scaled by its illumination
factor ``1 + eps_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .constants import HBAR
from .errors import CalibrationError
from .ion_crystal import (
    IonCrystal,
    IonSpecies,
    NormalModes,
    equilibrium_positions,
    trap_frequency_for_length,
)

UP, DOWN = "u", "d"

# axial mode indices of a four-ion crystal (0-based, ascending frequency)
MODE_INDEX = {"com": 0, "breathing": 1, "e": 2, "fourth": 3}


def axial_wave_vector_difference(wavelength: float) -> float:
    """``Delta k = 2 sqrt(2) pi / lambda`` for the crossed-beam Raman geometry."""
    return 2.0 * np.sqrt(2.0) * np.pi / wavelength


@dataclass(frozen=True)
class DriveConfig:
    delta_k: float
    detuning: float
    mediating_mode: int = MODE_INDEX["e"]
    rabi_up: float = 0.0
    rabi_down: float = 0.0
    phase_difference: float = 0.0
    illumination_factors: tuple[float, ...] | None = None
    stark_up: float = 0.0
    stark_down: float = 0.0

    def __post_init__(self):
        if not self.delta_k > 0:
            raise ValueError("delta_k must be positive")
        if self.detuning == 0:
            raise ValueError("detuning must be nonzero")
        if self.illumination_factors is not None:
            f = tuple(float(x) for x in self.illumination_factors)
            if any(not x > 0 for x in f):
                raise ValueError("illumination factors must be positive")
            object.__setattr__(self, "illumination_factors", f)

    def illumination(self, n_ions: int) -> np.ndarray:
        if self.illumination_factors is None:
            return np.ones(n_ions)
        if len(self.illumination_factors) != n_ions:
            raise ValueError(
                f"{len(self.illumination_factors)} illumination factors for {n_ions} ions"
            )
        return np.array(self.illumination_factors)

    def with_rabi(self, omega: float) -> "DriveConfig":
        """Copy with the balanced working point ``rabi_up = -rabi_down = omega``."""
        return replace(self, rabi_up=float(omega), rabi_down=-float(omega))

    def scaled(self, factor: float) -> "DriveConfig":
        """Copy with both differential shifts multiplied by ``factor``."""
        return replace(self, rabi_up=self.rabi_up * factor, rabi_down=self.rabi_down * factor)


@dataclass(frozen=True)
class SpinConfig:
    """A product spin state; ``spins[0]`` is ion 1.

    ``index`` is the binary encoding with ion 1 as the most significant bit
    and up = 0, so ``uuuu`` is 0 and ``dddd`` is ``2**N - 1``.
    """

    spins: tuple[str, ...]
    index: int = field(init=False)

    def __post_init__(self):
        spins = tuple(self.spins)
        if any(s not in (UP, DOWN) for s in spins):
            raise ValueError(f"spins must be {UP!r} or {DOWN!r}: {spins}")
        object.__setattr__(self, "spins", spins)
        object.__setattr__(self, "index", int("".join("0" if s == UP else "1" for s in spins), 2))

    @classmethod
    def parse(cls, text: str) -> "SpinConfig":
        table = {"u": UP, "d": DOWN, "↑": UP, "↓": DOWN}
        return cls(tuple(table[c] for c in text))

    @classmethod
    def from_index(cls, index: int, n_ions: int) -> "SpinConfig":
        if not 0 <= index < 2**n_ions:
            raise ValueError("index out of range")
        bits = format(index, f"0{n_ions}b")
        return cls(tuple(UP if b == "0" else DOWN for b in bits))

    def __str__(self) -> str:
        return "".join(self.spins)

    def signs(self) -> np.ndarray:
        return np.array([1.0 if s == UP else -1.0 for s in self.spins])


def all_spin_configs(n_ions: int) -> list[SpinConfig]:
    return [SpinConfig(s) for s in product((UP, DOWN), repeat=n_ions)]


def site_phases(crystal: IonCrystal, drive: DriveConfig) -> np.ndarray:
    """``zeta_i = Delta k * l * u_i - Delta phi`` (not reduced modulo 2 pi)."""
    return drive.delta_k * crystal.length_scale * crystal.dimensionless_positions - drive.phase_difference


def differential_shift(drive: DriveConfig, spin: str, ion_index: int, n_ions: int = 4) -> float:
    base = drive.rabi_up if spin == UP else drive.rabi_down
    return base * drive.illumination(n_ions)[ion_index]


def stark_shift(drive: DriveConfig, spin: str, ion_index: int, n_ions: int = 4) -> float:
    base = drive.stark_up if spin == UP else drive.stark_down
    return base * drive.illumination(n_ions)[ion_index]


def _shift_table(up: float, down: float, drive: DriveConfig, n_ions: int) -> np.ndarray:
    # rows: spin configurations by index, columns: ions
    bits = (np.arange(2**n_ions)[:, None] >> np.arange(n_ions - 1, -1, -1)[None, :]) & 1
    return np.where(bits == 0, up, down) * drive.illumination(n_ions)[None, :]


def differential_shift_table(drive: DriveConfig, n_ions: int) -> np.ndarray:
    return _shift_table(drive.rabi_up, drive.rabi_down, drive, n_ions)


def stark_shift_table(drive: DriveConfig, n_ions: int) -> np.ndarray:
    return _shift_table(drive.stark_up, drive.stark_down, drive, n_ions)


def force_table(crystal: IonCrystal, modes: NormalModes, drive: DriveConfig) -> np.ndarray:
    """Complex forces (N) for every spin configuration (rows) and mode (columns).

    ``F^(p)_s = hbar Delta k sum_i b_i^(p) Omega_{s_i} exp(i zeta_i)``.
    """
    n = crystal.n_ions
    weights = differential_shift_table(drive, n) * np.exp(1j * site_phases(crystal, drive))[None, :]
    return HBAR * drive.delta_k * weights @ modes.eigenvectors


def spin_force(
    crystal: IonCrystal,
    modes: NormalModes,
    drive: DriveConfig,
    spin_config: SpinConfig,
    mode_index: int,
) -> complex:
    if len(spin_config.spins) != crystal.n_ions:
        raise ValueError("spin configuration length does not match the crystal")
    if not 0 <= mode_index < crystal.n_ions:
        raise ValueError("mode index out of range")
    zeta = site_phases(crystal, drive)
    omega = np.array(
        [differential_shift(drive, s, i, crystal.n_ions) for i, s in enumerate(spin_config.spins)]
    )
    b = modes.eigenvectors[:, mode_index]
    return complex(HBAR * drive.delta_k * np.sum(b * omega * np.exp(1j * zeta)))


def tune_trap(species: IonSpecies, n: int) -> tuple[float, float]:
    """Length scale and trap frequency putting outer and inner ion pairs 2 pi n apart in phase.

    Solves ``Delta k * l * (u_3 - u_1) = 2 pi n`` for a four-ion crystal; by
    mirror symmetry ``u_4 - u_2`` is the same separation. Returns
    ``(l [m], omega_z [rad/s])``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = equilibrium_positions(4)
    dk = axial_wave_vector_difference(species.raman_wavelength)
    length = 2.0 * np.pi * n / (dk * (u[2] - u[0]))
    return float(length), trap_frequency_for_length(species, length)


DRIVEN_STATE = SpinConfig.parse("duud")


def calibrate_rabi(
    crystal: IonCrystal,
    modes: NormalModes,
    drive: DriveConfig,
    target_phase: float = np.pi / 2,
) -> float:
    """``|Omega|`` giving the driven DFS states a closed-loop phase ``target_phase``.

    Works at ``rabi_up = -rabi_down``. One loop of the mediating mode gives
    ``Phi = 2 pi |F z / (hbar delta)|**2``, so the required shift follows in
    closed form from the force per unit shift on ``duud``.
    """
    p = drive.mediating_mode
    unit = drive.with_rabi(1.0)
    f = spin_force(crystal, modes, unit, DRIVEN_STATE, p)
    # b-weighted phase sum, dimensionless and at most sum(|b_i| (1 + eps_i))
    phase_sum = abs(f) / (HBAR * drive.delta_k)
    if phase_sum < 1e-12:
        raise CalibrationError(f"driven-state force vanishes at this working point (|sum|={phase_sum:.2e})")
    coupling = drive.delta_k * modes.ground_state_spreads[p] * phase_sum / abs(drive.detuning)
    return float(np.sqrt(target_phase / (2.0 * np.pi)) / coupling)
