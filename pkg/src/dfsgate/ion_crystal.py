"""Equilibrium geometry and axial normal modes of a linear ion crystal.

Positions are in units of the length scale ``l`` defined by
``l**3 = Z**2 e**2 / (4 pi eps0 M omega_z**2)``; mode eigenvalues are in units
of ``omega_z**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import (
    ATOMIC_MASS_UNIT,
    CA40_MASS_U,
    COULOMB_CONSTANT,
    ELECTRON_MASS,
    ELEMENTARY_CHARGE,
    HBAR,
)
from .errors import ConvergenceError, NumericalError


@dataclass(frozen=True)
class IonSpecies:
    """Ion mass (kg), charge number and the wavelength of the Raman beams (m)."""

    mass: float
    charge_number: int = 1
    raman_wavelength: float = 397e-9

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if int(self.charge_number) != self.charge_number or self.charge_number < 1:
            raise ValueError("charge_number must be an integer >= 1")
        if not self.raman_wavelength > 0:
            raise ValueError("raman_wavelength must be positive")


CALCIUM_40 = IonSpecies(
    mass=CA40_MASS_U * ATOMIC_MASS_UNIT - ELECTRON_MASS,
    charge_number=1,
    raman_wavelength=397e-9,
)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def force_residual(u: np.ndarray) -> np.ndarray:
    """Net dimensionless force on each ion (trap + Coulomb) at positions ``u``."""
    u = np.asarray(u, dtype=float)
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    return u - np.sum(np.sign(diff) / diff**2, axis=1)


def hessian(u: np.ndarray) -> np.ndarray:
    """Second-derivative matrix of the dimensionless potential.

    ``A_mm = 1 + 2 sum_{p != m} |u_m - u_p|**-3`` and
    ``A_mn = -2 |u_m - u_n|**-3``.
    """
    u = np.asarray(u, dtype=float)
    dist = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(dist, np.inf)
    coupling = 2.0 / dist**3
    a = -coupling
    np.fill_diagonal(a, 1.0 + coupling.sum(axis=1))
    return a


def equilibrium_positions(n_ions: int, tolerance: float = 1e-13, max_iter: int = 200) -> np.ndarray:
    """Dimensionless equilibrium positions of ``n_ions`` ions, ascending.

    Damped Newton iteration on the force balance, started from a uniform
    chain stretched by ``n**0.56``. The force Jacobian is the potential
    Hessian, so each step solves ``hessian(u) du = -force_residual(u)``.

    Raises
    ------
    ConvergenceError
        If the residual does not drop below ``tolerance`` within ``max_iter`` steps.
    """
    if n_ions < 1:
        raise ValueError("n_ions must be >= 1")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if n_ions == 1:
        return np.zeros(1)

    u = np.linspace(-1.0, 1.0, n_ions) * n_ions**0.56
    res = force_residual(u)
    norm = np.max(np.abs(res))
    for _ in range(max_iter):
        if norm < tolerance:
            break
        step = np.linalg.solve(hessian(u), -res)
        # backtrack until ordering is kept and the residual decreases
        lam = 1.0
        while lam > 1e-8:
            trial = u + lam * step
            if np.all(np.diff(trial) > 0):
                trial_res = force_residual(trial)
                trial_norm = np.max(np.abs(trial_res))
                if trial_norm < norm:
                    break
            lam *= 0.5
        else:
            break
        u, res, norm = trial, trial_res, trial_norm
    # remove round-off asymmetry; the exact solution is mirror symmetric
    u = 0.5 * (u - u[::-1])
    norm = np.max(np.abs(force_residual(u)))
    if not norm < tolerance:
        raise ConvergenceError(f"equilibrium solver did not converge for n={n_ions}", norm)
    return u


def length_scale(species: IonSpecies, trap_frequency: float) -> float:
    """Length scale ``l = (Z**2 e**2 / (4 pi eps0 M omega_z**2))**(1/3)`` in metres."""
    if not trap_frequency > 0:
        raise ValueError("trap_frequency must be positive")
    q2 = (species.charge_number * ELEMENTARY_CHARGE) ** 2
    return (COULOMB_CONSTANT * q2 / (species.mass * trap_frequency**2)) ** (1.0 / 3.0)


def trap_frequency_for_length(species: IonSpecies, length: float) -> float:
    """Inverse of :func:`length_scale`: the axial frequency (rad/s) giving ``length``."""
    if not length > 0:
        raise ValueError("length must be positive")
    q2 = (species.charge_number * ELEMENTARY_CHARGE) ** 2
    return float(np.sqrt(COULOMB_CONSTANT * q2 / (species.mass * length**3)))


@dataclass(frozen=True)
class IonCrystal:
    species: IonSpecies
    n_ions: int
    trap_frequency: float
    length_scale: float
    dimensionless_positions: np.ndarray

    @classmethod
    def build(cls, species: IonSpecies, n_ions: int, trap_frequency: float) -> "IonCrystal":
        u = equilibrium_positions(n_ions)
        return cls(species, n_ions, float(trap_frequency), length_scale(species, trap_frequency), _frozen(u))

    def with_trap_frequency(self, trap_frequency: float) -> "IonCrystal":
        """Same crystal in a different trap; the dimensionless geometry is unchanged."""
        return IonCrystal(
            self.species,
            self.n_ions,
            float(trap_frequency),
            length_scale(self.species, trap_frequency),
            self.dimensionless_positions,
        )

    @property
    def positions(self) -> np.ndarray:
        """Equilibrium positions in metres."""
        return self.length_scale * self.dimensionless_positions


@dataclass(frozen=True)
class NormalModes:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column p is b^(p)
    mode_frequencies: np.ndarray
    ground_state_spreads: np.ndarray

    def vector(self, p: int) -> np.ndarray:
        return self.eigenvectors[:, p]


def normal_modes(crystal: IonCrystal) -> NormalModes:
    """Axial normal modes, eigenvalues ascending.

    Each eigenvector is signed so that its largest-magnitude component is
    positive (first one wins on ties), which makes forces reproducible.
    """
    a = hessian(crystal.dimensionless_positions)
    try:
        mu, b = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    for p in range(b.shape[1]):
        col = b[:, p]
        k = np.argmax(np.abs(col) > np.max(np.abs(col)) * (1 - 1e-9))
        if col[k] < 0:
            b[:, p] = -col
    omega = np.sqrt(mu) * crystal.trap_frequency
    spread = np.sqrt(HBAR / (2.0 * crystal.species.mass * omega))
    return NormalModes(_frozen(mu), _frozen(b), _frozen(omega), _frozen(spread))
