"""Closed-form spin-dependent evolution, gate fidelity and a Fock-space oracle.

Every mode ``p`` sees the forced-oscillator Hamiltonian

    H_p(t) / hbar = f e^{i delta_p t} a^dag + f^* e^{-i delta_p t} a,   f = F z_p / hbar,

whose propagator is a displacement ``alpha = (f/delta_p)(1 - e^{i delta_p t})``
times ``exp(i Phi)`` with ``Phi = |f/delta_p|**2 (delta_p t - sin delta_p t)``.
The mediating mode has ``delta_p = delta``; every other mode is detuned by
``delta_p = omega_med + delta - omega_p`` from the same beat note, so phases
carry the sign of (beat frequency - mode frequency) on every mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .constants import HBAR
from .dfs_logic import DFS_INDICES, IDEAL_PHASES
from .drive import DriveConfig, SpinConfig, force_table, stark_shift_table
from .errors import FockOverflowError, ResonanceError
from .ion_crystal import IonCrystal, NormalModes


def _loop_excess(x):
    """``x - sin(x)`` without cancellation at small ``x``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    series = xs * x2 / 6.0 * (1 - x2 / 20.0 * (1 - x2 / 42.0 * (1 - x2 / 72.0)))
    return np.where(small, series, x - np.sin(x))


def mode_response(force, spread, detuning, t):
    """Displacement and geometric phase of one mode driven for time ``t``.

    Parameters
    ----------
    force : complex or array
        Force amplitude F in newtons.
    spread : float
        Ground-state spread ``z_p`` in metres.
    detuning : float or array
        ``delta_p`` in rad/s; must be nonzero.
    t : float
        Drive duration in seconds.

    Returns
    -------
    (alpha, phi)
        Dimensionless complex displacement and phase in radians. Broadcasts
        over array inputs.
    """
    detuning = np.asarray(detuning, dtype=float)
    if np.any(detuning == 0):
        raise ResonanceError("exact resonance: displacement grows without bound")
    c = np.asarray(force) * spread / (HBAR * detuning)
    x = detuning * t
    # 1 - e^{ix} = -2i sin(x/2) e^{ix/2}, exact zero at full loops up to sin(pi k)
    alpha = c * (-2j * np.sin(x / 2) * np.exp(0.5j * x))
    phi = np.abs(c) ** 2 * _loop_excess(x)
    if alpha.ndim == 0:
        return complex(alpha), float(phi)
    return alpha, phi


def mode_detunings(modes: NormalModes, drive: DriveConfig) -> np.ndarray:
    """Detuning of every mode from the beat note ``omega_med + delta``."""
    w = modes.mode_frequencies
    p = drive.mediating_mode
    d = w[p] + drive.detuning - w
    d[p] = drive.detuning
    return d


def gate_time(drive: DriveConfig, loops: int = 1) -> float:
    """Time for ``loops`` closed circles of the mediating mode, ``2 pi k / |delta|``."""
    return 2.0 * np.pi * loops / abs(drive.detuning)


@dataclass(frozen=True)
class EvolutionResult:
    """Closed-form propagator, diagonal in the spin basis.

    Arrays are indexed ``[spin_config_index, mode]`` (see ``SpinConfig.index``).
    """

    time: float
    displacements: np.ndarray
    geometric_phases: np.ndarray
    stark_phases: np.ndarray

    @property
    def total_phases(self) -> np.ndarray:
        return self.geometric_phases.sum(axis=1) + self.stark_phases

    @property
    def n_ions(self) -> int:
        return self.displacements.shape[1]

    def response(self, spin_config: SpinConfig) -> tuple[np.ndarray, float]:
        i = spin_config.index
        return self.displacements[i], float(self.total_phases[i])


def evolve(
    crystal: IonCrystal,
    modes: NormalModes,
    drive: DriveConfig,
    t: float,
    include_parasitic: bool = True,
) -> EvolutionResult:
    """Evolve every spin configuration for time ``t``.

    With ``include_parasitic=False`` only the mediating mode is driven, which
    isolates errors of the gate mechanism itself from off-resonant excitation.
    """
    forces = force_table(crystal, modes, drive)
    detunings = mode_detunings(modes, drive)
    alpha, phi = mode_response(forces, modes.ground_state_spreads[None, :], detunings[None, :], t)
    if not include_parasitic:
        mask = np.zeros(crystal.n_ions, dtype=bool)
        mask[drive.mediating_mode] = True
        alpha = np.where(mask, alpha, 0.0)
        phi = np.where(mask, phi, 0.0)
    stark = -stark_shift_table(drive, crystal.n_ions).sum(axis=1) * t
    return EvolutionResult(float(t), alpha, phi, stark)


@dataclass(frozen=True)
class GateReport:
    fidelity: float
    residual_displacements: np.ndarray  # per DFS state, sqrt(sum_p |alpha_p|^2)
    phase_errors: np.ndarray  # per DFS state, rad, after removing the best global phase
    global_phase: float

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def gate_fidelity(result: EvolutionResult, ideal_phases=IDEAL_PHASES) -> GateReport:
    """Overlap fidelity of the evolution with the ideal DFS gate, motion starting in vacuum.

    ``F = |sum_i exp(i (theta_i - theta_i^ideal)) prod_p exp(-|alpha_ip|^2 / 2)|**2 / 16``
    over the four DFS states. The best global phase is the argument of the sum.
    """
    idx = list(DFS_INDICES)
    sq = np.sum(np.abs(result.displacements[idx]) ** 2, axis=1)
    rel = result.total_phases[idx] - np.asarray(ideal_phases)
    terms = np.exp(1j * rel - 0.5 * sq)
    total = terms.sum()
    n = len(idx)
    fidelity = float(min(1.0, abs(total) ** 2 / n**2))
    gamma = float(np.angle(total))
    errors = np.angle(np.exp(1j * (rel - gamma)))
    return GateReport(fidelity, np.sqrt(sq), errors, gamma)


# ---------------------------------------------------------------------------
# Fock-space oracle


def coherent_state(alpha: complex, cutoff: int) -> np.ndarray:
    """Truncated number-basis amplitudes of ``|alpha>`` (not renormalized)."""
    k = np.arange(cutoff)
    amp = np.empty(cutoff, dtype=complex)
    amp[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in k[1:]:
        amp[n] = amp[n - 1] * alpha / np.sqrt(n)
    return amp


@dataclass(frozen=True)
class OracleResult:
    """Per-mode motional states from direct integration, plus quantities read off them."""

    time: float
    mode_states: np.ndarray  # (n_modes, cutoff)
    stark_phase: float
    edge_population: float

    @property
    def displacements(self) -> np.ndarray:
        """``<a>`` of each mode."""
        n = np.arange(1, self.mode_states.shape[1])
        psi = self.mode_states
        return np.sum(np.conj(psi[:, :-1]) * np.sqrt(n) * psi[:, 1:], axis=1)

    @property
    def geometric_phases(self) -> np.ndarray:
        """Phase of each mode state relative to the coherent state at its own ``<a>``."""
        cutoff = self.mode_states.shape[1]
        return np.array(
            [np.angle(np.vdot(coherent_state(a, cutoff), psi)) for a, psi in zip(self.displacements, self.mode_states)]
        )

    @property
    def total_phase(self) -> float:
        return float(self.geometric_phases.sum() + self.stark_phase)

    def overlap(self, displacements, phases) -> complex:
        """``<closed form|oracle>`` where the closed form is ``prod_p e^{i phi_p}|alpha_p>``."""
        cutoff = self.mode_states.shape[1]
        amp = 1.0 + 0j
        for a, ph, psi in zip(displacements, phases, self.mode_states):
            amp *= np.vdot(np.exp(1j * ph) * coherent_state(a, cutoff), psi)
        return complex(amp)


def oracle_evolve(
    crystal: IonCrystal,
    modes: NormalModes,
    drive: DriveConfig,
    spin_config: SpinConfig,
    t: float,
    fock_cutoff: int = 16,
    steps_per_period: int = 400,
    edge_tolerance: float = 1e-8,
) -> OracleResult:
    """Integrate the Schrödinger equation of one spin configuration in a truncated Fock basis.

    The Hamiltonian is spin-diagonal and each mode evolves independently from
    vacuum. Stepping uses the exponential midpoint rule: over each step the
    Hamiltonian is frozen at its midpoint value ``|f| (e^{i phi} a^dag + h.c.)``
    and exponentiated exactly by rotating the eigenbasis of ``a + a^dag``.

    Raises
    ------
    FockOverflowError
        If the population of the highest retained number state ever exceeds
        ``edge_tolerance``.
    """
    if steps_per_period < 100:
        raise ValueError("need at least 100 steps per drive period")
    if fock_cutoff < 2:
        raise ValueError("fock_cutoff must be >= 2")
    row = spin_config.index
    forces = force_table(crystal, modes, drive)[row]
    detunings = mode_detunings(modes, drive)
    if np.any(detunings == 0):
        raise ResonanceError("exact resonance")
    f = forces * modes.ground_state_spreads / HBAR
    amp, phase0 = np.abs(f), np.angle(f)

    # a + a^dag is tridiagonal in the number basis
    x, v = eigh_tridiagonal(np.zeros(fock_cutoff), np.sqrt(np.arange(1, fock_cutoff)))
    nvec = np.arange(fock_cutoff)

    periods = np.max(np.abs(detunings)) * abs(t) / (2 * np.pi)
    n_steps = max(steps_per_period, int(ceil(steps_per_period * periods)))
    dt = t / n_steps

    psi = np.zeros((crystal.n_ions, fock_cutoff), dtype=complex)
    psi[:, 0] = 1.0
    kick = np.exp(-1j * dt * amp[:, None] * x[None, :])  # (modes, eig)
    edge = 0.0
    for k in range(n_steps):
        tm = (k + 0.5) * dt
        rot = np.exp(1j * (phase0 + detunings * tm)[:, None] * nvec[None, :])
        psi = np.conj(rot) * psi  # R(phi)^dag
        psi = ((psi @ v) * kick) @ v.T  # v real orthogonal
        psi = rot * psi
        edge = max(edge, float(np.max(np.abs(psi[:, -1]) ** 2)))
        if edge > edge_tolerance:
            raise FockOverflowError(f"Fock cutoff {fock_cutoff} too small at t={tm:.3e}", edge)

    stark = -float(stark_shift_table(drive, crystal.n_ions)[row].sum() * t)
    return OracleResult(float(t), psi, stark, edge)
