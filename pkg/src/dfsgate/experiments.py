"""Working points, single-gate reports and parameter sweeps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .config import ExperimentConfig
from .constants import ATOMIC_MASS_UNIT
from .dfs_logic import BELL_PRODUCT, CLUSTER_STATE, DFS_INDICES, DFS_LABELS, DfsState, make_cluster, project_dfs
from .drive import (
    DriveConfig,
    SpinConfig,
    axial_wave_vector_difference,
    calibrate_rabi,
    spin_force,
    tune_trap,
)
from .dynamics import GateReport, evolve, gate_fidelity, gate_time
from .errors import CalibrationError
from .ion_crystal import IonCrystal, IonSpecies, NormalModes, normal_modes

UNDRIVEN_STATE = SpinConfig.parse("udud")
DRIVEN_STATE = SpinConfig.parse("duud")

# search range around the E-mode tuning when locating other modes' working points
_SEARCH_SPAN = 0.1
_SEARCH_POINTS = 4001


def species_of(cfg: ExperimentConfig) -> IonSpecies:
    return IonSpecies(cfg.mass_amu * ATOMIC_MASS_UNIT, cfg.charge_number, cfg.raman_wavelength)


def base_drive(cfg: ExperimentConfig, mode: int | None = None) -> DriveConfig:
    """Drive without differential shifts; Rabi frequencies are filled in later."""
    return DriveConfig(
        delta_k=axial_wave_vector_difference(cfg.raman_wavelength),
        detuning=cfg.detuning,
        mediating_mode=cfg.mode_index if mode is None else mode,
        phase_difference=cfg.phase_difference,
        illumination_factors=tuple(1.0 + e for e in cfg.illumination),
        stark_up=cfg.stark_up,
        stark_down=cfg.stark_down,
    )


@dataclass(frozen=True)
class WorkingPoint:
    mode: str
    crystal: IonCrystal
    modes: NormalModes
    drive: DriveConfig
    loops: int

    @property
    def gate_time(self) -> float:
        return gate_time(self.drive, self.loops)

    @property
    def rabi(self) -> float:
        return abs(self.drive.rabi_up)


def loop_phase(loops: int) -> float:
    """Geometric phase per loop so that ``loops`` loops give pi/2."""
    return np.pi / 2 / loops


def prepare(cfg: ExperimentConfig, trap_frequency: float, crystal: IonCrystal | None = None) -> WorkingPoint:
    """Working point at a given trap frequency, calibrating the Rabi frequency if requested."""
    if crystal is None:
        crystal = IonCrystal.build(species_of(cfg), 4, trap_frequency)
    else:
        crystal = crystal.with_trap_frequency(trap_frequency)
    modes = normal_modes(crystal)
    drive = base_drive(cfg)
    if cfg.rabi is None:
        omega = calibrate_rabi(crystal, modes, drive, loop_phase(cfg.gate_loops))
    else:
        omega = cfg.rabi
    return WorkingPoint(cfg.mode, crystal, modes, drive.with_rabi(omega), cfg.gate_loops)


def point_fidelity(wp: WorkingPoint, t: float | None = None, include_parasitic: bool = True) -> GateReport:
    t = wp.gate_time if t is None else t
    return gate_fidelity(evolve(wp.crystal, wp.modes, wp.drive, t, include_parasitic))


def _undriven_ratio(cfg: ExperimentConfig, crystal: IonCrystal, w: float) -> float:
    c = crystal.with_trap_frequency(w)
    m = normal_modes(c)
    d = base_drive(cfg).with_rabi(1.0)
    p = cfg.mode_index
    fd = abs(spin_force(c, m, d, DRIVEN_STATE, p))
    fu = abs(spin_force(c, m, d, UNDRIVEN_STATE, p))
    return fu / fd if fd > 0 else np.inf


def tuned_trap_frequency(cfg: ExperimentConfig) -> float:
    """Axial trap frequency (rad/s) of the working point for the configured mode.

    The E-mode uses the closed-form phase-matching condition. Other modes have
    no closed form: start from the zero of the undriven-state force
    (``udud``) closest to the E-mode tuning, then maximize the gate fidelity
    within a narrow bracket around it.
    """
    if cfg.trap_frequency is not None:
        return cfg.trap_frequency
    species = species_of(cfg)
    _, w_e = tune_trap(species, cfg.distance_n)
    if cfg.mode == "e":
        return w_e

    crystal = IonCrystal.build(species, 4, w_e)
    grid = w_e * np.linspace(1 - _SEARCH_SPAN, 1 + _SEARCH_SPAN, _SEARCH_POINTS)
    ratio = np.array([_undriven_ratio(cfg, crystal, w) for w in grid])
    minima = [
        i for i in range(1, len(grid) - 1)
        if ratio[i] <= ratio[i - 1] and ratio[i] <= ratio[i + 1] and ratio[i] < 0.05
    ]
    if not minima:
        raise CalibrationError(f"no working point for mode {cfg.mode!r} near {w_e / 2 / np.pi:.4g} Hz")
    i = min(minima, key=lambda k: abs(grid[k] - w_e))
    step = grid[1] - grid[0]
    zero = minimize_scalar(
        lambda w: _undriven_ratio(cfg, crystal, w),
        bounds=(grid[i] - step, grid[i] + step),
        method="bounded",
        options={"xatol": 1e-6 * step},
    ).x

    def infidelity(w):
        try:
            return point_fidelity(prepare(cfg, w, crystal)).infidelity
        except CalibrationError:
            return 1.0

    # the fidelity optimum sits within a few kHz of the force zero
    half = 2e-3 * zero
    res = minimize_scalar(infidelity, bounds=(zero - half, zero + half), method="bounded",
                          options={"xatol": 1e-3})
    return float(res.x)


def working_point(cfg: ExperimentConfig) -> WorkingPoint:
    return prepare(cfg, tuned_trap_frequency(cfg))


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRecord:
    value: float
    fidelity: float
    residual_displacements: tuple[float, ...]
    phase_errors: tuple[float, ...]
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @classmethod
    def from_report(cls, value: float, report: GateReport, **extra) -> "SweepRecord":
        return cls(
            float(value),
            report.fidelity,
            tuple(float(x) for x in report.residual_displacements),
            tuple(float(x) for x in report.phase_errors),
            dict(extra),
        )

    @staticmethod
    def columns(value_name: str, extra: Sequence[str] = ()) -> list[str]:
        return (
            [value_name, "fidelity", "infidelity"]
            + [f"alpha_{s}" for s in DFS_LABELS]
            + [f"phase_error_{s}" for s in DFS_LABELS]
            + list(extra)
        )

    def row(self, extra: Sequence[str] = ()) -> list[float]:
        return (
            [self.value, self.fidelity, self.infidelity]
            + list(self.residual_displacements)
            + list(self.phase_errors)
            + [self.extra[k] for k in extra]
        )


def grid(start: float, stop: float, points: int, scale: str = "linear") -> np.ndarray:
    """Inclusive linear or logarithmic grid."""
    if scale == "log":
        return np.geomspace(start, stop, points)
    return np.linspace(start, stop, points)


def _map(fn: Callable, values, threads: int) -> list:
    if threads <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, values))


def sweep_time(cfg: ExperimentConfig, threads: int = 1) -> list[SweepRecord]:
    """Gate fidelity vs accumulated detuning phase ``delta t`` at a fixed working point."""
    wp = working_point(cfg)
    start = 0.0 if cfg.sweep_start is None else cfg.sweep_start
    stop = 2 * np.pi * cfg.gate_loops if cfg.sweep_stop is None else cfg.sweep_stop
    xs = grid(start, stop, cfg.sweep_points or 401, cfg.sweep_scale)
    d = abs(cfg.detuning)
    return _map(lambda x: SweepRecord.from_report(x, point_fidelity(wp, x / d)), xs, threads)


def default_trap_window(center: float) -> tuple[float, float]:
    return 0.98 * center, 1.02 * center


def sweep_trap(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[SweepRecord], float]:
    """Fidelity vs axial trap frequency at fixed gate time.

    The beat note follows the mediating mode (fixed ``delta``) and, unless a
    Rabi frequency is configured, it is recalibrated at every grid point.
    Sweep bounds are in Hz. Returns the records and the plateau width in Hz.
    """
    center = tuned_trap_frequency(cfg)
    lo, hi = default_trap_window(center / (2 * np.pi))
    start = lo if cfg.sweep_start is None else cfg.sweep_start
    stop = hi if cfg.sweep_stop is None else cfg.sweep_stop
    freqs = grid(start, stop, cfg.sweep_points or 801, cfg.sweep_scale)
    crystal = IonCrystal.build(species_of(cfg), 4, center)

    def one(f_hz):
        try:
            report = point_fidelity(prepare(cfg, 2 * np.pi * f_hz, crystal))
        except CalibrationError:
            return SweepRecord(float(f_hz), float("nan"), (float("nan"),) * 4, (float("nan"),) * 4)
        return SweepRecord.from_report(f_hz, report)

    records = _map(one, freqs, threads)
    width = plateau_width(freqs, np.array([r.fidelity for r in records]), cfg.plateau_threshold)
    return records, width


def plateau_width(x: np.ndarray, y: np.ndarray, threshold: float) -> float:
    """Width of the largest contiguous run with ``y > threshold``.

    Edges are placed by linear interpolation between the last point above
    and the first point below the threshold; a run touching the end of the
    grid is cut at the grid edge.
    """
    x = np.asarray(x, dtype=float)
    y = np.nan_to_num(np.asarray(y, dtype=float), nan=-np.inf)
    above = y > threshold
    best = 0.0
    i = 0
    n = len(x)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        left = x[i] if i == 0 else _crossing(x[i - 1], y[i - 1], x[i], y[i], threshold)
        right = x[j] if j == n - 1 else _crossing(x[j], y[j], x[j + 1], y[j + 1], threshold)
        best = max(best, right - left)
        i = j + 1
    return float(best)


def _crossing(x0, y0, x1, y1, level):
    if not np.isfinite(y0) or not np.isfinite(y1):
        return x0 if np.isfinite(y0) else x1
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def sweep_rabi_error(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[SweepRecord], float]:
    """Infidelity vs common Rabi deviation ``Omega -> Omega (1 + eps)``.

    Each record carries ``rabi_infidelity``, the infidelity with only the
    mediating mode driven, which isolates the deviation's own contribution
    from the off-resonant floor. The returned slope is a least-squares fit
    of ``log(rabi_infidelity)`` against ``log|eps|``.
    """
    wp = working_point(cfg)
    if cfg.sweep_start is None and cfg.sweep_stop is None:
        start, stop, scale = 1e-3, 10**-1.5, "log"
    else:
        start = 1e-3 if cfg.sweep_start is None else cfg.sweep_start
        stop = 10**-1.5 if cfg.sweep_stop is None else cfg.sweep_stop
        scale = cfg.sweep_scale
    if not (-0.5 < start and stop < 0.5):
        raise ValueError("Rabi deviation must stay within (-0.5, 0.5)")
    eps = grid(start, stop, cfg.sweep_points or 31, scale)

    def one(e):
        shifted = WorkingPoint(wp.mode, wp.crystal, wp.modes, wp.drive.scaled(1 + e), wp.loops)
        full = point_fidelity(shifted)
        isolated = point_fidelity(shifted, include_parasitic=False)
        return SweepRecord.from_report(e, full, rabi_infidelity=isolated.infidelity)

    records = _map(one, eps, threads)
    return records, loglog_slope(eps, np.array([r.extra["rabi_infidelity"] for r in records]))


def loglog_slope(x, y) -> float:
    x = np.abs(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if np.unique(x[ok]).size < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


# ---------------------------------------------------------------------------
# cluster state


@dataclass(frozen=True)
class ClusterReport:
    overlap: float
    leakage: float
    state: DfsState  # DFS amplitudes with motion traced against vacuum


def _coherent_overlaps(alpha: np.ndarray) -> np.ndarray:
    """``prod_p <alpha_jp|alpha_ip>`` for all pairs (i, j)."""
    a = alpha[:, None, :]
    b = alpha[None, :, :]
    return np.exp(np.sum(-0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2 + np.conj(b) * a, axis=2))


def cluster_from_physics(wp: WorkingPoint, initial=BELL_PRODUCT) -> ClusterReport:
    """Run the gate on a DFS input and compare the spin state with the linear cluster state.

    The overlap is ``<C| rho_spin |C>`` with the motion traced out, so residual
    spin-motion entanglement counts against it.
    """
    result = evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time)
    spin = np.zeros(16, dtype=complex)
    spin[list(DFS_INDICES)] = np.asarray(initial, dtype=complex)
    spin = spin * np.exp(1j * result.total_phases)
    projected, leakage = project_dfs(spin)
    d = projected.amplitudes
    overlaps = _coherent_overlaps(result.displacements[list(DFS_INDICES)])
    rho = np.outer(d, np.conj(d)) * overlaps
    c = CLUSTER_STATE
    fid = float(np.real(np.conj(c) @ rho @ c))
    return ClusterReport(fid, leakage, projected)


def cluster_ideal(initial=BELL_PRODUCT) -> ClusterReport:
    out = make_cluster(np.asarray(initial, dtype=complex))
    return ClusterReport(out.overlap(CLUSTER_STATE), 1.0 - out.norm, out)
