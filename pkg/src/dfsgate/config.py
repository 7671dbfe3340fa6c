"""Flat ``key = value`` experiment configuration.

Physical quantities are SI; any frequency key may instead be given with a
``_hz`` suffix (cycles per second), which is converted to rad/s. ``#`` starts
a comment. Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from math import pi
from pathlib import Path

from .constants import ATOMIC_MASS_UNIT, CA40_MASS_U, ELECTRON_MASS
from .drive import MODE_INDEX
from .errors import ConfigError

CA40_ION_MASS_U = CA40_MASS_U - ELECTRON_MASS / ATOMIC_MASS_UNIT

# keys that also accept a *_hz spelling
_ANGULAR = {"detuning", "rabi", "stark_up", "stark_down", "trap_frequency"}


@dataclass(frozen=True)
class ExperimentConfig:
    mass_amu: float = CA40_ION_MASS_U
    charge_number: int = 1
    raman_wavelength: float = 397e-9
    distance_n: int = 15
    mode: str = "e"
    detuning: float = 2 * pi * 40e3
    gate_loops: int = 1
    rabi: float | None = None  # None: calibrate
    phase_difference: float = 0.0
    illumination: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)  # eps_i, factor 1 + eps_i
    stark_up: float = 0.0
    stark_down: float = 0.0
    trap_frequency: float | None = None  # None: tune for the selected mode
    sweep_start: float | None = None
    sweep_stop: float | None = None
    sweep_points: int | None = None
    sweep_scale: str = "linear"
    sweep_modes: tuple[str, ...] = ("breathing", "e", "fourth")
    plateau_threshold: float = 0.99
    ideal: bool = False

    def __post_init__(self):
        if self.mode not in MODE_INDEX:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {sorted(MODE_INDEX)}")
        for m in self.sweep_modes:
            if m not in MODE_INDEX:
                raise ConfigError(f"unknown mode {m!r} in sweep_modes")
        if not self.mass_amu > 0:
            raise ConfigError("mass_amu must be positive")
        if self.charge_number < 1:
            raise ConfigError("charge_number must be >= 1")
        if not self.raman_wavelength > 0:
            raise ConfigError("raman_wavelength must be positive")
        if self.distance_n < 1:
            raise ConfigError("distance_n must be >= 1")
        if self.detuning == 0:
            raise ConfigError("detuning must be nonzero")
        if self.gate_loops < 1:
            raise ConfigError("gate_loops must be >= 1")
        if len(self.illumination) != 4 or any(not 1 + e > 0 for e in self.illumination):
            raise ConfigError("illumination needs four perturbations eps_i > -1")
        if self.trap_frequency is not None and not self.trap_frequency > 0:
            raise ConfigError("trap_frequency must be positive")
        if self.sweep_points is not None and self.sweep_points < 2:
            raise ConfigError("sweep_points must be >= 2")
        if (
            self.sweep_start is not None
            and self.sweep_stop is not None
            and not self.sweep_start < self.sweep_stop
        ):
            raise ConfigError("sweep_start must be below sweep_stop")
        if self.sweep_scale not in ("linear", "log"):
            raise ConfigError("sweep_scale must be 'linear' or 'log'")
        if self.sweep_scale == "log" and self.sweep_start is not None and not self.sweep_start > 0:
            raise ConfigError("log sweeps need a positive start")
        if not 0 < self.plateau_threshold < 1:
            raise ConfigError("plateau_threshold must lie in (0, 1)")

    @property
    def mode_index(self) -> int:
        return MODE_INDEX[self.mode]

    def with_mode(self, mode: str) -> "ExperimentConfig":
        return replace(self, mode=mode)

    def to_items(self) -> list[tuple[str, str]]:
        """Fully resolved ``(key, value)`` pairs, angular frequencies in rad/s."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                text = "auto"
            elif isinstance(v, tuple):
                text = ",".join(_fmt(x) for x in v)
            elif isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = _fmt(v)
            else:
                text = str(v)
            out.append((f.name, text))
        return out

    def describe(self) -> str:
        return "; ".join(f"{k}={v}" for k, v in self.to_items())


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return repr(float(x))


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config(text: str, **overrides) -> ExperimentConfig:
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        scale = 1.0
        if key.endswith("_hz") and key[:-3] in _ANGULAR:
            key, scale = key[:-3], 2 * pi
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, types[key], value, scale)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _convert(key: str, type_name: str, value: str, scale: float):
    if "tuple" in type_name:
        items = tuple(s.strip() for s in value.split(",") if s.strip())
        return items if "str" in type_name else tuple(float(s) for s in items)
    if "None" in type_name and value.lower() == "auto":
        return None
    if type_name.startswith("bool"):
        return _parse_bool(value)
    if type_name.startswith("int"):
        return int(value)
    if type_name.startswith("str"):
        return value
    return float(value) * scale


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    text = "" if path is None else Path(path).read_text()
    return parse_config(text, **overrides)
