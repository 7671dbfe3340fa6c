"""Decoherence-free subspace and the logical-qubit layer.

Canonical DFS basis order, used everywhere in the package::

    udud, duud, uddu, dudu

Each logical qubit is a pair of ions with ``|0> = |ud>`` and ``|1> = |du>``,
so the basis above is ``|00>, |10>, |01>, |11>`` of (ions 1-2, ions 3-4).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DfsGateError

DFS_LABELS = ("udud", "duud", "uddu", "dudu")
# SpinConfig.index of each label: ion 1 is the MSB and up = 0
DFS_INDICES = tuple(int(s.replace("u", "0").replace("d", "1"), 2) for s in DFS_LABELS)
IDEAL_PHASES = (0.0, np.pi / 2, np.pi / 2, 0.0)

BELL_PRODUCT = np.full(4, 0.5, dtype=complex)
CLUSTER_STATE = np.array([1, 1j, 1j, 1], dtype=complex) / 2


@dataclass(frozen=True)
class DfsState:
    """Amplitudes over the canonical DFS basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != (4,):
            raise ValueError("a DFS state has four amplitudes")
        if np.vdot(a, a).real > 1 + 1e-12:
            raise ValueError("DFS state norm exceeds 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_spin_state(self) -> np.ndarray:
        """Embed into the 16-dimensional four-ion spin space."""
        psi = np.zeros(16, dtype=complex)
        psi[list(DFS_INDICES)] = self.amplitudes
        return psi

    def overlap(self, other: "DfsState | np.ndarray") -> float:
        """``|<self|other>|**2``."""
        b = other.amplitudes if isinstance(other, DfsState) else np.asarray(other)
        return float(abs(np.vdot(self.amplitudes, b)) ** 2)


def project_dfs(spin_state) -> tuple[DfsState, float]:
    """Project a 16-dimensional spin state onto the DFS; returns the state and the leakage."""
    psi = np.asarray(spin_state, dtype=complex)
    if psi.shape != (16,):
        raise ValueError("expected a 16-dimensional four-ion spin state")
    amps = psi[list(DFS_INDICES)]
    total = float(np.vdot(psi, psi).real)
    kept = float(np.vdot(amps, amps).real)
    return DfsState(amps), total - kept


def ideal_gate() -> np.ndarray:
    """The target DFS gate ``diag(1, i, i, 1)`` in the canonical basis."""
    return np.diag([1, 1j, 1j, 1]).astype(complex)


def make_cluster(state: "DfsState | np.ndarray" = None, tol: float = 1e-12) -> DfsState:
    """Apply the ideal gate to a DFS input (default: the product of two odd Bell states).

    Accepts a :class:`DfsState` or a 16-dimensional spin state; the latter must
    lie inside the DFS.
    """
    if state is None:
        amps = BELL_PRODUCT
    elif isinstance(state, DfsState):
        amps = state.amplitudes
    else:
        psi = np.asarray(state, dtype=complex)
        if psi.shape == (4,):
            amps = psi
        else:
            proj, leakage = project_dfs(psi)
            if leakage > tol:
                raise DfsGateError(f"input leaks out of the DFS (leakage={leakage:.3e})")
            amps = proj.amplitudes
    return DfsState(ideal_gate() @ amps)


# ---------------------------------------------------------------------------
# Logical circuits


@dataclass(frozen=True)
class PhaseGate:
    """Geometric phase gate diag(1, i, i, 1) between two logical qubits."""

    a: int
    b: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Toffoli:
    """Multi-controlled X: flips ``target`` when every control is |1>."""

    controls: tuple[int, ...]
    target: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (*self.controls, self.target)


@dataclass(frozen=True)
class Hadamard:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


Operation = PhaseGate | Toffoli | Hadamard


@dataclass(frozen=True)
class LogicalCircuit:
    n_logical: int
    operations: tuple[Operation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        for op in self.operations:
            qs = op.qubits
            if any(not 0 <= q < self.n_logical for q in qs):
                raise ValueError(f"{op} addresses a qubit outside 0..{self.n_logical - 1}")
            if len(set(qs)) != len(qs):
                raise ValueError(f"{op} repeats a qubit")

    def __len__(self):
        return len(self.operations)


@dataclass(frozen=True)
class LogicalRegister:
    """State vector of ``n_logical`` qubits; qubit 0 is the most significant bit."""

    n_logical: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != (2**self.n_logical,):
            raise ValueError("amplitude count does not match n_logical")
        if abs(np.vdot(a, a).real - 1) > 1e-12:
            raise ValueError("register must be normalized")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def basis(cls, n_logical: int, bits: Sequence[int] | int) -> "LogicalRegister":
        if isinstance(bits, int):
            index = bits
        else:
            index = int("".join(str(int(b)) for b in bits), 2) if len(bits) else 0
        a = np.zeros(2**n_logical, dtype=complex)
        a[index] = 1
        return cls(n_logical, a)

    def probability(self, qubit: int, value: int) -> float:
        psi = self.amplitudes.reshape((2,) * self.n_logical)
        return float(np.sum(np.abs(np.take(psi, value, axis=qubit)) ** 2))


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _apply(psi: np.ndarray, op: Operation) -> np.ndarray:
    # psi has one axis per qubit
    if isinstance(op, Hadamard):
        return np.moveaxis(np.tensordot(_H, psi, axes=([1], [op.qubit])), 0, op.qubit)
    if isinstance(op, PhaseGate):
        out = psi.copy()
        for va in (0, 1):
            for vb in (0, 1):
                if va != vb:
                    idx = [slice(None)] * psi.ndim
                    idx[op.a], idx[op.b] = va, vb
                    out[tuple(idx)] *= 1j
        return out
    if isinstance(op, Toffoli):
        out = psi.copy()
        idx = [slice(None)] * psi.ndim
        for c in op.controls:
            idx[c] = 1
        sub = [i for i in range(psi.ndim) if i not in op.controls]
        block = psi[tuple(idx)]
        axis = sub.index(op.target)
        out[tuple(idx)] = np.flip(block, axis=axis)
        return out
    raise TypeError(f"unknown operation {op!r}")


def run_circuit(register: LogicalRegister, circuit: LogicalCircuit) -> LogicalRegister:
    if register.n_logical != circuit.n_logical:
        raise ValueError(
            f"register has {register.n_logical} qubits, circuit needs {circuit.n_logical}"
        )
    psi = register.amplitudes.reshape((2,) * register.n_logical)
    for op in circuit.operations:
        psi = _apply(psi, op)
    return LogicalRegister(register.n_logical, psi.reshape(-1))


def decompose_gn(n: int) -> LogicalCircuit:
    """n-qubit controlled phase gate built from Toffolis and one two-qubit phase gate.

    For ``n >= 3`` an auxiliary qubit, index ``n`` (last), starts in |0>:
    a Toffoli on the first ``n - 1`` qubits writes their AND into it, the
    phase gate couples it to qubit ``n - 1``, and a second Toffoli uncomputes it.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if n == 2:
        return LogicalCircuit(2, (PhaseGate(0, 1),))
    aux = n
    t = Toffoli(tuple(range(n - 1)), aux)
    return LogicalCircuit(n + 1, (t, PhaseGate(n - 1, aux), t))
