"""Exact statevector simulation of small qubit registers.

Qubit 0 is the most significant bit of the amplitude index, so measuring
qubit 0 and keeping outcome 0 retains the first half of the amplitudes.
Batches of states are stored as rows of a C-contiguous complex array.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

MAX_UNITARY_QUBITS = 14
GATE_KINDS = ("RX", "RY", "RZ", "CPHASE")


class MeasurementError(ValueError):
    """Requested outcome has zero probability."""


class ResourceLimitError(MemoryError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    angle: float
    target: int
    control: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if not math.isfinite(self.angle):
            raise ValueError("gate angle must be finite")
        if self.kind == "CPHASE":
            if self.control is None or self.control == self.target:
                raise ValueError("CPHASE needs a control distinct from its target")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")

    def qubits(self):
        return (self.target,) if self.control is None else (self.control, self.target)

    def inverse(self):
        return Gate(self.kind, -self.angle, self.target, self.control)

    def matrix(self):
        """2x2 matrix for rotations, 4x4 for CPHASE (control, target order)."""
        c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
        if self.kind == "RX":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.kind == "RY":
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "RZ":
            return np.diag([complex(c, -s), complex(c, s)])
        return np.diag([1, 1, 1, np.exp(1j * self.angle)])


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        for g in self.gates:
            for q in g.qubits():
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"gate {g} touches qubit {q} outside 0..{self.n_qubits - 1}")

    def __len__(self):
        return len(self.gates)

    def inverse(self):
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))


@dataclass(frozen=True, eq=False)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"statevector not normalized (norm^2 = {norm})")

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    @classmethod
    def basis(cls, n_qubits, index=0):
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)


def _stride(n, q):
    return 1 << (n - 1 - q)


def apply_gate_rows(psi, g, n):
    """Apply ``g`` in place to every row of ``psi`` (shape (rows, 2**n))."""
    if g.kind == "CPHASE":
        kernels.apply_cphase(psi, _stride(n, g.control), _stride(n, g.target), np.exp(1j * g.angle))
    else:
        kernels.apply_1q(psi, _stride(n, g.target), np.ascontiguousarray(g.matrix()))


def apply_circuit_rows(psi, circuit):
    n = circuit.n_qubits
    if psi.shape[-1] != 1 << n:
        raise ValueError(f"rows have length {psi.shape[-1]}, circuit acts on {1 << n}")
    for g in circuit.gates:
        apply_gate_rows(psi, g, n)
    return psi


def _work(state):
    return np.array(state.amplitudes, dtype=complex).reshape(1, -1)


def apply_gate(state, g):
    for q in g.qubits():
        if not 0 <= q < state.n_qubits:
            raise ValueError(f"qubit index {q} out of range for {state.n_qubits} qubits")
    psi = _work(state)
    apply_gate_rows(psi, g, state.n_qubits)
    return Statevector(state.n_qubits, psi[0])


def apply_circuit(state, circuit):
    if circuit.n_qubits != state.n_qubits:
        raise ValueError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    psi = apply_circuit_rows(_work(state), circuit)
    return Statevector(state.n_qubits, psi[0])


def circuit_unitary(circuit):
    """Dense matrix of ``circuit``; column j is the circuit applied to |j>."""
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ResourceLimitError(f"dense unitary for {n} qubits exceeds the {MAX_UNITARY_QUBITS}-qubit guard")
    psi = np.eye(1 << n, dtype=complex)
    apply_circuit_rows(psi, circuit)
    return np.ascontiguousarray(psi.T)


def outcome_indices(n, qubit, outcome):
    """Amplitude indices where ``qubit`` reads ``outcome``, ascending."""
    idx = np.arange(1 << n)
    return idx[((idx >> (n - 1 - qubit)) & 1) == outcome]


def project_qubit(state, qubit, outcome=0):
    """Post-select ``qubit`` on ``outcome``; returns (reduced state, probability)."""
    n = state.n_qubits
    if n < 2:
        raise ValueError("need at least two qubits to measure one and keep a state")
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    kept = state.amplitudes[outcome_indices(n, qubit, outcome)]
    prob = float(np.vdot(kept, kept).real)
    if prob <= 0.0:
        raise MeasurementError(f"outcome {outcome} on qubit {qubit} has zero probability")
    return Statevector(n - 1, kept / math.sqrt(prob)), prob


def amplitude_encode(v):
    """Load a real vector of length 2**n as amplitudes.

    Inputs within 1e-6 of unit norm are renormalized; anything further off
    (including the zero vector) is rejected.
    """
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("amplitude_encode expects a 1-D vector")
    N = v.shape[0]
    if N < 2 or N & (N - 1):
        raise ValueError(f"vector length must be a power of two >= 2, got {N}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or abs(norm - 1.0) > 1e-6:
        raise ValueError(f"vector norm {norm} is not within 1e-6 of 1")
    return Statevector(N.bit_length() - 1, v / norm)
