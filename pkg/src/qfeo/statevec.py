"""Dense statevector simulation of the encoding gate set.

The heavy per-amplitude loops live in a compiled Cython module when the
extension built; otherwise a numpy implementation with identical semantics
is used. ``BACKEND`` reports which one is active. Qubit 0 is the
least-significant bit of the basis index, fixed globally.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError

try:
    from . import _statevec_cy as _kernels

    BACKEND = "cython"
except ImportError:  # extension not built; numpy fallback
    from . import _statevec_np as _kernels

    BACKEND = "numpy"

MAX_QUBITS = 24

# kind -> (number of qubits, number of angles)
GATE_SIGNATURES = {
    "RX": (1, 1),
    "RY": (1, 1),
    "RZ": (1, 1),
    "H": (1, 0),
    "P": (1, 1),
    "U3": (1, 3),
    "CX": (2, 0),
    "CP": (2, 1),
    "RXX": (2, 1),
    "RYY": (2, 1),
    "RZZ": (2, 1),
}

_SQRT2_INV = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """One gate application: a kind from the fixed set, target qubits, angles."""

    kind: str
    qubits: tuple[int, ...]
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_SIGNATURES:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        nq, na = GATE_SIGNATURES[self.kind]
        if len(self.qubits) != nq:
            raise ValueError(f"{self.kind} takes {nq} qubit(s), got {self.qubits}")
        if len(self.angles) != na:
            raise ValueError(f"{self.kind} takes {na} angle(s), got {self.angles}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} qubits must be distinct: {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")


@dataclass
class Circuit:
    """Ordered gate list over a fixed register size."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def add(self, kind: str, qubits: tuple[int, ...], angles: tuple[float, ...] = ()):
        gate = Gate(kind, qubits, angles)
        if any(q >= self.n_qubits for q in qubits):
            raise IndexError(f"qubit index {qubits} out of range for n={self.n_qubits}")
        self.gates.append(gate)
        return self

    def rx(self, q, theta):
        return self.add("RX", (q,), (theta,))

    def ry(self, q, theta):
        return self.add("RY", (q,), (theta,))

    def rz(self, q, theta):
        return self.add("RZ", (q,), (theta,))

    def h(self, q):
        return self.add("H", (q,))

    def p(self, q, theta):
        return self.add("P", (q,), (theta,))

    def u3(self, q, theta, phi, lam):
        return self.add("U3", (q,), (theta, phi, lam))

    def cx(self, control, target):
        return self.add("CX", (control, target))

    def cp(self, control, target, theta):
        return self.add("CP", (control, target), (theta,))

    def rxx(self, qa, qb, theta):
        return self.add("RXX", (qa, qb), (theta,))

    def ryy(self, qa, qb, theta):
        return self.add("RYY", (qa, qb), (theta,))

    def rzz(self, qa, qb, theta):
        return self.add("RZZ", (qa, qb), (theta,))


@dataclass
class Statevector:
    """Complex amplitudes of an n-qubit register (length 2**n_qubits)."""

    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())


def zero_state(n_qubits: int) -> Statevector:
    """The all-zeros computational basis state."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


def matrix_1q(kind: str, angles: tuple[float, ...]) -> np.ndarray:
    """Explicit 2x2 matrix of a single-qubit gate kind."""
    if kind == "RX":
        c, s = math.cos(angles[0] / 2), math.sin(angles[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        c, s = math.cos(angles[0] / 2), math.sin(angles[0] / 2)
        return np.array([[c, -s], [s, c]])
    if kind == "RZ":
        e = cmath.exp(-0.5j * angles[0])
        return np.array([[e, 0], [0, e.conjugate()]])
    if kind == "H":
        return np.array([[_SQRT2_INV, _SQRT2_INV], [_SQRT2_INV, -_SQRT2_INV]])
    if kind == "P":
        return np.array([[1, 0], [0, cmath.exp(1j * angles[0])]])
    if kind == "U3":
        # RZ(phi) . RY(theta) . RZ(lam), global phase dropped
        theta, phi, lam = angles
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array(
            [
                [c, -cmath.exp(1j * lam) * s],
                [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c],
            ]
        )
    raise ValueError(f"not a single-qubit gate: {kind}")


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Apply one gate in place and return the state."""
    if any(q >= state.n_qubits for q in gate.qubits):
        raise IndexError(
            f"{gate.kind} on qubits {gate.qubits} exceeds register size {state.n_qubits}"
        )
    a = state.amplitudes
    kind = gate.kind
    if GATE_SIGNATURES[kind][0] == 1:
        m = matrix_1q(kind, gate.angles)
        _kernels.apply_1q(a, gate.qubits[0], m[0, 0], m[0, 1], m[1, 0], m[1, 1])
        return state
    qa, qb = gate.qubits
    if kind == "CX":
        _kernels.apply_cx(a, qa, qb)
    elif kind == "CP":
        _kernels.apply_2q_diag(a, qa, qb, 1.0, 1.0, 1.0, cmath.exp(1j * gate.angles[0]))
    elif kind == "RZZ":
        e = cmath.exp(-0.5j * gate.angles[0])
        ec = e.conjugate()
        _kernels.apply_2q_diag(a, qa, qb, e, ec, ec, e)
    elif kind == "RXX":
        c = math.cos(gate.angles[0] / 2)
        s = -1j * math.sin(gate.angles[0] / 2)
        _kernels.apply_2q_anti(a, qa, qb, c, s, s)
    elif kind == "RYY":
        c = math.cos(gate.angles[0] / 2)
        s = math.sin(gate.angles[0] / 2)
        _kernels.apply_2q_anti(a, qa, qb, c, 1j * s, -1j * s)
    else:  # pragma: no cover - GATE_SIGNATURES is exhaustive
        raise ValueError(f"unhandled gate kind {kind}")
    return state


def run_circuit(circuit: Circuit) -> Statevector:
    """Sequential gate application from the all-zeros state."""
    state = zero_state(circuit.n_qubits)
    for gate in circuit.gates:
        apply_gate(state, gate)
    return state


# basis rotations taking the X / Y eigenbasis onto the Z basis and back
_TO_Z_FROM_X = matrix_1q("H", ())
_FROM_Z_TO_X = _TO_Z_FROM_X
# M = H . S^dagger satisfies M^dagger Z M = Y
_TO_Z_FROM_Y = np.array([[_SQRT2_INV, -1j * _SQRT2_INV], [_SQRT2_INV, 1j * _SQRT2_INV]])
_FROM_Z_TO_Y = _TO_Z_FROM_Y.conj().T


def pauli_expectation(state: Statevector, qubit: int, axis: str) -> float:
    """Exact single-qubit Pauli expectation, computed by an in-place basis
    rotation followed by the Z-diagonal sum (and the inverse rotation)."""
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for n={state.n_qubits}")
    a = state.amplitudes
    if axis == "Z":
        return float(_kernels.z_expectation(a, qubit))
    if axis == "X":
        pre, post = _TO_Z_FROM_X, _FROM_Z_TO_X
    elif axis == "Y":
        pre, post = _TO_Z_FROM_Y, _FROM_Z_TO_Y
    else:
        raise ValueError(f"axis must be X, Y or Z, got {axis!r}")
    _kernels.apply_1q(a, qubit, pre[0, 0], pre[0, 1], pre[1, 0], pre[1, 1])
    value = float(_kernels.z_expectation(a, qubit))
    _kernels.apply_1q(a, qubit, post[0, 0], post[0, 1], post[1, 0], post[1, 1])
    return value


def all_pauli_expectations(state: Statevector) -> np.ndarray:
    """X, Y, Z expectations for every qubit, ordered
    [X_q0, Y_q0, Z_q0, X_q1, ...]; length 3 * n_qubits."""
    out = np.empty(3 * state.n_qubits)
    for q in range(state.n_qubits):
        out[3 * q] = pauli_expectation(state, q, "X")
        out[3 * q + 1] = pauli_expectation(state, q, "Y")
        out[3 * q + 2] = pauli_expectation(state, q, "Z")
    return out
