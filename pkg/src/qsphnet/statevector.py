"""Dense statevector simulation of parameterized quantum circuits.

Bit convention: qubit 0 is the least-significant bit of the amplitude index,
so the basis state |q_{n-1} ... q_1 q_0> lives at index sum_k q_k * 2**k.
Two-qubit gate matrices are indexed by (bit of targets[0], bit of targets[1]),
i.e. row r = 2 * b_{t0} + b_{t1}; for controlled gates targets[0] is the
control.

Gate application updates the amplitude vector in place per target-bit stride
instead of building the full 2^n x 2^n unitary, and is vectorized over a
leading batch axis so that many circuit evaluations (samples, shift terms)
share one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import (
    CapacityError,
    ConfigurationError,
    ShapeError,
    UnsupportedGateError,
)

MAX_QUBITS = 20


class Gate(str, Enum):
    U3 = "u3"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    H = "h"
    CNOT = "cnot"
    CRX = "crx"
    RXX = "rxx"
    RYY = "ryy"
    RZZ = "rzz"
    RZX = "rzx"


#: kind -> (number of target qubits, number of angle parameters)
GATE_ARITY = {
    Gate.U3: (1, 3),
    Gate.RX: (1, 1),
    Gate.RY: (1, 1),
    Gate.RZ: (1, 1),
    Gate.H: (1, 0),
    Gate.CNOT: (2, 0),
    Gate.CRX: (2, 1),
    Gate.RXX: (2, 1),
    Gate.RYY: (2, 1),
    Gate.RZZ: (2, 1),
    Gate.RZX: (2, 1),
}


@dataclass(frozen=True)
class GateOp:
    """One gate in a circuit.

    ``params`` entries are either ``int`` (index into the circuit's combined
    trainable+encoded parameter vector) or ``float`` (literal angle, radians).
    """

    kind: Gate
    targets: tuple
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Gate(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(self.params))
        n_targets, n_params = GATE_ARITY[self.kind]
        if len(self.targets) != n_targets:
            raise ConfigurationError(
                f"{self.kind.value} takes {n_targets} target(s), got {self.targets}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise ConfigurationError(f"targets must be distinct, got {self.targets}")
        if len(self.params) != n_params:
            raise ConfigurationError(
                f"{self.kind.value} takes {n_params} angle(s), got {len(self.params)}"
            )
        for p in self.params:
            if not isinstance(p, (int, float, np.integer, np.floating)):
                raise ConfigurationError(f"param entries must be int slot or float angle, got {p!r}")


@dataclass
class StateVector:
    """Complex amplitudes of a pure n-qubit state."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ShapeError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass
class CircuitSpec:
    """Ordered gate list with trainable and data-encoding parameter slots.

    Slots [0, n_trainable) are trainable angles; slots
    [n_trainable, n_trainable + n_encoded) carry encoded feature angles.
    ``active_qubits`` records which qubits still carry information after
    pooling (None means all of them).
    """

    n_qubits: int
    gates: tuple = ()
    n_trainable: int = 0
    n_encoded: int = 0
    active_qubits: tuple | None = None

    def __post_init__(self):
        self.gates = tuple(self.gates)
        if self.active_qubits is not None:
            self.active_qubits = tuple(int(q) for q in self.active_qubits)
        self.validate()

    def validate(self):
        if self.n_qubits < 1:
            raise ConfigurationError("circuit needs at least one qubit")
        n_slots = self.n_trainable + self.n_encoded
        for g in self.gates:
            for t in g.targets:
                if not 0 <= t < self.n_qubits:
                    raise ConfigurationError(f"gate target {t} out of range for {self.n_qubits} qubits")
            for p in g.params:
                if _is_slot(p) and not 0 <= int(p) < n_slots:
                    raise ConfigurationError(f"param slot {p} out of range (have {n_slots} slots)")
        if self.active_qubits is not None:
            for q in self.active_qubits:
                if not 0 <= q < self.n_qubits:
                    raise ConfigurationError(f"active qubit {q} out of range")

    @property
    def active(self) -> tuple:
        return self.active_qubits if self.active_qubits is not None else tuple(range(self.n_qubits))

    def slot_occurrences(self, slot: int) -> list:
        """(gate index, param position) pairs where ``slot`` is referenced."""
        out = []
        for gi, g in enumerate(self.gates):
            for pi, p in enumerate(g.params):
                if _is_slot(p) and int(p) == slot:
                    out.append((gi, pi))
        return out


def _is_slot(p) -> bool:
    return isinstance(p, (int, np.integer)) and not isinstance(p, bool)


# ---------------------------------------------------------------------------
# Gate matrices (broadcast over angle arrays; scalar angles give (2,2)/(4,4))
# ---------------------------------------------------------------------------

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)


def _mat_rx(theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = c
    m[..., 0, 1] = -1j * s
    m[..., 1, 0] = -1j * s
    m[..., 1, 1] = c
    return m


def _mat_ry(theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = c
    m[..., 0, 1] = -s
    m[..., 1, 0] = s
    m[..., 1, 1] = c
    return m


def _mat_rz(theta):
    theta = np.asarray(theta, dtype=float)
    e = np.exp(-0.5j * theta)
    m = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = e
    m[..., 1, 1] = np.conj(e)
    return m


def _mat_u3(theta, phi, lam):
    theta, phi, lam = np.broadcast_arrays(
        np.asarray(theta, dtype=float), np.asarray(phi, dtype=float), np.asarray(lam, dtype=float)
    )
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.zeros(np.shape(theta) + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = c
    m[..., 0, 1] = -np.exp(1j * lam) * s
    m[..., 1, 0] = np.exp(1j * phi) * s
    m[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return m


def _mat_crx(beta):
    beta = np.asarray(beta, dtype=float)
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    m = np.zeros(beta.shape + (4, 4), dtype=np.complex128)
    m[..., 0, 0] = 1
    m[..., 1, 1] = 1
    m[..., 2, 2] = c
    m[..., 2, 3] = -1j * s
    m[..., 3, 2] = -1j * s
    m[..., 3, 3] = c
    return m


def _mat_rxx(theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.zeros(theta.shape + (4, 4), dtype=np.complex128)
    for k in range(4):
        m[..., k, k] = c
    m[..., 0, 3] = -1j * s
    m[..., 3, 0] = -1j * s
    m[..., 1, 2] = -1j * s
    m[..., 2, 1] = -1j * s
    return m


def _mat_ryy(theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.zeros(theta.shape + (4, 4), dtype=np.complex128)
    for k in range(4):
        m[..., k, k] = c
    m[..., 0, 3] = 1j * s
    m[..., 3, 0] = 1j * s
    m[..., 1, 2] = -1j * s
    m[..., 2, 1] = -1j * s
    return m


def _mat_rzz(theta):
    theta = np.asarray(theta, dtype=float)
    e = np.exp(-0.5j * theta)
    m = np.zeros(theta.shape + (4, 4), dtype=np.complex128)
    m[..., 0, 0] = e
    m[..., 1, 1] = np.conj(e)
    m[..., 2, 2] = np.conj(e)
    m[..., 3, 3] = e
    return m


def _mat_rzx(theta):
    # exp(-i theta/2 Z@X): RX(theta) on the block where the Z qubit is |0>,
    # RX(-theta) on the |1> block.
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.zeros(theta.shape + (4, 4), dtype=np.complex128)
    for k in range(4):
        m[..., k, k] = c
    m[..., 0, 1] = -1j * s
    m[..., 1, 0] = -1j * s
    m[..., 2, 3] = 1j * s
    m[..., 3, 2] = 1j * s
    return m


_MATRIX_FUNCS = {
    Gate.RX: _mat_rx,
    Gate.RY: _mat_ry,
    Gate.RZ: _mat_rz,
    Gate.U3: _mat_u3,
    Gate.CRX: _mat_crx,
    Gate.RXX: _mat_rxx,
    Gate.RYY: _mat_ryy,
    Gate.RZZ: _mat_rzz,
    Gate.RZX: _mat_rzx,
}


def gate_matrix(gate, angles=()) -> np.ndarray:
    """Unitary matrix for resolved ``angles`` (2x2 or 4x4).

    ``gate`` may be a GateOp, a Gate, or a gate-kind string.
    """
    try:
        kind = gate.kind if isinstance(gate, GateOp) else Gate(gate)
    except ValueError:
        raise UnsupportedGateError(f"unknown gate kind {gate!r}") from None
    _, n_params = GATE_ARITY[kind]
    angles = tuple(float(a) for a in angles)
    if len(angles) != n_params:
        raise ConfigurationError(f"{kind.value} takes {n_params} angle(s), got {len(angles)}")
    if kind == Gate.H:
        return _H_MATRIX.copy()
    if kind == Gate.CNOT:
        return _CNOT_MATRIX.copy()
    return _MATRIX_FUNCS[kind](*angles)


# ---------------------------------------------------------------------------
# In-place gate application on batched amplitude arrays of shape (B, 2**n)
# ---------------------------------------------------------------------------

_SWAP_PAIR = np.array([0, 2, 1, 3])


def _apply_1q(amps: np.ndarray, mat: np.ndarray, q: int) -> None:
    batch, dim = amps.shape
    inner = 1 << q
    v = amps.reshape(batch, dim >> (q + 1), 2, inner)
    if mat.ndim == 3:
        a = mat[:, 0, 0, None, None]
        b = mat[:, 0, 1, None, None]
        c = mat[:, 1, 0, None, None]
        d = mat[:, 1, 1, None, None]
    else:
        a, b, c, d = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    v0 = v[:, :, 0, :].copy()
    v1 = v[:, :, 1, :]
    v[:, :, 0, :] = a * v0 + b * v1
    v[:, :, 1, :] = c * v0 + d * v1


def _apply_2q(amps: np.ndarray, mat: np.ndarray, t0: int, t1: int) -> None:
    if t0 < t1:
        # matrix is indexed by (bit t0, bit t1); reorder to (high, low) qubit
        mat = mat[..., _SWAP_PAIR, :][..., :, _SWAP_PAIR]
        hi, lo = t1, t0
    else:
        hi, lo = t0, t1
    batch, dim = amps.shape
    v = amps.reshape(batch, dim >> (hi + 1), 2, 1 << (hi - lo - 1), 2, 1 << lo)
    blocks = [v[:, :, r >> 1, :, r & 1, :].copy() for r in range(4)]
    batched = mat.ndim == 3
    for r in range(4):
        acc = None
        for c in range(4):
            m = mat[..., r, c]
            if not batched:
                if m == 0:
                    continue
                term = m * blocks[c]
            else:
                term = m[:, None, None, None] * blocks[c]
            acc = term if acc is None else acc + term
        v[:, :, r >> 1, :, r & 1, :] = 0.0 if acc is None else acc


def init_zero_state(n_qubits: int) -> StateVector:
    """Prepare |0...0> on ``n_qubits`` qubits."""
    if not 1 <= int(n_qubits) <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2 ** int(n_qubits), dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(int(n_qubits), amps)


def apply_gate(state: StateVector, gate: GateOp, angles=None) -> StateVector:
    """Apply one gate to a copy of ``state`` and return the result.

    ``angles`` must hold the resolved angle values when the gate carries
    parameters; literal params in the gate are used when ``angles`` is None.
    """
    if angles is None:
        if any(_is_slot(p) for p in gate.params):
            raise ConfigurationError("gate has unresolved slots; pass explicit angles")
        angles = tuple(float(p) for p in gate.params)
    for t in gate.targets:
        if not 0 <= t < state.n_qubits:
            raise IndexError(f"target {t} out of range for {state.n_qubits} qubits")
    amps = state.amplitudes[None, :].copy()
    if gate.kind == Gate.H:
        _apply_1q(amps, _H_MATRIX, gate.targets[0])
    elif gate.kind == Gate.CNOT:
        _apply_2q(amps, _CNOT_MATRIX, *gate.targets)
    else:
        mat = _MATRIX_FUNCS[gate.kind](*(float(a) for a in angles))
        if len(gate.targets) == 1:
            _apply_1q(amps, mat, gate.targets[0])
        else:
            _apply_2q(amps, mat, *gate.targets)
    return StateVector(state.n_qubits, amps[0])


def _resolve_angles(gate, trainable, encoded, offsets, gate_index, batch):
    """Angle list for one gate; entries are scalars or (batch,) arrays."""
    angles = []
    for pi, p in enumerate(gate.params):
        if _is_slot(p):
            slot = int(p)
            if slot < len(trainable):
                a = trainable[slot]
            else:
                if encoded is None:
                    raise ConfigurationError("circuit references encoded slots but no encoded values given")
                a = encoded[:, slot - len(trainable)]
        else:
            a = float(p)
        if offsets is not None:
            off = offsets.get((gate_index, pi))
            if off is not None:
                a = a + off
        angles.append(a)
    if any(isinstance(a, np.ndarray) for a in angles):
        angles = [np.broadcast_to(np.asarray(a, dtype=float), (batch,)) for a in angles]
    return angles


def run_circuit_raw(
    circuit: CircuitSpec,
    trainable_params,
    encoded_params=None,
    initial=None,
    angle_offsets=None,
) -> np.ndarray:
    """Run a circuit over a batch; returns amplitudes of shape (B, 2**n).

    ``encoded_params`` has shape (B, n_encoded) or (n_encoded,).
    ``initial`` optionally replaces |0...0> (shape (2**n,) or (B, 2**n)).
    ``angle_offsets`` maps (gate index, param position) -> additive offset,
    scalar or (B,), used to shift individual gate-angle occurrences.
    """
    trainable = np.asarray(trainable_params, dtype=float).reshape(-1)
    if trainable.size != circuit.n_trainable:
        raise ConfigurationError(
            f"expected {circuit.n_trainable} trainable params, got {trainable.size}"
        )
    encoded = None
    if encoded_params is not None:
        encoded = np.asarray(encoded_params, dtype=float)
        if encoded.ndim == 1:
            encoded = encoded[None, :]
        if encoded.shape[1] != circuit.n_encoded:
            raise ConfigurationError(
                f"expected {circuit.n_encoded} encoded params, got {encoded.shape[1]}"
            )
    elif circuit.n_encoded:
        raise ConfigurationError("circuit has encoded slots; encoded_params required")

    batch = 1
    if encoded is not None:
        batch = encoded.shape[0]
    if initial is not None:
        initial = np.asarray(initial, dtype=np.complex128)
        if initial.ndim == 1:
            initial = initial[None, :]
        if initial.shape[1] != 2**circuit.n_qubits:
            raise ShapeError("initial state has wrong length")
        batch = max(batch, initial.shape[0])
    if angle_offsets:
        for off in angle_offsets.values():
            if isinstance(off, np.ndarray):
                batch = max(batch, off.shape[0])

    dim = 2**circuit.n_qubits
    if initial is None:
        amps = np.zeros((batch, dim), dtype=np.complex128)
        amps[:, 0] = 1.0
    else:
        amps = np.broadcast_to(initial, (batch, dim)).copy()

    for gi, g in enumerate(circuit.gates):
        if g.kind == Gate.H:
            _apply_1q(amps, _H_MATRIX, g.targets[0])
            continue
        if g.kind == Gate.CNOT:
            _apply_2q(amps, _CNOT_MATRIX, *g.targets)
            continue
        angles = _resolve_angles(g, trainable, encoded, angle_offsets, gi, batch)
        mat = _MATRIX_FUNCS[g.kind](*angles)
        if len(g.targets) == 1:
            _apply_1q(amps, mat, g.targets[0])
        else:
            _apply_2q(amps, mat, *g.targets)
    return amps


def run_circuit(
    circuit: CircuitSpec, trainable_params=(), encoded_params=None, initial=None
) -> StateVector:
    """Run the circuit for a single sample starting from |0...0>."""
    if initial is not None and isinstance(initial, StateVector):
        initial = initial.amplitudes
    enc = None
    if encoded_params is not None:
        enc = np.asarray(encoded_params, dtype=float).reshape(1, -1)
    amps = run_circuit_raw(circuit, trainable_params, enc, initial)
    return StateVector(circuit.n_qubits, amps[0])


# ---------------------------------------------------------------------------
# Readout
# ---------------------------------------------------------------------------


def expectation_z_raw(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """<Z_qubit> per batch row; +1 for |0>, -1 for |1>."""
    batch, dim = amps.shape
    inner = 1 << qubit
    p = (amps.real**2 + amps.imag**2).reshape(batch, dim >> (qubit + 1), 2, inner)
    p1 = p[:, :, 1, :].sum(axis=(1, 2))
    return 1.0 - 2.0 * p1


def expectation_z(state: StateVector, qubit: int) -> float:
    """Pauli-Z expectation of one qubit, in [-1, 1]."""
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    return float(expectation_z_raw(state.amplitudes[None, :], qubit, state.n_qubits)[0])


def measure_probabilities(state: StateVector) -> np.ndarray:
    """Probability of each basis outcome; nonnegative, sums to 1."""
    a = state.amplitudes
    return a.real**2 + a.imag**2


def marginal_probabilities_raw(amps: np.ndarray, qubits, n_qubits: int) -> np.ndarray:
    """Joint outcome distribution over ``qubits``, shape (B, 2**len(qubits)).

    Outcome index m = sum_k bit(qubits[k]) * 2**k, i.e. qubits[0] is the
    least-significant bit of m.
    """
    qubits = list(qubits)
    batch = amps.shape[0]
    p = (amps.real**2 + amps.imag**2).reshape((batch,) + (2,) * n_qubits)
    drop = tuple(1 + (n_qubits - 1 - q) for q in range(n_qubits) if q not in qubits)
    if drop:
        p = p.sum(axis=drop)
    kept_desc = sorted(qubits, reverse=True)  # axis order after summation
    order = [kept_desc.index(q) for q in reversed(qubits)]
    p = np.transpose(p, [0] + [1 + o for o in order])
    return p.reshape(batch, -1)


def marginal_probabilities(state: StateVector, qubits) -> np.ndarray:
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise IndexError(f"qubit {q} out of range")
    return marginal_probabilities_raw(state.amplitudes[None, :], qubits, state.n_qubits)[0]


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def circuit_to_dict(circuit: CircuitSpec) -> dict:
    gates = []
    for g in circuit.gates:
        entry = {"kind": g.kind.value, "targets": list(g.targets)}
        if g.params:
            if all(_is_slot(p) for p in g.params):
                entry["slots"] = [int(p) for p in g.params]
            elif not any(_is_slot(p) for p in g.params):
                entry["literals"] = [float(p) for p in g.params]
            else:
                raise ConfigurationError("gate mixes slot and literal params; not serializable")
        gates.append(entry)
    out = {
        "n_qubits": circuit.n_qubits,
        "gates": gates,
        "n_trainable": circuit.n_trainable,
        "n_encoded": circuit.n_encoded,
    }
    if circuit.active_qubits is not None:
        out["active_qubits"] = list(circuit.active_qubits)
    return out


def circuit_from_dict(data: dict) -> CircuitSpec:
    gates = []
    for entry in data["gates"]:
        if "slots" in entry:
            params = tuple(int(s) for s in entry["slots"])
        elif "literals" in entry:
            params = tuple(float(x) for x in entry["literals"])
        else:
            params = ()
        gates.append(GateOp(Gate(entry["kind"]), tuple(entry["targets"]), params))
    return CircuitSpec(
        n_qubits=int(data["n_qubits"]),
        gates=tuple(gates),
        n_trainable=int(data["n_trainable"]),
        n_encoded=int(data["n_encoded"]),
        active_qubits=tuple(data["active_qubits"]) if "active_qubits" in data else None,
    )


def circuit_to_json(circuit: CircuitSpec) -> str:
    return json.dumps(circuit_to_dict(circuit), sort_keys=True)


def circuit_from_json(text: str) -> CircuitSpec:
    return circuit_from_dict(json.loads(text))
