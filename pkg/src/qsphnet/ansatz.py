"""Encoders, variational ansatz families, and measurement heads.

Three circuit families are provided:

* ``qnn``  -- U3 rotations on every qubit followed by a CNOT ring per layer.
* ``qmlp`` -- U3 rotations followed by a ring of trainable CRX couplings,
  one independent coupling angle per qubit per layer.
* ``qcnn`` -- alternating convolution stages (Ising XX/YY/ZZ pair rotations
  with angles shared across pairs of a stage) and pooling stages that fold
  each discarded qubit onto its retained neighbor through a trainable CRX
  (deferred-measurement realization), closed by a fixed 15-gate two-qubit
  dense sequence on the surviving qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, EncodingError, ShapeError
from .statevector import (
    CircuitSpec,
    Gate,
    GateOp,
    StateVector,
    expectation_z_raw,
    marginal_probabilities_raw,
    run_circuit_raw,
)

#: dense-layer gate kinds, applied cyclically to adjacent surviving qubits
QCNN_DENSE_SEQUENCE = (
    Gate.RZZ,
    Gate.RXX,
    Gate.RYY,
    Gate.RZX,
    Gate.RZX,
    Gate.RXX,
    Gate.RZX,
    Gate.RZZ,
    Gate.RYY,
    Gate.RZZ,
    Gate.RXX,
    Gate.RZX,
    Gate.RZX,
    Gate.RZZ,
    Gate.RYY,
)

_CONV_KINDS = (Gate.RXX, Gate.RYY, Gate.RZZ)


@dataclass
class EncoderSpec:
    """How classical features enter the circuit.

    ``angle``: one RY rotation per feature on its own qubit, with the feature
    min-max normalized over ``feature_bounds`` and scaled by ``angle_scale``
    (so in-bounds features map to [0, angle_scale] radians).

    ``amplitude``: features zero-padded to the next power of two and written
    directly as normalized state amplitudes over ceil(log2(n)) qubits.
    """

    kind: str
    n_features: int
    angle_scale: float = math.pi
    feature_bounds: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("angle", "amplitude"):
            raise ConfigurationError(f"unknown encoder kind {self.kind!r}")
        if self.n_features < 1:
            raise ConfigurationError("encoder needs at least one feature")
        if self.feature_bounds is None:
            self.feature_bounds = np.tile([0.0, 1.0], (self.n_features, 1))
        self.feature_bounds = np.asarray(self.feature_bounds, dtype=float)
        if self.feature_bounds.shape != (self.n_features, 2):
            raise ShapeError("feature_bounds must have shape (n_features, 2)")
        if self.kind == "angle" and np.any(
            self.feature_bounds[:, 1] <= self.feature_bounds[:, 0]
        ):
            raise ConfigurationError("feature bounds must satisfy min < max")

    @property
    def n_qubits(self) -> int:
        if self.kind == "angle":
            return self.n_features
        return max(1, math.ceil(math.log2(self.n_features)))


def feature_angles(spec: EncoderSpec, features: np.ndarray) -> np.ndarray:
    """Rotation angles for a feature batch (angle encoding), shape (B, F)."""
    x = np.asarray(features, dtype=float)
    lo = spec.feature_bounds[:, 0]
    hi = spec.feature_bounds[:, 1]
    return spec.angle_scale * (x - lo) / (hi - lo)


def amplitude_states(spec: EncoderSpec, features: np.ndarray) -> np.ndarray:
    """Normalized amplitude vectors for a feature batch, shape (B, 2**n)."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise EncodingError("amplitude encoding is undefined for an all-zero feature vector")
    dim = 2**spec.n_qubits
    amps = np.zeros((x.shape[0], dim), dtype=np.complex128)
    amps[:, : x.shape[1]] = x / norms[:, None]
    return amps


def encode(spec: EncoderSpec, features):
    """Encode one feature vector.

    Returns a CircuitSpec of literal-angle RY gates (angle encoding) or a
    prepared StateVector (amplitude encoding).
    """
    x = np.asarray(features, dtype=float).reshape(-1)
    if x.size != spec.n_features:
        raise ShapeError(f"expected {spec.n_features} features, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ShapeError("features must be finite")
    if spec.kind == "angle":
        angles = feature_angles(spec, x[None, :])[0]
        gates = tuple(
            GateOp(Gate.RY, (q,), (float(angles[q]),)) for q in range(spec.n_features)
        )
        return CircuitSpec(n_qubits=spec.n_features, gates=gates)
    return StateVector(spec.n_qubits, amplitude_states(spec, x)[0])


def with_angle_encoder(spec: EncoderSpec, circuit: CircuitSpec) -> CircuitSpec:
    """Prepend slot-based RY encoding gates to an ansatz circuit.

    The returned circuit reads encoded angles from slots
    [n_trainable, n_trainable + n_features).
    """
    if spec.kind != "angle":
        raise ConfigurationError("only angle encoders attach as circuit prefixes")
    if circuit.n_encoded:
        raise ConfigurationError("circuit already carries encoded slots")
    if circuit.n_qubits != spec.n_features:
        raise ConfigurationError(
            f"angle encoder needs one qubit per feature "
            f"({spec.n_features} features vs {circuit.n_qubits} qubits)"
        )
    prefix = tuple(
        GateOp(Gate.RY, (q,), (circuit.n_trainable + q,)) for q in range(spec.n_features)
    )
    return CircuitSpec(
        n_qubits=circuit.n_qubits,
        gates=prefix + circuit.gates,
        n_trainable=circuit.n_trainable,
        n_encoded=spec.n_features,
        active_qubits=circuit.active_qubits,
    )


@dataclass
class AnsatzSpec:
    """Which ansatz family to build and at what size.

    For the qcnn family, ``qcnn_schedule`` gives the number of convolution
    sub-layers in each (conv, pool) stage; by default the circuit pools until
    two active qubits remain with ``n_layers`` convolution sub-layers per
    stage.
    """

    family: str
    n_qubits: int
    n_layers: int = 1
    qcnn_schedule: tuple | None = None

    def __post_init__(self):
        if self.family not in ("qnn", "qmlp", "qcnn"):
            raise ConfigurationError(f"unknown ansatz family {self.family!r}")
        if self.n_layers < 1:
            raise ConfigurationError("n_layers must be >= 1")


@dataclass
class MeasurementHead:
    """Readout of the final state: Pauli-Z expectations or the joint
    outcome distribution over the listed qubits."""

    kind: str
    qubits: tuple

    def __post_init__(self):
        if self.kind not in ("pauliz", "prob"):
            raise ConfigurationError(f"unknown head kind {self.kind!r}")
        self.qubits = tuple(int(q) for q in self.qubits)
        if not self.qubits:
            raise ConfigurationError("head must read at least one qubit")

    @property
    def width(self) -> int:
        return len(self.qubits) if self.kind == "pauliz" else 2 ** len(self.qubits)


def _ring_pairs(qubits) -> list:
    m = len(qubits)
    if m == 2:
        return [(qubits[0], qubits[1])]
    return [(qubits[i], qubits[(i + 1) % m]) for i in range(m)]


def build_ansatz(spec: AnsatzSpec) -> CircuitSpec:
    """Build the trainable circuit for a family; slot count is a fixed
    function of (family, n_qubits, n_layers, schedule)."""
    n = spec.n_qubits
    if n < 2:
        raise ConfigurationError("ring coupling needs at least 2 qubits")
    if spec.family == "qcnn":
        return build_qcnn(spec)

    gates = []
    slot = 0
    for _ in range(spec.n_layers):
        for q in range(n):
            gates.append(GateOp(Gate.U3, (q,), (slot, slot + 1, slot + 2)))
            slot += 3
        if spec.family == "qnn":
            for q in range(n):
                gates.append(GateOp(Gate.CNOT, (q, (q + 1) % n)))
        else:  # qmlp: trainable CRX couplings
            for q in range(n):
                gates.append(GateOp(Gate.CRX, (q, (q + 1) % n), (slot,)))
                slot += 1
    return CircuitSpec(n_qubits=n, gates=tuple(gates), n_trainable=slot)


def _default_schedule(n_qubits: int, n_layers: int) -> list:
    stages = []
    active = n_qubits
    while active > 2 and active % 2 == 0:
        stages.append(n_layers)
        active //= 2
    return stages


def build_qcnn(spec: AnsatzSpec) -> CircuitSpec:
    """Convolution/pooling circuit with a final dense two-qubit sequence.

    Per stage: each convolution sub-layer applies RXX, RYY, RZZ to every
    adjacent active pair with one shared angle per gate kind (3 slots per
    sub-layer); pooling applies one trainable CRX from each discarded qubit
    onto its retained neighbor and removes the discarded qubit from the
    active set.
    """
    n = spec.n_qubits
    if n < 2:
        raise ConfigurationError("qcnn needs at least 2 qubits")
    schedule = (
        list(spec.qcnn_schedule)
        if spec.qcnn_schedule is not None
        else _default_schedule(n, spec.n_layers)
    )
    active = list(range(n))
    gates = []
    slot = 0
    for conv_layers in schedule:
        m = len(active)
        if m % 2:
            raise ConfigurationError(f"pooling needs an even qubit count, have {m} active")
        for _ in range(int(conv_layers)):
            for kind in _CONV_KINDS:
                shared = slot
                slot += 1
                for a, b in _ring_pairs(active):
                    gates.append(GateOp(kind, (a, b), (shared,)))
        retained = active[0::2]
        discarded = active[1::2]
        for d, r in zip(discarded, retained):
            gates.append(GateOp(Gate.CRX, (d, r), (slot,)))
            slot += 1
        active = retained
    m = len(active)
    if m < 2:
        raise ConfigurationError("dense layer needs at least 2 surviving qubits")
    for i, kind in enumerate(QCNN_DENSE_SEQUENCE):
        gates.append(GateOp(kind, (active[i % m], active[(i + 1) % m]), (slot,)))
        slot += 1
    return CircuitSpec(
        n_qubits=n, gates=tuple(gates), n_trainable=slot, active_qubits=tuple(active)
    )


def trainable_count(spec: AnsatzSpec) -> int:
    """Closed-form trainable-slot count for an ansatz spec."""
    n, L = spec.n_qubits, spec.n_layers
    if spec.family == "qnn":
        return 3 * n * L
    if spec.family == "qmlp":
        return 4 * n * L
    schedule = (
        list(spec.qcnn_schedule)
        if spec.qcnn_schedule is not None
        else _default_schedule(n, L)
    )
    total = 0
    active = n
    for conv_layers in schedule:
        total += 3 * int(conv_layers) + active // 2
        active //= 2
    return total + len(QCNN_DENSE_SEQUENCE)


def head_readout(amps: np.ndarray, head: MeasurementHead, n_qubits: int) -> np.ndarray:
    """Apply a measurement head to batched amplitudes; returns (B, width)."""
    for q in head.qubits:
        if not 0 <= q < n_qubits:
            raise IndexError(f"head qubit {q} out of range")
    if head.kind == "pauliz":
        cols = [expectation_z_raw(amps, q, n_qubits) for q in head.qubits]
        return np.stack(cols, axis=1)
    return marginal_probabilities_raw(amps, head.qubits, n_qubits)


def quantum_forward_batch(
    circuit: CircuitSpec,
    head: MeasurementHead,
    trainable: np.ndarray,
    features: np.ndarray,
    encoder: EncoderSpec,
) -> np.ndarray:
    """Encode a feature batch, run the ansatz, and read out the head."""
    inactive = set(range(circuit.n_qubits)) - set(circuit.active)
    if inactive & set(head.qubits):
        raise ConfigurationError("head reads a pooled-away qubit")
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != encoder.n_features:
        raise ShapeError(f"expected {encoder.n_features} features, got {x.shape[1]}")
    if encoder.kind == "angle":
        full = circuit if circuit.n_encoded else with_angle_encoder(encoder, circuit)
        if full.n_encoded != encoder.n_features:
            raise ConfigurationError("circuit encoded slots do not match the encoder")
        amps = run_circuit_raw(full, trainable, feature_angles(encoder, x))
    else:
        if circuit.n_encoded:
            raise ConfigurationError("amplitude encoding cannot drive encoded slots")
        amps = run_circuit_raw(circuit, trainable, None, amplitude_states(encoder, x))
    return head_readout(amps, head, circuit.n_qubits)


def quantum_forward(
    circuit: CircuitSpec,
    head: MeasurementHead,
    trainable,
    features,
    encoder: EncoderSpec,
) -> np.ndarray:
    """Single-sample forward pass; returns the head output vector."""
    x = np.asarray(features, dtype=float).reshape(1, -1)
    return quantum_forward_batch(circuit, head, np.asarray(trainable, float), x, encoder)[0]
