"""Classical dense stacks and the hybrid quantum-classical topologies.

Four composition levels are supported:

* ``single``   -- encoder, quantum circuit, head; no classical layers.
* ``forward``  -- classical front stack feeding the quantum block.
* ``crossed``  -- classical front stack, quantum block, classical back stack.
* ``parallel`` -- classical branch and quantum branch evaluated on the same
  input, combined through a trainable two-weight aggregation.

All trainable quantities live in one flat parameter vector whose layout is
fixed by ``parameter_layout``: per front layer weights (row-major) then bias,
quantum angles in gate order, per back layer weights then bias, parallel
branch layers, aggregation weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .ansatz import (
    EncoderSpec,
    MeasurementHead,
    amplitude_states,
    feature_angles,
    head_readout,
)
from .exceptions import ConfigurationError, ShapeError
from .statevector import CircuitSpec, circuit_from_dict, circuit_to_dict, run_circuit_raw

LEVELS = ("single", "forward", "crossed", "parallel")
ACTIVATIONS = ("tanh", "relu", "identity")


@dataclass
class DenseLayer:
    """Affine layer ``activation(W x + b)`` with weights of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2:
            raise ShapeError("weights must be a 2-D matrix")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError("bias length must equal the weight row count")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _activate_deriv(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(float)
    return np.ones_like(z)


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    """Evaluate one layer on a single input vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != layer.n_in:
        raise ShapeError(f"layer expects {layer.n_in} inputs, got {x.size}")
    return _activate(layer.activation, layer.weights @ x + layer.bias)


@dataclass
class HybridModel:
    """A hierarchy-level composition of dense stacks and one quantum block.

    ``circuit`` must already carry the encoding prefix for angle encoders
    (``n_encoded == encoder.n_features``); amplitude encoders prepare the
    initial state instead. ``ramp_readout`` maps a probability-head
    distribution onto a scalar through a fixed ramp of outcome values
    spanning [-1, 1]; it is used when no back stack exists to consume the
    distribution.
    """

    level: str
    encoder: EncoderSpec
    circuit: CircuitSpec
    head: MeasurementHead
    front: tuple = ()
    back: tuple = ()
    parallel_classical: tuple | None = None
    ramp_readout: bool = False

    def __post_init__(self):
        self.front = tuple(self.front)
        self.back = tuple(self.back)
        if self.parallel_classical is not None:
            self.parallel_classical = tuple(self.parallel_classical)
        validate_model(self)

    @property
    def head_width(self) -> int:
        return self.head.width

    @property
    def readout_width(self) -> int:
        return 1 if self.ramp_readout else self.head.width

    @property
    def n_inputs(self) -> int:
        if self.front:
            return self.front[0].n_in
        return self.encoder.n_features

    @property
    def n_outputs(self) -> int:
        if self.level == "parallel":
            return self.parallel_classical[-1].n_out
        if self.back:
            return self.back[-1].n_out
        return self.readout_width


def validate_model(model: HybridModel) -> None:
    if model.level not in LEVELS:
        raise ConfigurationError(f"unknown hierarchy level {model.level!r}")
    if model.level == "single" and (model.front or model.back):
        raise ConfigurationError("single-circuit models take no classical layers")
    if model.level == "forward" and (not model.front or model.back):
        raise ConfigurationError("forward models need a front stack and no back stack")
    if model.level == "crossed" and (not model.front or not model.back):
        raise ConfigurationError("crossed models need both front and back stacks")
    if model.level == "parallel":
        if model.parallel_classical is None:
            raise ConfigurationError("parallel models need a classical branch")
        if model.front or model.back:
            raise ConfigurationError("parallel models put all classical layers in the branch")
    elif model.parallel_classical is not None:
        raise ConfigurationError("only parallel models take a classical branch")

    for prev, nxt in zip(model.front, model.front[1:]):
        if prev.n_out != nxt.n_in:
            raise ConfigurationError("front layer widths do not chain")
    if model.front and model.front[-1].n_out != model.encoder.n_features:
        raise ConfigurationError("front output width must equal the encoder feature count")
    if model.encoder.kind == "amplitude" and model.front:
        raise ConfigurationError("amplitude encoding takes raw inputs; use an angle encoder after a front stack")
    if model.encoder.kind == "angle" and model.circuit.n_encoded != model.encoder.n_features:
        raise ConfigurationError("circuit must carry one encoded slot per feature (compose with with_angle_encoder)")
    if model.encoder.kind == "amplitude" and model.circuit.n_encoded:
        raise ConfigurationError("amplitude-encoded circuits take no encoded slots")
    if model.encoder.n_qubits != model.circuit.n_qubits:
        raise ConfigurationError("encoder and circuit disagree on qubit count")

    inactive = set(range(model.circuit.n_qubits)) - set(model.circuit.active)
    if inactive & set(model.head.qubits):
        raise ConfigurationError("head reads a pooled-away qubit")
    if model.ramp_readout and model.head.kind != "prob":
        raise ConfigurationError("ramp readout applies to probability heads only")

    for prev, nxt in zip(model.back, model.back[1:]):
        if prev.n_out != nxt.n_in:
            raise ConfigurationError("back layer widths do not chain")
    if model.back and model.back[0].n_in != model.readout_width:
        raise ConfigurationError("back input width must equal the head readout width")
    if model.level == "parallel":
        branch = model.parallel_classical
        for prev, nxt in zip(branch, branch[1:]):
            if prev.n_out != nxt.n_in:
                raise ConfigurationError("parallel branch widths do not chain")
        if branch[0].n_in != model.encoder.n_features:
            raise ConfigurationError("parallel branch must read the raw input features")
        if branch[-1].n_out != model.readout_width:
            raise ConfigurationError("parallel branch output must match the quantum readout width")


@dataclass
class ParameterLayout:
    """Slot map of the flat parameter vector."""

    segments: tuple  # of (name, start, stop)
    total: int

    def span(self, name: str) -> tuple:
        for seg_name, start, stop in self.segments:
            if seg_name == name:
                return start, stop
        raise KeyError(name)

    @property
    def quantum_span(self) -> tuple:
        return self.span("quantum")


def parameter_layout(model: HybridModel) -> ParameterLayout:
    """Deterministic flattening of every trainable quantity."""
    segments = []
    pos = 0

    def add(name, count):
        nonlocal pos
        segments.append((name, pos, pos + count))
        pos += count

    for k, layer in enumerate(model.front):
        add(f"front{k}.w", layer.weights.size)
        add(f"front{k}.b", layer.bias.size)
    add("quantum", model.circuit.n_trainable)
    for k, layer in enumerate(model.back):
        add(f"back{k}.w", layer.weights.size)
        add(f"back{k}.b", layer.bias.size)
    if model.parallel_classical is not None:
        for k, layer in enumerate(model.parallel_classical):
            add(f"parallel{k}.w", layer.weights.size)
            add(f"parallel{k}.b", layer.bias.size)
        add("aggregation", 2)
    return ParameterLayout(segments=tuple(segments), total=pos)


def initial_params(model: HybridModel, rng: np.random.Generator) -> np.ndarray:
    """Draw a start vector: classical weights uniform in +-sqrt(1/fan_in),
    quantum angles uniform in [0, 2pi), aggregation weights 0.5 each."""
    layout = parameter_layout(model)
    params = np.zeros(layout.total)

    def fill_layers(prefix, layers):
        for k, layer in enumerate(layers):
            s = np.sqrt(1.0 / layer.n_in)
            w0, w1 = layout.span(f"{prefix}{k}.w")
            b0, b1 = layout.span(f"{prefix}{k}.b")
            params[w0:w1] = rng.uniform(-s, s, w1 - w0)
            params[b0:b1] = rng.uniform(-s, s, b1 - b0)

    fill_layers("front", model.front)
    q0, q1 = layout.quantum_span
    params[q0:q1] = rng.uniform(0.0, 2.0 * np.pi, q1 - q0)
    fill_layers("back", model.back)
    if model.parallel_classical is not None:
        fill_layers("parallel", model.parallel_classical)
        a0, a1 = layout.span("aggregation")
        params[a0:a1] = 0.5
    return params


def _layer_values(layout, params, prefix, layers):
    """(W, b) arrays for a stack, read from the flat vector."""
    out = []
    for k, layer in enumerate(layers):
        w0, w1 = layout.span(f"{prefix}{k}.w")
        b0, b1 = layout.span(f"{prefix}{k}.b")
        out.append(
            (params[w0:w1].reshape(layer.weights.shape), params[b0:b1], layer.activation)
        )
    return out


def _stack_forward(values, x):
    """Run an affine stack; returns (output, pre-activations, activations)."""
    pres, acts = [], []
    for w, b, act in values:
        z = x @ w.T + b
        x = _activate(act, z)
        pres.append(z)
        acts.append(x)
    return x, pres, acts


def _ramp(width: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, width)


@dataclass
class ForwardTrace:
    """Intermediate values of one batched forward pass."""

    x: np.ndarray
    front_pre: list
    front_act: list
    features: np.ndarray
    head: np.ndarray
    readout: np.ndarray
    back_pre: list
    back_act: list
    par_pre: list = field(default_factory=list)
    par_act: list = field(default_factory=list)
    branch_classical: np.ndarray | None = None
    y: np.ndarray | None = None


def quantum_heads(
    model: HybridModel,
    quantum_params: np.ndarray,
    features: np.ndarray,
    angle_offsets=None,
) -> np.ndarray:
    """Head outputs of the quantum block for a feature batch."""
    if model.encoder.kind == "angle":
        enc = feature_angles(model.encoder, features)
        amps = run_circuit_raw(model.circuit, quantum_params, enc, None, angle_offsets)
    else:
        amps = run_circuit_raw(
            model.circuit,
            quantum_params,
            None,
            amplitude_states(model.encoder, features),
            angle_offsets,
        )
    return head_readout(amps, model.head, model.circuit.n_qubits)


def forward_trace(
    model: HybridModel,
    X: np.ndarray,
    params: np.ndarray,
    layout: ParameterLayout | None = None,
    noise_rng: np.random.Generator | None = None,
    readout_sigma: float = 0.0,
) -> ForwardTrace:
    """Batched forward pass retaining intermediates for backpropagation."""
    if layout is None:
        layout = parameter_layout(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_inputs:
        raise ShapeError(f"model expects {model.n_inputs} inputs, got {X.shape[1]}")
    params = np.asarray(params, dtype=float)
    if params.size != layout.total:
        raise ConfigurationError(f"expected {layout.total} parameters, got {params.size}")

    feats, front_pre, front_act = _stack_forward(
        _layer_values(layout, params, "front", model.front), X
    )
    q0, q1 = layout.quantum_span
    head = quantum_heads(model, params[q0:q1], feats)
    if readout_sigma > 0.0:
        if noise_rng is None:
            raise ConfigurationError("readout noise needs a random generator")
        head = head + readout_sigma * noise_rng.standard_normal(head.shape)
    readout = head @ _ramp(head.shape[1])[:, None] if model.ramp_readout else head

    trace = ForwardTrace(
        x=X,
        front_pre=front_pre,
        front_act=front_act,
        features=feats,
        head=head,
        readout=readout,
        back_pre=[],
        back_act=[],
    )
    if model.level == "parallel":
        branch, trace.par_pre, trace.par_act = _stack_forward(
            _layer_values(layout, params, "parallel", model.parallel_classical), X
        )
        trace.branch_classical = branch
        a0, _ = layout.span("aggregation")
        trace.y = params[a0] * branch + params[a0 + 1] * readout
    else:
        y, trace.back_pre, trace.back_act = _stack_forward(
            _layer_values(layout, params, "back", model.back), readout
        )
        trace.y = y
    return trace


def forward_batch(
    model: HybridModel,
    X: np.ndarray,
    params: np.ndarray,
    layout: ParameterLayout | None = None,
    noise_rng: np.random.Generator | None = None,
    readout_sigma: float = 0.0,
) -> np.ndarray:
    """Batched model evaluation; returns predictions of shape (B, n_out)."""
    return forward_trace(model, X, params, layout, noise_rng, readout_sigma).y


def model_forward(model: HybridModel, x, params) -> np.ndarray:
    """Evaluate the model on one input vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return forward_batch(model, x, params)[0]


# ---------------------------------------------------------------------------
# JSON serialization: structure plus flat weights in layout order
# ---------------------------------------------------------------------------


def _layers_to_dict(layers):
    return [
        {"rows": l.n_out, "cols": l.n_in, "activation": l.activation} for l in layers
    ]


def _layers_from_dict(entries):
    return tuple(
        DenseLayer(
            np.zeros((e["rows"], e["cols"])), np.zeros(e["rows"]), e["activation"]
        )
        for e in entries
    )


def model_to_dict(model: HybridModel, params=None, seed=None) -> dict:
    enc = model.encoder
    out = {
        "level": model.level,
        "front": _layers_to_dict(model.front),
        "quantum": {
            "encoder": {
                "kind": enc.kind,
                "n_features": enc.n_features,
                "angle_scale": enc.angle_scale,
                "feature_bounds": enc.feature_bounds.tolist(),
            },
            "circuit": circuit_to_dict(model.circuit),
            "head": {"kind": model.head.kind, "qubits": list(model.head.qubits)},
        },
        "back": _layers_to_dict(model.back),
        "ramp_readout": model.ramp_readout,
    }
    if model.parallel_classical is not None:
        out["parallel"] = _layers_to_dict(model.parallel_classical)
    if params is not None:
        out["params"] = [float(p) for p in np.asarray(params).reshape(-1)]
    if seed is not None:
        out["seed"] = seed
    return out


def model_from_dict(data: dict):
    """Rebuild (model, params) from a serialized dict; params may be None."""
    enc_d = data["quantum"]["encoder"]
    encoder = EncoderSpec(
        kind=enc_d["kind"],
        n_features=int(enc_d["n_features"]),
        angle_scale=float(enc_d["angle_scale"]),
        feature_bounds=np.asarray(enc_d["feature_bounds"], dtype=float),
    )
    head_d = data["quantum"]["head"]
    model = HybridModel(
        level=data["level"],
        encoder=encoder,
        circuit=circuit_from_dict(data["quantum"]["circuit"]),
        head=MeasurementHead(head_d["kind"], tuple(head_d["qubits"])),
        front=_layers_from_dict(data["front"]),
        back=_layers_from_dict(data["back"]),
        parallel_classical=_layers_from_dict(data["parallel"]) if "parallel" in data else None,
        ramp_readout=bool(data.get("ramp_readout", False)),
    )
    params = np.asarray(data["params"], dtype=float) if "params" in data else None
    if params is not None and params.size != parameter_layout(model).total:
        raise ConfigurationError("serialized parameter count does not match the layout")
    return model, params


def model_to_json(model: HybridModel, params=None, seed=None) -> str:
    return json.dumps(model_to_dict(model, params, seed), sort_keys=True)


def model_from_json(text: str):
    return model_from_dict(json.loads(text))
