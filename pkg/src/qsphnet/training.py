"""Losses, gradients, optimizers, and the mini-batch training loop.

Gradients are exact up to floating point: classical weights, biases, and
aggregation weights get reverse-mode backpropagation; quantum angles get the
parameter-shift rule applied at the measurement-head boundary and chained
through the classical stacks. Rotation angles (U3 components, RX/RY/RZ and
the Ising pair rotations) use the two-term rule

    dh/dt = [h(t + pi/2) - h(t - pi/2)] / 2,

controlled rotations (CRX) use the four-term rule with shift pairs at
+-pi/2 and +-3pi/2 weighted by (sqrt(2) +- 1) / (4 sqrt(2)). Shared slots
(QCNN convolution angles) are shifted one gate occurrence at a time and the
contributions summed. All shift terms of one batch are evaluated in a single
vectorized statevector pass.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConfigurationError,
    ShapeError,
    TrainingDivergenceError,
    UndefinedLossError,
)
from .network import (
    ForwardTrace,
    HybridModel,
    ParameterLayout,
    _activate_deriv,
    _layer_values,
    _ramp,
    forward_trace,
    parameter_layout,
    quantum_heads,
)
from .statevector import Gate

_SQRT2 = np.sqrt(2.0)
#: (angle offset, coefficient) pairs; gradient = sum coeff * h(theta + offset)
TWO_TERM_SHIFTS = ((np.pi / 2, 0.5), (-np.pi / 2, -0.5))
FOUR_TERM_SHIFTS = (
    (np.pi / 2, (_SQRT2 + 1) / (4 * _SQRT2)),
    (-np.pi / 2, -(_SQRT2 + 1) / (4 * _SQRT2)),
    (3 * np.pi / 2, -(_SQRT2 - 1) / (4 * _SQRT2)),
    (-3 * np.pi / 2, (_SQRT2 - 1) / (4 * _SQRT2)),
)


@dataclass
class LossSpec:
    """Weighted sum of a data term (MSE) and an optional physics term.

    ``physics_residual(X, pred) -> (B,) or (B, k)`` supplies per-sample
    residuals of governing equations; the physics term is the mean of their
    squares.
    """

    data_weight: float = 1.0
    physics_weight: float = 0.0
    physics_residual: object = None


@dataclass
class NoiseSpec:
    """Gaussian perturbation of each head expectation during training."""

    readout_sigma: float = 0.0
    seed: int = 0


@dataclass
class OptimizerState:
    kind: str = "adam"
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    step_count: int = 0

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.kind!r}")
        if self.lr < 0:
            raise ConfigurationError("learning rate must be nonnegative")


def mse_loss(pred, target) -> float:
    """Mean over samples and components of the squared difference."""
    p = np.atleast_2d(np.asarray(pred, dtype=float))
    t = np.atleast_2d(np.asarray(target, dtype=float))
    if p.size == 0 or t.size == 0:
        raise UndefinedLossError("loss of an empty sample set is undefined")
    if p.shape != t.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {t.shape}")
    d = p - t
    return float(np.mean(d * d))


def optimizer_step(state: OptimizerState, params, grads) -> np.ndarray:
    """One update; mutates the optimizer state and returns new parameters."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise ShapeError("parameter/gradient length mismatch")
    if not np.all(np.isfinite(grads)):
        raise TrainingDivergenceError("non-finite gradient")
    state.step_count += 1
    if state.kind == "sgd":
        return params - state.lr * grads
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads * grads
    m_hat = state.m / (1 - state.beta1**state.step_count)
    v_hat = state.v / (1 - state.beta2**state.step_count)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# Loss derivative and classical backpropagation
# ---------------------------------------------------------------------------


def _loss_and_dy(y: np.ndarray, Y: np.ndarray, X: np.ndarray, loss: LossSpec):
    d = y - Y
    value = loss.data_weight * float(np.mean(d * d))
    dy = loss.data_weight * 2.0 * d / d.size
    if loss.physics_weight > 0.0 and loss.physics_residual is not None:
        res = np.asarray(loss.physics_residual(X, y), dtype=float)
        if res.ndim == 1:
            res = res[:, None]
        value += loss.physics_weight * float(np.mean(res * res))
        # residual Jacobian wrt predictions, column by column (central FD)
        eps = 1e-6
        for j in range(y.shape[1]):
            bump = np.zeros_like(y)
            bump[:, j] = eps
            rp = np.asarray(loss.physics_residual(X, y + bump), dtype=float)
            rm = np.asarray(loss.physics_residual(X, y - bump), dtype=float)
            if rp.ndim == 1:
                rp, rm = rp[:, None], rm[:, None]
            dres = (rp - rm) / (2 * eps)
            dy[:, j] += loss.physics_weight * 2.0 * np.sum(res * dres, axis=1) / res.size
    return value, dy


def _stack_backward(values, pres, acts, x_in, d_out):
    """Backprop through an affine stack.

    Returns ([(gW, gb) per layer], gradient wrt the stack input).
    """
    grads = [None] * len(values)
    d = d_out
    for k in range(len(values) - 1, -1, -1):
        w, _b, act = values[k]
        dz = d * _activate_deriv(act, pres[k], acts[k])
        prev = acts[k - 1] if k > 0 else x_in
        grads[k] = (dz.T @ prev, dz.sum(axis=0))
        d = dz @ w
    return grads, d


def _write_stack_grads(grad, layout, prefix, stack_grads):
    for k, (gw, gb) in enumerate(stack_grads):
        w0, w1 = layout.span(f"{prefix}{k}.w")
        b0, b1 = layout.span(f"{prefix}{k}.b")
        grad[w0:w1] = gw.reshape(-1)
        grad[b0:b1] = gb


def _head_sensitivity(model, layout, params, trace, dy, grad):
    """Classical backprop down to the head boundary.

    Fills back/parallel/aggregation gradient entries and returns dL/dhead.
    """
    if model.level == "parallel":
        a0, _ = layout.span("aggregation")
        a = params[a0 : a0 + 2]
        par_values = _layer_values(layout, params, "parallel", model.parallel_classical)
        par_grads, _ = _stack_backward(
            par_values, trace.par_pre, trace.par_act, trace.x, a[0] * dy
        )
        _write_stack_grads(grad, layout, "parallel", par_grads)
        grad[a0] = float(np.sum(dy * trace.branch_classical))
        grad[a0 + 1] = float(np.sum(dy * trace.readout))
        d_read = a[1] * dy
    else:
        back_values = _layer_values(layout, params, "back", model.back)
        back_grads, d_read = _stack_backward(
            back_values, trace.back_pre, trace.back_act, trace.readout, dy
        )
        _write_stack_grads(grad, layout, "back", back_grads)
    if model.ramp_readout:
        return d_read @ _ramp(trace.head.shape[1])[None, :]
    return d_read


# ---------------------------------------------------------------------------
# Parameter-shift machinery
# ---------------------------------------------------------------------------


def _shift_rules(kind: Gate):
    return FOUR_TERM_SHIFTS if kind == Gate.CRX else TWO_TERM_SHIFTS


def _shift_specs_for_slots(circuit, slots, tags):
    """One spec per (occurrence, shift term): (gi, pi, delta, coeff, tag)."""
    specs = []
    for slot, tag in zip(slots, tags):
        occurrences = circuit.slot_occurrences(slot)
        if not occurrences:
            continue
        for gi, pi in occurrences:
            for delta, coeff in _shift_rules(circuit.gates[gi].kind):
                specs.append((gi, pi, delta, coeff, tag))
    return specs


def _evaluate_shift_terms(model, qparams, features, specs):
    """Head outputs for every shift spec in one batched pass: (S, B, m)."""
    n_specs = len(specs)
    B = features.shape[0]
    feats = np.tile(features, (n_specs, 1))
    offsets = {}
    for s, (gi, pi, delta, _coeff, _tag) in enumerate(specs):
        arr = offsets.get((gi, pi))
        if arr is None:
            arr = np.zeros(n_specs * B)
            offsets[(gi, pi)] = arr
        arr[s * B : (s + 1) * B] += delta
    heads = quantum_heads(model, qparams, feats, angle_offsets=offsets)
    return heads.reshape(n_specs, B, -1)


def _quantum_and_front_grads(model, layout, params, trace, d_head, grad):
    """Fill quantum-angle entries and (via the encoded-angle Jacobian)
    the front-stack entries of the gradient vector."""
    circuit = model.circuit
    q0, q1 = layout.quantum_span
    qparams = params[q0:q1]
    T = circuit.n_trainable

    slots = list(range(T))
    tags = [("train", t) for t in range(T)]
    need_front = bool(model.front)
    if need_front:
        slots += [T + e for e in range(circuit.n_encoded)]
        tags += [("enc", e) for e in range(circuit.n_encoded)]
    specs = _shift_specs_for_slots(circuit, slots, tags)
    if not specs:
        return
    heads = _evaluate_shift_terms(model, qparams, trace.features, specs)

    # contraction over batch and head components
    proj = np.einsum("sbk,bk->sb", heads, d_head)
    d_feat = np.zeros_like(trace.features) if need_front else None
    for s, (_gi, _pi, _delta, coeff, tag) in enumerate(specs):
        kind, idx = tag
        if kind == "train":
            grad[q0 + idx] += coeff * float(proj[s].sum())
        else:
            d_feat[:, idx] += coeff * proj[s]

    if need_front:
        bounds = model.encoder.feature_bounds
        slope = model.encoder.angle_scale / (bounds[:, 1] - bounds[:, 0])
        d_feat *= slope[None, :]
        front_values = _layer_values(layout, params, "front", model.front)
        front_grads, _ = _stack_backward(
            front_values, trace.front_pre, trace.front_act, trace.x, d_feat
        )
        _write_stack_grads(grad, layout, "front", front_grads)


def loss_and_gradient(
    model: HybridModel,
    params: np.ndarray,
    X: np.ndarray,
    Y: np.ndarray,
    loss: LossSpec | None = None,
    layout: ParameterLayout | None = None,
    noise_rng: np.random.Generator | None = None,
    readout_sigma: float = 0.0,
):
    """Loss and its full gradient over the flat parameter vector."""
    loss = loss or LossSpec()
    if layout is None:
        layout = parameter_layout(model)
    params = np.asarray(params, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    trace = forward_trace(model, X, params, layout, noise_rng, readout_sigma)
    if trace.y.shape != Y.shape:
        raise ShapeError(f"targets shape {Y.shape} != prediction shape {trace.y.shape}")
    value, dy = _loss_and_dy(trace.y, Y, trace.x, loss)
    grad = np.zeros(layout.total)
    d_head = _head_sensitivity(model, layout, params, trace, dy, grad)
    _quantum_and_front_grads(model, layout, params, trace, d_head, grad)
    return value, grad


def parameter_shift_grad(model, params, x_batch, targets, slot: int, loss=None) -> float:
    """Loss gradient for one quantum angle slot of the flat vector.

    ``slot`` indexes the flat parameter vector and must fall inside the
    quantum span of the layout.
    """
    layout = parameter_layout(model)
    q0, q1 = layout.quantum_span
    if not q0 <= slot < q1:
        raise ConfigurationError(
            f"slot {slot} is not a quantum angle (quantum span is [{q0}, {q1}))"
        )
    loss = loss or LossSpec()
    params = np.asarray(params, dtype=float)
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    trace = forward_trace(model, x_batch, params, layout)
    _value, dy = _loss_and_dy(trace.y, Y, trace.x, loss)
    grad = np.zeros(layout.total)
    d_head = _head_sensitivity(model, layout, params, trace, dy, grad)

    local = slot - q0
    specs = _shift_specs_for_slots(model.circuit, [local], [("train", local)])
    if not specs:
        return 0.0
    heads = _evaluate_shift_terms(model, params[q0:q1], trace.features, specs)
    proj = np.einsum("sbk,bk->s", heads, d_head)
    return float(sum(coeff * proj[s] for s, (_g, _p, _d, coeff, _t) in enumerate(specs)))


def classical_grad(model, params, x_batch, targets, loss=None) -> np.ndarray:
    """Exact reverse-mode gradient over all dense weights, biases, and
    aggregation entries; quantum-angle entries of the result are zero."""
    loss = loss or LossSpec()
    layout = parameter_layout(model)
    params = np.asarray(params, dtype=float)
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    trace = forward_trace(model, x_batch, params, layout)
    _value, dy = _loss_and_dy(trace.y, Y, trace.x, loss)
    grad = np.zeros(layout.total)
    d_head = _head_sensitivity(model, layout, params, trace, dy, grad)
    if model.front:
        # the front gradient flows through the encoded-angle Jacobian
        circuit = model.circuit
        T = circuit.n_trainable
        slots = [T + e for e in range(circuit.n_encoded)]
        tags = [("enc", e) for e in range(circuit.n_encoded)]
        specs = _shift_specs_for_slots(circuit, slots, tags)
        q0, q1 = layout.quantum_span
        heads = _evaluate_shift_terms(model, params[q0:q1], trace.features, specs)
        proj = np.einsum("sbk,bk->sb", heads, d_head)
        d_feat = np.zeros_like(trace.features)
        for s, (_gi, _pi, _delta, coeff, tag) in enumerate(specs):
            d_feat[:, tag[1]] += coeff * proj[s]
        bounds = model.encoder.feature_bounds
        d_feat *= (model.encoder.angle_scale / (bounds[:, 1] - bounds[:, 0]))[None, :]
        front_values = _layer_values(layout, params, "front", model.front)
        front_grads, _ = _stack_backward(
            front_values, trace.front_pre, trace.front_act, trace.x, d_feat
        )
        _write_stack_grads(grad, layout, "front", front_grads)
    return grad


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainTestData:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray


def split_train_test(X, y, test_fraction: float = 0.2, seed: int = 0) -> TrainTestData:
    """Shuffled train/test split with a fixed seed."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if X.shape[0] != y.shape[0]:
        raise ShapeError("feature/target counts differ")
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigurationError("test_fraction must be in [0, 1)")
    n = X.shape[0]
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    return TrainTestData(X[train_idx], y[train_idx], X[test_idx], y[test_idx])


@dataclass
class TraceRow:
    epoch: int
    train_loss: float
    test_loss: float
    wall_ms: float


@dataclass
class TrainResult:
    params: np.ndarray
    trace: list = field(default_factory=list)

    def train_losses(self) -> np.ndarray:
        return np.array([row.train_loss for row in self.trace])

    def test_losses(self) -> np.ndarray:
        return np.array([row.test_loss for row in self.trace])


def _dataset_loss(model, params, layout, X, y, loss):
    if X.shape[0] == 0:
        return float("nan")
    trace = forward_trace(model, X, params, layout)
    value, _ = _loss_and_dy(trace.y, y, trace.x, loss)
    return value


def train_model(
    model: HybridModel,
    dataset: TrainTestData,
    loss: LossSpec,
    opt: OptimizerState,
    batch_size: int,
    epochs: int,
    noise: NoiseSpec | None = None,
    params: np.ndarray | None = None,
    shuffle_seed: int = 0,
) -> TrainResult:
    """Mini-batch training; per-epoch trace rows carry full-set train/test
    losses evaluated without readout noise.

    ``params`` is the starting flat vector (see ``initial_params``).
    """
    if params is None:
        raise ConfigurationError("train_model needs an initial parameter vector")
    if batch_size < 1:
        raise ConfigurationError("batch_size must be >= 1")
    noise = noise or NoiseSpec()
    layout = parameter_layout(model)
    params = np.asarray(params, dtype=float).copy()
    rng = np.random.default_rng(shuffle_seed)
    noise_rng = np.random.default_rng(noise.seed)
    sigma = float(noise.readout_sigma)

    n = dataset.X_train.shape[0]
    if n == 0:
        raise UndefinedLossError("empty training set")
    result = TrainResult(params=params, trace=[])
    for epoch in range(int(epochs)):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            value, grad = loss_and_gradient(
                model,
                params,
                dataset.X_train[idx],
                dataset.y_train[idx],
                loss,
                layout,
                noise_rng=noise_rng if sigma > 0 else None,
                readout_sigma=sigma,
            )
            if not np.isfinite(value):
                raise TrainingDivergenceError(
                    f"non-finite loss at epoch {epoch}", trace=result.trace
                )
            try:
                params = optimizer_step(opt, params, grad)
            except TrainingDivergenceError as err:
                err.trace = result.trace
                raise
        train_loss = _dataset_loss(model, params, layout, dataset.X_train, dataset.y_train, loss)
        test_loss = _dataset_loss(model, params, layout, dataset.X_test, dataset.y_test, loss)
        if not np.isfinite(train_loss):
            raise TrainingDivergenceError(
                f"non-finite loss at epoch {epoch}", trace=result.trace
            )
        wall_ms = (time.perf_counter() - t0) * 1000.0
        result.trace.append(TraceRow(epoch, train_loss, test_loss, wall_ms))
        result.params = params
    result.params = params
    return result
