"""Scikit-learn style regressor wrapping the hybrid model and training loop."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .ansatz import AnsatzSpec, EncoderSpec, MeasurementHead, build_ansatz, with_angle_encoder
from .exceptions import ConfigurationError
from .network import (
    DenseLayer,
    HybridModel,
    forward_batch,
    initial_params,
    model_from_dict,
    model_to_dict,
    parameter_layout,
)
from .training import (
    LossSpec,
    NoiseSpec,
    OptimizerState,
    split_train_test,
    train_model,
)
from .validation import check_features, check_targets, feature_bounds_from


def _dense_stack(widths, hidden_act="tanh", out_act="tanh"):
    layers = []
    for k in range(len(widths) - 1):
        act = out_act if k == len(widths) - 2 else hidden_act
        layers.append(
            DenseLayer(np.zeros((widths[k + 1], widths[k])), np.zeros(widths[k + 1]), act)
        )
    return tuple(layers)


def design_model(
    level: str,
    family: str,
    head_kind: str,
    n_inputs: int,
    n_outputs: int,
    n_qubits: int = 4,
    n_layers: int = 2,
    front_hidden=(16,),
    back_hidden=(8,),
    encoder_kind: str = "angle",
    feature_bounds=None,
    qcnn_schedule=None,
    hidden_activation: str = "tanh",
) -> HybridModel:
    """Assemble a dimension-consistent hybrid model for a hierarchy level.

    Levels without a front stack encode the raw inputs, so the qubit count
    follows the input width for angle encoding; levels with a front stack
    compress the input to ``n_qubits`` features bounded in [-1, 1] by the
    final tanh layer.
    """
    has_front = level in ("forward", "crossed")
    if has_front:
        if encoder_kind != "angle":
            raise ConfigurationError("front stacks feed an angle encoder")
        encoder = EncoderSpec(
            "angle", n_qubits, feature_bounds=np.tile([-1.0, 1.0], (n_qubits, 1))
        )
    elif encoder_kind == "angle":
        if feature_bounds is None:
            raise ConfigurationError("angle encoding of raw inputs needs feature bounds")
        encoder = EncoderSpec("angle", n_inputs, feature_bounds=feature_bounds)
    else:
        encoder = EncoderSpec("amplitude", n_inputs)

    ansatz = build_ansatz(AnsatzSpec(family, encoder.n_qubits, n_layers, qcnn_schedule))
    circuit = with_angle_encoder(encoder, ansatz) if encoder.kind == "angle" else ansatz
    active = circuit.active

    has_back = level == "crossed"
    ramp = False
    if head_kind == "pauliz":
        head = MeasurementHead(
            "pauliz", tuple(active) if has_back else tuple(active[:n_outputs])
        )
        if not has_back and len(head.qubits) != n_outputs:
            raise ConfigurationError(
                f"need {n_outputs} active qubits for a direct pauliz readout, have {len(active)}"
            )
    else:
        head = MeasurementHead("prob", tuple(active))
        if not has_back:
            if n_outputs != 1:
                raise ConfigurationError(
                    "probability readout without a back stack fits scalar targets only"
                )
            ramp = True

    front = ()
    if has_front:
        front = _dense_stack((n_inputs, *front_hidden, n_qubits), hidden_act=hidden_activation)
    back = ()
    readout_width = 1 if ramp else head.width
    if has_back:
        back = _dense_stack((readout_width, *back_hidden, n_outputs), hidden_act=hidden_activation, out_act="identity")

    parallel = None
    if level == "parallel":
        parallel = _dense_stack(
            (n_inputs, *front_hidden, readout_width),
            hidden_act=hidden_activation, out_act="identity",
        )
        if readout_width != n_outputs:
            raise ConfigurationError(
                "parallel aggregation preserves the readout width; match it to the target width"
            )

    return HybridModel(
        level=level,
        encoder=encoder,
        circuit=circuit,
        head=head,
        front=front,
        back=back,
        parallel_classical=parallel,
        ramp_readout=ramp,
    )


class HybridRegressor(BaseEstimator, RegressorMixin):
    """Hybrid quantum-classical regressor with a scikit-learn interface.

    Targets are scaled by max(1, max|y|) before training so readouts bounded
    in [-1, 1] can reach them; predictions are returned in original units.
    ``random_state`` seeds initialization, the train/test split, batch
    shuffling, and readout noise independently.
    """

    def __init__(
        self,
        level: str = "crossed",
        family: str = "qmlp",
        head: str = "pauliz",
        n_qubits: int = 4,
        n_layers: int = 2,
        encoder: str = "angle",
        front_hidden=(16,),
        back_hidden=(8,),
        qcnn_schedule=None,
        hidden_activation: str = "tanh",
        optimizer: str = "adam",
        lr: float = 0.001,
        batch_size: int = 256,
        epochs: int = 300,
        noise_sigma: float = 0.0,
        data_weight: float = 1.0,
        physics_weight: float = 0.0,
        physics_residual=None,
        test_fraction: float = 0.2,
        random_state: int = 0,
    ):
        self.level = level
        self.family = family
        self.head = head
        self.n_qubits = n_qubits
        self.n_layers = n_layers
        self.encoder = encoder
        self.front_hidden = front_hidden
        self.back_hidden = back_hidden
        self.qcnn_schedule = qcnn_schedule
        self.hidden_activation = hidden_activation
        self.optimizer = optimizer
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.noise_sigma = noise_sigma
        self.data_weight = data_weight
        self.physics_weight = physics_weight
        self.physics_residual = physics_residual
        self.test_fraction = test_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X = check_features(X)
        y, self._y_was_1d = check_targets(y, X.shape[0])
        seeds = np.random.SeedSequence(self.random_state).spawn(4)
        init_seed, split_seed, shuffle_seed, noise_seed = seeds

        self.y_scale_ = max(1.0, float(np.max(np.abs(y))))
        self.feature_bounds_ = feature_bounds_from(X)
        self.model_ = design_model(
            self.level,
            self.family,
            self.head,
            n_inputs=X.shape[1],
            n_outputs=y.shape[1],
            n_qubits=self.n_qubits,
            n_layers=self.n_layers,
            front_hidden=tuple(self.front_hidden),
            back_hidden=tuple(self.back_hidden),
            encoder_kind=self.encoder,
            feature_bounds=self.feature_bounds_,
            qcnn_schedule=self.qcnn_schedule,
            hidden_activation=self.hidden_activation,
        )
        self.layout_ = parameter_layout(self.model_)
        params0 = initial_params(self.model_, np.random.default_rng(init_seed))
        data = split_train_test(X, y / self.y_scale_, self.test_fraction, split_seed)
        result = train_model(
            self.model_,
            data,
            LossSpec(self.data_weight, self.physics_weight, self.physics_residual),
            OptimizerState(self.optimizer, self.lr),
            batch_size=self.batch_size,
            epochs=self.epochs,
            noise=NoiseSpec(self.noise_sigma, noise_seed),
            params=params0,
            shuffle_seed=shuffle_seed,
        )
        self.params_ = result.params
        self.trace_ = result.trace
        self.n_features_in_ = X.shape[1]
        self.n_params_ = self.layout_.total
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")

    def predict(self, X):
        self._check_fitted()
        X = check_features(X)
        pred = forward_batch(self.model_, X, self.params_, self.layout_) * self.y_scale_
        return pred[:, 0] if self._y_was_1d else pred

    def final_train_loss(self) -> float:
        """Last per-epoch training MSE in scaled units (nan when epochs=0)."""
        self._check_fitted()
        return self.trace_[-1].train_loss if self.trace_ else float("nan")

    def final_test_loss(self) -> float:
        self._check_fitted()
        return self.trace_[-1].test_loss if self.trace_ else float("nan")


class FittedPredictor:
    """Deserialized (model, params, target scale) triple with a predict
    method, for running saved models without the training harness."""

    def __init__(self, model: HybridModel, params: np.ndarray, y_scale: float = 1.0,
                 squeeze: bool = True):
        self.model = model
        self.params = np.asarray(params, dtype=float)
        self.y_scale = float(y_scale)
        self.squeeze = squeeze

    def predict(self, X):
        X = check_features(X)
        pred = forward_batch(self.model, X, self.params) * self.y_scale
        return pred[:, 0] if self.squeeze and pred.shape[1] == 1 else pred

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model, self.params),
            "y_scale": self.y_scale,
            "squeeze": self.squeeze,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FittedPredictor":
        model, params = model_from_dict(data["model"])
        if params is None:
            raise ConfigurationError("serialized predictor is missing its parameters")
        return cls(model, params, data.get("y_scale", 1.0), data.get("squeeze", True))

    @classmethod
    def from_estimator(cls, est: HybridRegressor) -> "FittedPredictor":
        est._check_fitted()
        return cls(est.model_, est.params_, est.y_scale_, est._y_was_1d)
