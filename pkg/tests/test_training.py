import numpy as np
import pytest

from oracles import finite_difference

from qsphnet.ansatz import EncoderSpec, MeasurementHead
from qsphnet.estimator import design_model
from qsphnet.exceptions import (
    ConfigurationError,
    ShapeError,
    TrainingDivergenceError,
    UndefinedLossError,
)
from qsphnet.network import (
    HybridModel,
    forward_batch,
    initial_params,
    parameter_layout,
)
from qsphnet.statevector import CircuitSpec, Gate, GateOp
from qsphnet.training import (
    LossSpec,
    NoiseSpec,
    OptimizerState,
    classical_grad,
    loss_and_gradient,
    mse_loss,
    optimizer_step,
    parameter_shift_grad,
    split_train_test,
    train_model,
    TrainTestData,
)


def grads_close(got, want, rel=1e-5, floor=1e-7):
    """|got - want| <= max(rel * |want|, floor) elementwise."""
    got, want = np.asarray(got), np.asarray(want)
    return np.all(np.abs(got - want) <= np.maximum(rel * np.abs(want), floor))


def random_model(rng):
    """Small random hybrid model plus a consistent data batch."""
    level = ["single", "forward", "crossed", "parallel"][rng.integers(4)]
    family = ["qnn", "qmlp", "qcnn"][rng.integers(3)]
    head = ["pauliz", "prob"][rng.integers(2)]
    n_qubits = int(rng.integers(2, 4))
    if family == "qcnn":
        n_qubits = 2  # dense-only circuit keeps these models small
    n_in = int(rng.integers(2, 4))
    if level == "crossed":
        n_out = int(rng.integers(1, 3))
    elif head == "prob":
        n_out = 1
    else:
        n_out = 1 if level == "forward" else int(rng.integers(1, min(n_in, n_qubits) + 1))
    if level in ("single", "parallel"):
        n_in_model = n_in if head == "pauliz" and n_out <= n_in else max(n_in, n_out)
        n_in = n_in_model
    bounds = np.tile([0.0, 1.0], (n_in, 1))
    model = design_model(
        level, family, head, n_in, n_out, n_qubits=n_qubits,
        n_layers=int(rng.integers(1, 3)), front_hidden=(3,), back_hidden=(3,),
        feature_bounds=bounds,
    )
    params = initial_params(model, rng)
    X = rng.uniform(0, 1, (int(rng.integers(2, 5)), n_in))
    Y = rng.uniform(-1, 1, (X.shape[0], n_out))
    return model, params, X, Y


class TestMseLoss:
    def test_zero_for_equal(self):
        assert mse_loss([[1.0, 2.0]], [[1.0, 2.0]]) == 0.0

    def test_scalar_case(self):
        assert mse_loss([1.0], [0.0]) == 1.0

    def test_mean_over_components(self):
        assert mse_loss([[1.0, 1.0]], [[0.0, 2.0]]) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(UndefinedLossError):
            mse_loss(np.zeros((0, 1)), np.zeros((0, 1)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mse_loss([[1.0, 2.0]], [[1.0]])


class TestOptimizer:
    def test_sgd_step(self):
        state = OptimizerState("sgd", lr=0.1)
        out = optimizer_step(state, np.array([1.0]), np.array([1.0]))
        assert out[0] == pytest.approx(0.9)

    def test_adam_first_step_magnitude(self):
        state = OptimizerState("adam", lr=0.05)
        out = optimizer_step(state, np.zeros(3), np.ones(3))
        assert np.allclose(np.abs(out), 0.05, rtol=1e-6)

    def test_zero_gradient_keeps_params(self):
        sgd = OptimizerState("sgd", lr=0.3)
        p = np.array([0.5, -0.25])
        assert np.array_equal(optimizer_step(sgd, p, np.zeros(2)), p)
        adam = OptimizerState("adam", lr=0.3)
        out = optimizer_step(adam, p, np.zeros(2))
        assert np.max(np.abs(out - p)) < 0.3 * 1e-7

    def test_nonfinite_gradient_raises(self):
        with pytest.raises(TrainingDivergenceError):
            optimizer_step(OptimizerState("sgd"), np.zeros(2), np.array([1.0, np.nan]))

    def test_sgd_monotone_on_least_squares(self):
        """Convex quadratic: SGD decreases monotonically below the stability lr."""
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        n = X.shape[0]
        lam_max = np.linalg.eigvalsh(2 * X.T @ X / n).max()
        state = OptimizerState("sgd", lr=0.9 / lam_max)
        w = rng.normal(size=3)
        losses = []
        for _ in range(30):
            r = X @ w - y
            losses.append(float(np.mean(r**2)))
            w = optimizer_step(state, w, 2 * X.T @ r / n)
        assert all(b < a for a, b in zip(losses, losses[1:]))


def single_ry_model(bounds=(0.0, 1.0)):
    """One-qubit model: RY(encoded) then RY(trainable theta), <Z> readout."""
    encoder = EncoderSpec("angle", 1, feature_bounds=[bounds])
    circuit = CircuitSpec(
        1,
        (GateOp(Gate.RY, (0,), (1,)), GateOp(Gate.RY, (0,), (0,))),
        n_trainable=1,
        n_encoded=1,
    )
    return HybridModel(
        level="single", encoder=encoder, circuit=circuit,
        head=MeasurementHead("pauliz", (0,)),
    )


class TestParameterShift:
    def test_single_ry_analytic(self):
        # prediction = cos(theta); L = (cos(theta) - c)^2
        model = single_ry_model()
        X = np.zeros((1, 1))
        c = 0.5
        Y = np.array([[c]])
        for theta in (0.0, np.pi / 2, 1.1, -2.3):
            got = parameter_shift_grad(model, np.array([theta]), X, Y, slot=0)
            want = 2 * (np.cos(theta) - c) * (-np.sin(theta))
            assert got == pytest.approx(want, abs=1e-12)

    def test_head_derivative_zero_at_origin(self):
        model = single_ry_model()
        X = np.zeros((1, 1))
        got = parameter_shift_grad(model, np.array([0.0]), X, np.array([[0.0]]), slot=0)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_non_quantum_slot_rejected(self):
        model = design_model(
            "crossed", "qmlp", "pauliz", 2, 1, n_qubits=2, n_layers=1,
            front_hidden=(3,), back_hidden=(2,),
        )
        layout = parameter_layout(model)
        params = initial_params(model, np.random.default_rng(0))
        X = np.zeros((1, 2))
        Y = np.zeros((1, 1))
        with pytest.raises(ConfigurationError):
            parameter_shift_grad(model, params, X, Y, slot=0)
        with pytest.raises(ConfigurationError):
            parameter_shift_grad(model, params, X, Y, slot=layout.total - 1)

    def test_crx_four_term_matches_fd(self):
        """CRX angles need the four-term rule; two-term would be wrong."""
        rng = np.random.default_rng(5)
        model = design_model(
            "single", "qmlp", "pauliz", 2, 2, n_qubits=2, n_layers=1,
            feature_bounds=np.tile([0.0, 1.0], (2, 1)),
        )
        layout = parameter_layout(model)
        q0, q1 = layout.quantum_span
        params = initial_params(model, rng)
        X = rng.uniform(0, 1, (3, 2))
        Y = rng.uniform(-1, 1, (3, 2))

        def loss_of(p):
            return mse_loss(forward_batch(model, X, p), Y)

        fd = finite_difference(loss_of, params)
        crx_slots = [
            s for s in range(q0, q1)
            if any(
                model.circuit.gates[gi].kind == Gate.CRX
                for gi, _ in model.circuit.slot_occurrences(s - q0)
            )
        ]
        assert crx_slots
        for s in crx_slots:
            got = parameter_shift_grad(model, params, X, Y, slot=s)
            assert got == pytest.approx(fd[s], rel=1e-5, abs=1e-7)


class TestClassicalGrad:
    def test_zero_prediction_zero_bias_gradient(self):
        model = design_model(
            "crossed", "qmlp", "pauliz", 2, 1, n_qubits=2, n_layers=1,
            front_hidden=(3,), back_hidden=(2,),
        )
        layout = parameter_layout(model)
        params = initial_params(model, np.random.default_rng(1))
        # zero back weights and biases force prediction 0
        for name in ("back0.w", "back0.b", "back1.w", "back1.b"):
            a, b = layout.span(name)
            params[a:b] = 0.0
        X = np.random.default_rng(2).uniform(0, 1, (4, 2))
        grad = classical_grad(model, params, X, np.zeros((4, 1)))
        a, b = layout.span("back1.b")
        assert np.allclose(grad[a:b], 0.0, atol=1e-15)

    def test_output_layer_weight_gradient_analytic(self):
        # back layer y = w h + b with w=2, b=0, target 0: dL/dw = 2 y h
        model = design_model(
            "crossed", "qmlp", "pauliz", 1, 1, n_qubits=2, n_layers=1,
            front_hidden=(), back_hidden=(),
        )
        layout = parameter_layout(model)
        params = initial_params(model, np.random.default_rng(3))
        from qsphnet.network import forward_trace

        X = np.array([[0.4]])
        trace = forward_trace(model, X, params, layout)
        h = trace.readout
        w0, w1 = layout.span("back0.w")
        w = params[w0:w1]
        y = trace.y[0, 0]
        grad = classical_grad(model, params, X, np.zeros((1, 1)))
        want = 2 * y * h[0]
        assert np.allclose(grad[w0:w1], want, atol=1e-12)


class TestGradientAgainstFiniteDifferences:
    @pytest.mark.parametrize("seed", range(12))
    def test_full_gradient_matches_fd(self, seed):
        rng = np.random.default_rng(1000 + seed)
        model, params, X, Y = random_model(rng)
        loss = LossSpec()
        value, grad = loss_and_gradient(model, params, X, Y, loss)

        def loss_of(p):
            return mse_loss(forward_batch(model, X, p), Y)

        assert value == pytest.approx(loss_of(params), rel=1e-12)
        fd = finite_difference(loss_of, params)
        assert grads_close(grad, fd)

    def test_physics_term_gradient(self):
        rng = np.random.default_rng(77)
        model, params, X, Y = random_model(rng)

        def residual(Xb, pred):
            return (pred**2).sum(axis=1) - 0.3

        loss = LossSpec(data_weight=1.0, physics_weight=0.5, physics_residual=residual)
        value, grad = loss_and_gradient(model, params, X, Y, loss)

        def loss_of(p):
            pred = forward_batch(model, X, p)
            res = residual(X, pred)
            return mse_loss(pred, Y) + 0.5 * float(np.mean(res**2))

        assert value == pytest.approx(loss_of(params), rel=1e-10)
        fd = finite_difference(loss_of, params)
        assert grads_close(grad, fd, rel=1e-4, floor=1e-6)


def tiny_dataset(rng, n=24, n_in=2):
    X = rng.uniform(0, 1, (n, n_in))
    y = (0.5 * np.sin(2 * X[:, 0]) + 0.25 * X[:, 1])[:, None]
    return split_train_test(X, y, 0.25, seed=0)


def tiny_model(rng):
    model = design_model(
        "crossed", "qmlp", "pauliz", 2, 1, n_qubits=2, n_layers=1,
        front_hidden=(3,), back_hidden=(2,),
    )
    return model, initial_params(model, rng)


class TestTrainModel:
    def test_zero_epochs(self):
        rng = np.random.default_rng(0)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)
        result = train_model(
            model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 0, params=params
        )
        assert result.trace == []
        assert np.array_equal(result.params, params)

    def test_zero_lr_constant_losses(self):
        rng = np.random.default_rng(1)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)
        result = train_model(
            model, data, LossSpec(), OptimizerState("sgd", 0.0), 8, 4, params=params
        )
        losses = result.train_losses()
        assert np.all(losses == losses[0])
        assert np.array_equal(result.params, params)

    def test_bit_reproducible(self):
        rng = np.random.default_rng(2)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)

        def run():
            return train_model(
                model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 3,
                noise=NoiseSpec(0.0, 7), params=params.copy(), shuffle_seed=11,
            )

        a, b = run(), run()
        assert np.array_equal(a.params, b.params)
        assert a.trace[-1].train_loss == b.trace[-1].train_loss

    def test_zero_sigma_matches_no_noise_bitwise(self):
        rng = np.random.default_rng(3)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)
        base = train_model(
            model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 3,
            params=params.copy(), shuffle_seed=5,
        )
        with_zero = train_model(
            model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 3,
            noise=NoiseSpec(0.0, 99), params=params.copy(), shuffle_seed=5,
        )
        assert np.array_equal(base.params, with_zero.params)

    def test_zero_physics_weight_matches_pure_mse_bitwise(self):
        rng = np.random.default_rng(4)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)

        def residual(Xb, pred):
            return pred.sum(axis=1)

        pure = train_model(
            model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 3,
            params=params.copy(), shuffle_seed=5,
        )
        weighted = train_model(
            model, data, LossSpec(1.0, 0.0, residual), OptimizerState("adam", 0.01),
            8, 3, params=params.copy(), shuffle_seed=5,
        )
        assert np.array_equal(pure.params, weighted.params)

    def test_noise_changes_training_but_stays_seeded(self):
        rng = np.random.default_rng(5)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)

        def run(seed):
            return train_model(
                model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 3,
                noise=NoiseSpec(0.05, seed), params=params.copy(), shuffle_seed=5,
            )

        base = train_model(
            model, data, LossSpec(), OptimizerState("adam", 0.01), 8, 3,
            params=params.copy(), shuffle_seed=5,
        )
        assert not np.array_equal(run(1).params, base.params)
        assert np.array_equal(run(1).params, run(1).params)

    def test_divergence_carries_trace(self):
        rng = np.random.default_rng(6)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng)

        calls = {"n": 0}

        def exploding(Xb, pred):
            calls["n"] += 1
            if calls["n"] > 4:
                return np.full(pred.shape[0], np.nan)
            return np.zeros(pred.shape[0])

        with pytest.raises(TrainingDivergenceError) as err:
            train_model(
                model, data, LossSpec(1.0, 1.0, exploding), OptimizerState("sgd", 0.01),
                100, 5, params=params,
            )
        assert isinstance(err.value.trace, list)

    def test_loss_decreases_on_smooth_target(self):
        rng = np.random.default_rng(7)
        model, params = tiny_model(rng)
        data = tiny_dataset(rng, n=40)
        result = train_model(
            model, data, LossSpec(), OptimizerState("adam", 0.05), 10, 30, params=params
        )
        losses = result.train_losses()
        assert losses[-1] < 0.5 * losses[0]


class TestSplit:
    def test_fraction_and_determinism(self):
        X = np.arange(20, dtype=float)[:, None]
        y = np.arange(20, dtype=float)
        a = split_train_test(X, y, 0.2, seed=3)
        b = split_train_test(X, y, 0.2, seed=3)
        assert a.X_test.shape == (4, 1)
        assert a.X_train.shape == (16, 1)
        assert np.array_equal(a.X_train, b.X_train)
        together = np.sort(np.concatenate([a.X_train[:, 0], a.X_test[:, 0]]))
        assert np.array_equal(together, X[:, 0])
