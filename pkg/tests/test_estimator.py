import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qsphnet.estimator import HybridRegressor, design_model
from qsphnet.exceptions import ConfigurationError


def toy_problem(n=40, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 2))
    y = 0.6 * np.sin(3 * X[:, 0]) * np.cos(2 * X[:, 1])
    return X, y


FAST = dict(n_qubits=2, n_layers=1, front_hidden=(4,), back_hidden=(3,),
            batch_size=16, epochs=5, lr=0.05)


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = HybridRegressor(level="forward", lr=0.02, random_state=3)
        params = est.get_params()
        assert params["level"] == "forward"
        assert params["lr"] == 0.02
        clone_est = clone(est)
        assert clone_est.get_params() == params

    def test_set_params(self):
        est = HybridRegressor()
        est.set_params(family="qcnn", epochs=7)
        assert est.family == "qcnn"
        assert est.epochs == 7

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            HybridRegressor().predict(np.zeros((2, 2)))


class TestFitPredict:
    def test_shapes_and_determinism(self):
        X, y = toy_problem()
        est = HybridRegressor(random_state=5, **FAST)
        est.fit(X, y)
        pred = est.predict(X)
        assert pred.shape == (40,)
        again = HybridRegressor(random_state=5, **FAST).fit(X, y)
        assert np.array_equal(pred, again.predict(X))

    def test_different_seeds_differ(self):
        X, y = toy_problem()
        a = HybridRegressor(random_state=1, **FAST).fit(X, y).predict(X)
        b = HybridRegressor(random_state=2, **FAST).fit(X, y).predict(X)
        assert not np.array_equal(a, b)

    def test_training_reduces_loss(self):
        X, y = toy_problem(n=60)
        est = HybridRegressor(random_state=0, n_qubits=2, n_layers=1,
                              front_hidden=(6,), back_hidden=(4,),
                              batch_size=12, epochs=40, lr=0.05)
        est.fit(X, y)
        losses = [row.train_loss for row in est.trace_]
        assert losses[-1] < 0.5 * losses[0]

    def test_target_scaling_for_large_targets(self):
        from qsphnet.network import forward_batch

        X, y = toy_problem()
        y_big = 10.0 * y
        est = HybridRegressor(random_state=0, **FAST).fit(X, y_big)
        assert est.y_scale_ == pytest.approx(np.max(np.abs(y_big)))
        # predict undoes the internal target scaling
        raw = forward_batch(est.model_, X, est.params_)[:, 0]
        assert np.array_equal(est.predict(X), raw * est.y_scale_)

    def test_small_targets_stay_unscaled(self):
        X, y = toy_problem()
        est = HybridRegressor(random_state=0, **FAST).fit(X, 0.3 * y)
        assert est.y_scale_ == 1.0

    def test_2d_targets(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(0, 1, (30, 2))
        Y = np.stack([X[:, 0], -X[:, 1]], axis=1)
        est = HybridRegressor(random_state=0, **FAST).fit(X, Y)
        assert est.predict(X).shape == (30, 2)

    @pytest.mark.parametrize("level", ["single", "forward", "crossed", "parallel"])
    @pytest.mark.parametrize("head", ["pauliz", "prob"])
    def test_levels_and_heads_smoke(self, level, head):
        X, y = toy_problem(n=20)
        est = HybridRegressor(level=level, head=head, random_state=0,
                              n_qubits=2, n_layers=1, front_hidden=(3,),
                              back_hidden=(2,), batch_size=8, epochs=2, lr=0.05)
        est.fit(X, y)
        assert est.predict(X).shape == (20,)

    def test_qcnn_family(self):
        X, y = toy_problem(n=20)
        est = HybridRegressor(level="crossed", family="qcnn", random_state=0,
                              n_qubits=4, n_layers=1, front_hidden=(3,),
                              back_hidden=(2,), batch_size=8, epochs=2, lr=0.05)
        est.fit(X, y)
        assert est.predict(X).shape == (20,)

    def test_amplitude_encoder_single(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(0.1, 1.0, (20, 4))  # 4 features -> 2 qubits
        y = X[:, 0] - X[:, 2]
        est = HybridRegressor(level="single", encoder="amplitude", random_state=0,
                              n_layers=1, batch_size=8, epochs=2, lr=0.05)
        est.fit(X, y)
        assert est.model_.circuit.n_qubits == 2
        assert est.predict(X).shape == (20,)

    def test_epochs_zero_keeps_initial_params(self):
        X, y = toy_problem(n=20)
        est = HybridRegressor(random_state=0, **{**FAST, "epochs": 0}).fit(X, y)
        assert est.trace_ == []
        assert np.isnan(est.final_train_loss())


class TestDesignModel:
    def test_single_angle_uses_input_width(self):
        model = design_model(
            "single", "qmlp", "pauliz", n_inputs=3, n_outputs=1,
            n_qubits=7, feature_bounds=np.tile([0.0, 1.0], (3, 1)),
        )
        assert model.circuit.n_qubits == 3

    def test_prob_head_without_back_needs_scalar_target(self):
        with pytest.raises(ConfigurationError):
            design_model(
                "forward", "qmlp", "prob", n_inputs=2, n_outputs=2, n_qubits=2
            )

    def test_pauliz_direct_readout_needs_enough_qubits(self):
        with pytest.raises(ConfigurationError):
            design_model(
                "single", "qmlp", "pauliz", n_inputs=2, n_outputs=3, n_qubits=2,
                feature_bounds=np.tile([0.0, 1.0], (2, 1)),
            )
