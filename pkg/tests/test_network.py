"""Tests for the feed-forward network: forward/backward math, Adam,
training loop, checkpointing."""

import numpy as np
import pytest

from codaimp.network import AdamParams, Network, NetworkConfig, fit_new


def random_net(sizes, seed):
    """Network with standard-normal parameters (biases included)."""
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal((o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
    biases = [rng.standard_normal(o) for o in sizes[1:]]
    return Network(weights, biases)


def loss_at(net, x, y):
    pred, _ = net.forward(x)
    return (pred - y) ** 2


def finite_difference_grads(net, x, y, h=1e-5):
    """Central differences over every weight and bias."""
    grads_w, grads_b = [], []
    for arrs, grads in ((net.weights, grads_w), (net.biases, grads_b)):
        for theta in arrs:
            g = np.zeros_like(theta)
            flat = theta.ravel()
            gf = g.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                up = loss_at(net, x, y)
                flat[idx] = orig - h
                down = loss_at(net, x, y)
                flat[idx] = orig
                gf[idx] = (up - down) / (2 * h)
            grads.append(g)
    return grads_w, grads_b


class TestConfig:
    def test_full_profile_defaults(self):
        cfg = NetworkConfig()
        assert cfg.hidden_sizes == (1000, 900, 800, 700, 600, 500, 400, 300, 200, 100)
        assert cfg.epochs == 300 and cfg.patience == 25
        assert cfg.dropout_rate == 0.1 and cfg.validation_fraction == 0.2
        assert cfg.adam == AdamParams(lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8)
        assert cfg.optimizer == "adam" and cfg.loss == "mse" and cfg.metric == "mae"

    def test_desk_profile(self):
        cfg = NetworkConfig.desk_profile()
        assert cfg.hidden_sizes == (64, 48, 32) and cfg.epochs == 150

    def test_full_profile_parameter_count(self):
        # Frozen sizing check: the default widths on a 20-feature input
        # train 3,325,601 parameters.
        sizes = [20, *NetworkConfig().hidden_sizes, 1]
        count = sum(i * o + o for i, o in zip(sizes[:-1], sizes[1:]))
        assert count == 3_325_601

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hidden_sizes": ()},
            {"dropout_rate": 1.0},
            {"validation_fraction": 0.0},
            {"optimizer": "rmsprop"},
            {"loss": "mae"},
            {"epochs": 0},
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(ValueError):
            NetworkConfig(**kwargs)


class TestForward:
    def test_zero_parameters_predict_zero(self):
        net = Network(
            [np.zeros((3, 2)), np.zeros((1, 3))],
            [np.zeros(3), np.zeros(1)],
        )
        pred, _ = net.forward([1.7, -4.0])
        assert pred == 0.0

    def test_hand_checked_single_hidden_layer(self):
        # Identity hidden weights with non-negative input make relu a
        # pass-through; the output is then a plain linear combination.
        net = Network(
            [np.eye(2), np.array([[2.0, 3.0]])],
            [np.zeros(2), np.array([0.5])],
        )
        pred, _ = net.forward([1.5, 2.0])
        assert pred == pytest.approx(2.0 * 1.5 + 3.0 * 2.0 + 0.5)

    def test_zero_dropout_train_equals_infer(self):
        net = random_net([4, 6, 1], seed=0)
        x = np.random.default_rng(1).standard_normal(4)
        p_infer, _ = net.forward(x)
        p_train, _ = net.forward(x, train=True, dropout_rate=0.0)
        assert p_train == p_infer

    def test_width_mismatch(self):
        net = random_net([4, 6, 1], seed=0)
        with pytest.raises(ValueError, match="features"):
            net.forward([1.0, 2.0])

    def test_dropout_needs_rng(self):
        net = random_net([4, 6, 1], seed=0)
        with pytest.raises(ValueError, match="rng"):
            net.forward(np.zeros(4), train=True, dropout_rate=0.5)

    def test_dropout_expectation_matches_infer(self):
        # Inverted scaling keeps the expected train-mode activation equal
        # to the infer-mode one; check each unit to 3 sigma over 1e4 draws.
        rng = np.random.default_rng(42)
        a = np.abs(rng.standard_normal(50)) + 0.5
        p = 0.1
        draws = 10_000
        total = np.zeros_like(a)
        for _ in range(draws):
            mask = (rng.random(50) >= p) / (1.0 - p)
            total += a * mask
        mean = total / draws
        sigma = a * np.sqrt(p / (1.0 - p) / draws)
        assert np.all(np.abs(mean - a) <= 3.0 * sigma)


class TestBackward:
    def test_zero_loss_zero_gradients(self):
        net = Network(
            [np.zeros((3, 2)), np.zeros((1, 3))],
            [np.zeros(3), np.zeros(1)],
        )
        pred, cache = net.forward([1.0, 2.0])
        grads_w, grads_b = net.backward(cache, target=pred)
        for g in grads_w + grads_b:
            assert np.all(g == 0.0)

    def test_linear_net_hand_gradient(self):
        # No hidden layers: pred = w @ x + b, d/dw = 2 (pred - y) x.
        net = Network([np.array([[0.5, -1.0]])], [np.array([0.25])])
        x = np.array([2.0, 3.0])
        pred, cache = net.forward(x)
        assert pred == pytest.approx(0.5 * 2 - 1.0 * 3 + 0.25)
        grads_w, grads_b = net.backward(cache, target=1.0)
        factor = 2.0 * (pred - 1.0)
        np.testing.assert_allclose(grads_w[0], factor * x[None, :])
        np.testing.assert_allclose(grads_b[0], [factor])

    def test_finite_difference_oracle(self):
        checked = 0
        seed = 0
        while checked < 5:
            seed += 1
            net = random_net([4, 6, 5, 4, 1], seed=seed)
            rng = np.random.default_rng(seed + 1000)
            x = rng.standard_normal(4)
            y = float(rng.standard_normal())
            _, cache = net.forward(x)
            _, zs, _ = cache
            if min(np.abs(z).min() for z in zs) < 1e-3:
                continue  # keep pre-activations away from the relu kink
            checked += 1
            grads_w, grads_b = net.backward(cache, y)
            fd_w, fd_b = finite_difference_grads(net, x, y)
            for g, f in zip(grads_w + grads_b, fd_w + fd_b):
                rel = np.abs(g - f) / np.maximum(np.abs(f), 1e-8)
                assert rel.max() <= 1e-5

    def test_relu_blocks_gradient_of_dead_units(self):
        net = Network(
            [np.array([[1.0]]), np.array([[1.0]])],
            [np.array([-5.0]), np.array([0.0])],
        )
        _, cache = net.forward([1.0])  # pre-activation -4 -> dead
        grads_w, _ = net.backward(cache, target=1.0)
        assert np.all(grads_w[0] == 0.0)


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        net = random_net([2, 3, 1], seed=3)
        before = [w.copy() for w in net.weights]
        zeros_w = [np.zeros_like(w) for w in net.weights]
        zeros_b = [np.zeros_like(b) for b in net.biases]
        net.adam_step(zeros_w, zeros_b, 1, AdamParams())
        for w, b in zip(net.weights, before):
            assert np.array_equal(w, b)

    def test_moments_decay_toward_zero(self):
        net = Network([np.array([[1.0]])], [np.array([0.0])])
        g_w = [np.array([[4.0]])]
        g_b = [np.array([0.0])]
        net.adam_step(g_w, g_b, 1, AdamParams())
        m_after_one = abs(net.m_w[0][0, 0])
        for _ in range(5):
            net.adam_step([np.zeros((1, 1))], [np.zeros(1)], 1, AdamParams())
        assert abs(net.m_w[0][0, 0]) < m_after_one

    @pytest.mark.parametrize("g", [3.7, -0.2])
    def test_first_step_is_signed_learning_rate(self, g):
        net = Network([np.array([[1.0]])], [np.array([0.0])])
        params = AdamParams()
        net.adam_step([np.array([[g]])], [np.array([0.0])], 1, params)
        delta = net.weights[0][0, 0] - 1.0
        # First bias-corrected step: -lr * g / (|g| + eps).
        assert delta == pytest.approx(-params.lr * np.sign(g), rel=1e-6)

    def test_constant_gradient_steps_shrink(self):
        net = Network([np.array([[1.0]])], [np.array([0.0])])
        params = AdamParams()
        g = [np.array([[2.0]])]
        gb = [np.array([0.0])]
        w0 = net.weights[0][0, 0]
        net.adam_step(g, gb, 1, params)
        w1 = net.weights[0][0, 0]
        net.adam_step(g, gb, 1, params)
        w2 = net.weights[0][0, 0]
        assert abs(w2 - w1) <= abs(w1 - w0) * (1 + 1e-12)

    def test_batch_count_scales_gradients(self):
        a = Network([np.array([[1.0]])], [np.array([0.0])])
        b = Network([np.array([[1.0]])], [np.array([0.0])])
        a.adam_step([np.array([[8.0]])], [np.array([0.0])], 4, AdamParams())
        b.adam_step([np.array([[2.0]])], [np.array([0.0])], 1, AdamParams())
        assert a.weights[0][0, 0] == b.weights[0][0, 0]


class TestFit:
    def test_constant_target_learnable(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((100, 3))
        c = 5.0
        cfg = NetworkConfig(
            hidden_sizes=(8,), epochs=50, rng_seed=2, dropout_rate=0.0,
            adam=AdamParams(lr=0.01),
        )
        net, report = fit_new(X, np.full(100, c), cfg)
        assert min(report.val_mae) <= 0.01 * abs(c) + 0.01
        assert report.train_loss[-1] < report.train_loss[0]

    def test_patience_one_stops_quickly(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((60, 3))
        y = rng.standard_normal(60)
        cfg = NetworkConfig(
            hidden_sizes=(8,), epochs=40, rng_seed=3, patience=1,
            adam=AdamParams(lr=50.0),  # diverges, so the loss worsens at once
        )
        _, report = fit_new(X, y, cfg)
        assert report.stopped_epoch <= report.best_epoch + 2
        assert report.stopped_epoch < 40

    def test_same_seed_bitwise_deterministic(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((50, 4))
        y = rng.standard_normal(50)
        cfg = NetworkConfig.desk_profile(epochs=8, rng_seed=11)
        net_a, rep_a = fit_new(X, y, cfg)
        net_b, rep_b = fit_new(X, y, cfg)
        for wa, wb in zip(net_a.weights, net_b.weights):
            assert np.array_equal(wa, wb)
        assert rep_a.train_loss == rep_b.train_loss
        assert rep_a.val_loss == rep_b.val_loss
        assert (rep_a.best_epoch, rep_a.stopped_epoch) == (rep_b.best_epoch, rep_b.stopped_epoch)

    def test_report_invariants(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 2))
        y = X[:, 0] * 2.0
        cfg = NetworkConfig(hidden_sizes=(6,), epochs=15, rng_seed=0)
        _, report = fit_new(X, y, cfg)
        assert report.stopped_epoch <= 15
        assert 1 <= report.best_epoch <= report.stopped_epoch
        assert len(report.train_loss) == report.stopped_epoch

    def test_too_few_rows_rejected(self):
        cfg = NetworkConfig(hidden_sizes=(4,), epochs=5)
        with pytest.raises(ValueError, match="at least 5"):
            fit_new(np.ones((4, 2)), np.ones(4), cfg)

    def test_tiny_validation_split_falls_back_to_train_loss(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((6, 2))
        y = rng.standard_normal(6)
        cfg = NetworkConfig(
            hidden_sizes=(4,), epochs=5, rng_seed=1, validation_fraction=0.01
        )
        _, report = fit_new(X, y, cfg)
        assert any("training loss" in w for w in report.warnings)
        assert np.isnan(report.val_loss[0])

    def test_sgd_optimizer_runs(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 2))
        y = X[:, 0]
        cfg = NetworkConfig(
            hidden_sizes=(6,), epochs=20, rng_seed=0, optimizer="sgd",
            dropout_rate=0.0, adam=AdamParams(lr=0.01),
        )
        _, report = fit_new(X, y, cfg)
        assert report.train_loss[-1] < report.train_loss[0]


class TestPredict:
    def test_empty_input(self):
        net = random_net([3, 4, 1], seed=6)
        assert net.predict(np.empty((0, 3))).shape == (0,)

    def test_single_row_matches_forward(self):
        net = random_net([3, 4, 1], seed=7)
        x = np.random.default_rng(8).standard_normal(3)
        pred, _ = net.forward(x)
        assert net.predict(x)[0] == pytest.approx(pred, rel=1e-12)

    def test_identical_rows_identical_predictions(self):
        net = random_net([3, 5, 1], seed=9)
        X = np.tile(np.array([[0.3, -1.0, 2.0]]), (6, 1))
        preds = net.predict(X)
        assert np.all(preds == preds[0])

    def test_fitted_standardization_roundtrip(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((50, 2)) * 10 + 100
        y = 3.0 * X[:, 0] + 7.0
        cfg = NetworkConfig(
            hidden_sizes=(16,), epochs=120, rng_seed=1, dropout_rate=0.0,
            adam=AdamParams(lr=0.01),
        )
        net, _ = fit_new(X, y, cfg)
        pred = net.predict(X)
        assert np.mean(np.abs(pred - y)) / np.mean(np.abs(y)) < 0.05


class TestCheckpoint:
    def test_roundtrip_unfitted(self, tmp_path):
        net = random_net([3, 5, 1], seed=11)
        path = tmp_path / "net.npz"
        net.save(path)
        loaded = Network.load(path)
        X = np.random.default_rng(0).standard_normal((4, 3))
        np.testing.assert_array_equal(loaded.predict(X), net.predict(X))

    def test_roundtrip_fitted_keeps_scalers(self, tmp_path):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((30, 2)) + 5
        y = X[:, 0]
        cfg = NetworkConfig(hidden_sizes=(4,), epochs=5, rng_seed=0)
        net, _ = fit_new(X, y, cfg)
        path = tmp_path / "net.npz"
        net.save(path)
        loaded = Network.load(path)
        np.testing.assert_array_equal(loaded.predict(X), net.predict(X))

    def test_unsupported_version_rejected(self, tmp_path):
        path = tmp_path / "net.npz"
        np.savez(path, version=99, sizes=np.array([2, 1]), W0=np.ones((1, 2)), b0=np.zeros(1))
        with pytest.raises(ValueError, match="version"):
            Network.load(path)


class TestShapeValidation:
    def test_mismatched_chain_rejected(self):
        with pytest.raises(ValueError, match="layer 1"):
            Network([np.ones((4, 2)), np.ones((1, 3))], [np.zeros(4), np.zeros(1)])

    def test_output_must_be_single_neuron(self):
        with pytest.raises(ValueError, match="one neuron"):
            Network([np.ones((2, 3))], [np.zeros(2)])
