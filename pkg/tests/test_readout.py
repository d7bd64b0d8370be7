import numpy as np
import pytest

from memrc import kernels
from memrc.readout import (ReadoutWeights, TrainConfig, confusion, evaluate, init_weights,
                           load_checkpoint, predict, sample_gradient, sample_loss,
                           save_checkpoint, softmax, train)


def toy(n=200, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.uniform(0, 0.4, (n, 3))
    X[np.arange(n), y] += 0.6
    return X, y


class TestInit:
    def test_deterministic(self):
        assert np.array_equal(init_weights(581, 10, 3).w, init_weights(581, 10, 3).w)

    def test_seed_matters(self):
        assert not np.array_equal(init_weights(20, 10, 1).w, init_weights(20, 10, 2).w)

    def test_bounds_and_shape(self):
        w = init_weights(664, 10, 0).w
        assert w.shape == (664, 10) and np.abs(w).max() <= 0.01

    def test_bias_row(self):
        assert init_weights(5, 3, bias=True).w.shape == (6, 3)

    def test_empty(self):
        with pytest.raises(ValueError):
            init_weights(0, 10)


class TestTrain:
    def test_zero_epochs(self):
        X, y = toy()
        w0 = init_weights(3, 2)
        assert np.array_equal(train(X, y, w0, TrainConfig(epochs=0)).w, w0.w)

    def test_input_not_mutated(self):
        X, y = toy()
        w0 = init_weights(3, 2)
        keep = w0.w.copy()
        train(X, y, w0, TrainConfig(epochs=2))
        assert np.array_equal(w0.w, keep)

    def test_separable_toy(self):
        X, y = toy()
        w = train(X, y, init_weights(3, 2), TrainConfig(epochs=50, learning_rate=0.1))
        assert evaluate(w, X, y) == 1.0

    def test_loss_decreases(self):
        X, y = toy(seed=1)
        losses = []
        train(X, y, init_weights(3, 2), TrainConfig(epochs=20, learning_rate=0.05),
              on_epoch=lambda e, l: losses.append(l))
        assert losses[-1] < losses[0] and len(losses) == 20

    def test_single_step_rule(self):
        f = np.array([[0.5, 0.0, 1.0]])
        w0 = init_weights(3, 4, 9)
        w = train(f, [2], w0, TrainConfig(epochs=1, learning_rate=0.02))
        assert np.allclose(w.w, w0.w - 0.02 * sample_gradient(w0.w, f[0], 2), rtol=0, atol=1e-15)

    def test_seeded_order(self):
        X, y = toy()
        cfg = TrainConfig(epochs=3, seed=5)
        a = train(X, y, init_weights(3, 2), cfg).w
        assert np.array_equal(a, train(X, y, init_weights(3, 2), cfg).w)
        assert not np.array_equal(a, train(X, y, init_weights(3, 2), TrainConfig(epochs=3, seed=6)).w)

    def test_bias_mismatch(self):
        X, y = toy()
        with pytest.raises(ValueError):
            train(X, y, init_weights(3, 2), TrainConfig(bias=True))

    @pytest.mark.parametrize("X, y", [(np.zeros((3, 4)), [0, 0, 0]), (np.zeros((3, 3)), [0, 5, 0]),
                                      (np.zeros((0, 3)), [])])
    def test_shape_errors(self, X, y):
        with pytest.raises(ValueError):
            train(X, y, init_weights(3, 2), TrainConfig(epochs=1))

    @pytest.mark.parametrize("name", list(kernels.backends()))
    def test_backends_agree(self, name):
        X, y = toy(60)
        w = init_weights(3, 2).w
        ref = w.copy()
        order = np.random.default_rng(0).permutation(60).astype(np.int64)
        got = w.copy()
        loss = kernels.backends()[name].sgd_epoch(got, X, y.astype(np.int64), order, 0.02, True)
        expect = 0.0
        for i in order:
            expect += sample_loss(ref, X[i], y[i])
            ref -= 0.02 * sample_gradient(ref, X[i], y[i])
        assert np.allclose(got, ref, rtol=1e-13, atol=1e-16)
        assert loss == pytest.approx(expect, rel=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    w = rng.normal(0, 0.5, (6, 4))
    f = rng.uniform(0, 1, 6)
    g = sample_gradient(w, f, 1)
    num = np.empty_like(w)
    h = 1e-6
    for idx in np.ndindex(w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += h
        wm[idx] -= h
        num[idx] = (sample_loss(wp, f, 1) - sample_loss(wm, f, 1)) / (2 * h)
    assert np.allclose(num, g, rtol=1e-6, atol=0)


class TestInference:
    def test_zero_weights_predict_class_zero(self):
        w = ReadoutWeights(np.zeros((5, 10)))
        assert predict(w, np.ones(5)) == 0

    def test_chance_on_random_labels(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, (20_000, 8))
        y = rng.integers(0, 10, 20_000)
        acc = evaluate(init_weights(8, 10, 1), X, y)
        assert acc == pytest.approx(0.1, abs=0.01)

    def test_softmax_rows(self):
        p = softmax(np.array([[1000.0, 0.0], [1.0, 1.0]]))
        assert np.allclose(p.sum(axis=1), 1) and p[1, 0] == 0.5

    def test_confusion_counts(self):
        X, y = toy()
        w = train(X, y, init_weights(3, 2), TrainConfig(epochs=30, learning_rate=0.1))
        c = confusion(w, X, y)
        assert c.sum() == len(y) and np.trace(c) / len(y) == evaluate(w, X, y)


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        w = init_weights(581, 10, 2)
        save_checkpoint(tmp_path / "w.ckpt", w, 2, "abc")
        back, header = load_checkpoint(tmp_path / "w.ckpt")
        assert np.array_equal(back.w, w.w) and header["seed"] == 2 and header["config_hash"] == "abc"

    def test_truncated(self, tmp_path):
        p = tmp_path / "w.ckpt"
        save_checkpoint(p, init_weights(4, 3), 0, "x")
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(ValueError):
            load_checkpoint(p)

    def test_not_a_checkpoint(self, tmp_path):
        p = tmp_path / "w.ckpt"
        p.write_bytes(b'{"format": "other"}\n')
        with pytest.raises(ValueError):
            load_checkpoint(p)
