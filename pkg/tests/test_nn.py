import json

import numpy as np
import pytest

from chiralchain.nn import (AdamState, EmptyDataset, ModelFormatError, TrainConfig, adam_step, backward,
                            fit_input_scaling, fit_output_scaling, forward, init_network, load_model, mse,
                            save_model, train)


def toy(n=40, seed=0):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, 5))
    Y = np.tanh(X @ r.normal(size=(5, 25)))
    return X, Y


def test_shapes_and_single_sample():
    m = init_network()
    assert m.dims == (5, 64, 32, 25)
    X, _ = toy(7)
    assert forward(m, X).shape == (7, 25)
    assert forward(m, X[0]).shape == (25,)
    with pytest.raises(ValueError):
        forward(m, np.ones(4))
    with pytest.raises(ValueError):
        forward(m, np.array([1, 2, np.nan, 4, 5]))


def test_mse_definition():
    assert mse([[1.0, 2.0]], [[0.0, 0.0]]) == pytest.approx(5.0)
    assert mse(np.zeros((3, 2)), np.ones((3, 2))) == pytest.approx(2.0)


@pytest.mark.parametrize("scaled", [False, True])
def test_gradient_matches_finite_differences(scaled):
    X, Y = toy(6)
    m = init_network((5, 8, 6, 25), 0.1, seed=3)
    if scaled:
        fit_input_scaling(m, X)
        fit_output_scaling(m, Y)
    seed = 11
    pred, cache = forward(m, X, train=True, rng=np.random.default_rng(seed), return_cache=True)
    grads = backward(m, cache, pred, Y)

    def loss():
        # same dropout masks as the analytic pass
        return mse(forward(m, X, train=True, rng=np.random.default_rng(seed)), Y)

    h = 1e-6
    num, ana = [], []
    for p, g in zip(m.params(), grads):
        flat = p.reshape(-1)
        for idx in range(0, flat.size, max(1, flat.size // 15)):
            old = flat[idx]
            flat[idx] = old + h
            up = loss()
            flat[idx] = old - h
            down = loss()
            flat[idx] = old
            num.append((up - down) / (2 * h))
            ana.append(g.reshape(-1)[idx])
    num, ana = np.array(num), np.array(ana)
    assert np.linalg.norm(num - ana) / np.linalg.norm(num + ana) < 1e-5


def test_dropout_is_off_at_inference():
    m = init_network(dropout_rate=0.5)
    X, _ = toy(4)
    assert np.array_equal(forward(m, X), forward(m, X))
    a = forward(m, X, train=True, rng=np.random.default_rng(0))
    b = forward(m, X, train=True, rng=np.random.default_rng(1))
    assert not np.allclose(a, b)
    with pytest.raises(ValueError):
        forward(m, X, train=True)


def test_adam_first_step_size():
    m = init_network((2, 3), 0.0)
    w0 = m.layers[0].weight.copy()
    grads = [np.full((2, 3), 5.0), np.full(3, -2.0)]
    cfg = TrainConfig(learning_rate=0.01)
    adam_step(m, grads, AdamState.zeros_like(m), cfg)
    # bias-corrected first step moves each entry by lr * sign(g)
    assert np.allclose(m.layers[0].weight, w0 - 0.01, atol=1e-8)
    assert np.allclose(m.layers[0].bias, 0.01, atol=1e-8)


def test_training_is_deterministic():
    X, Y = toy()
    cfg = TrainConfig(epochs=15, seed=4)
    _, h1 = train(init_network(seed=2), X, Y, cfg, X[:5], Y[:5])
    _, h2 = train(init_network(seed=2), X, Y, cfg, X[:5], Y[:5])
    assert h1.train_loss == h2.train_loss and h1.test_loss == h2.test_loss
    assert len(h1.train_loss) == 16


def test_overfits_one_sample():
    X, Y = toy(1)
    m, h = train(init_network(dropout_rate=0.0, seed=1), X, Y, TrainConfig(learning_rate=3e-3, epochs=800))
    assert h.train_loss[-1] < 1e-4


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        train(init_network(), np.zeros((0, 5)), np.zeros((0, 25)))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(beta1=1.0)
    with pytest.raises(ValueError):
        init_network(dropout_rate=1.0)


def test_save_load_round_trip(tmp_path):
    X, Y = toy()
    m = init_network(seed=5)
    fit_input_scaling(m, X)
    fit_output_scaling(m, Y)
    path = tmp_path / "m.json"
    save_model(m, path, meta={"target": "otoc"})
    back, meta = load_model(path, expect_input_dim=5, expect_output_dim=25, return_meta=True)
    assert meta == {"target": "otoc"}
    assert np.array_equal(forward(m, X), forward(back, X))


def test_load_rejects_bad_files(tmp_path):
    m = init_network()
    path = tmp_path / "m.json"
    save_model(m, path)
    doc = json.loads(path.read_text())
    with pytest.raises(ModelFormatError):
        load_model(path, expect_input_dim=6)
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_model(path)
    path.write_text("{not json")
    with pytest.raises(ModelFormatError):
        load_model(path)
    doc["version"] = 1
    doc["weights"] = doc["weights"][:-1]
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_model(path)
