import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfn import training
from cfn.composition import Network, SequentialLayer
from cfn.data import gen_shm
from cfn.errors import ArgumentError, ShapeError, TrainingAborted
from cfn.losses import loss
from cfn.mathcore import Normal, Rng, fd_gradient
from cfn.nodes import LinearNode, SinusoidalNode
from cfn.training import (AdamState, EarlyStopping, TrainConfig, adam_step, apply_l2,
                          clip_gradients, lr_at, train)

seeds = st.integers(0, 2**32 - 1)


def linear_problem(seed, n=40, d=3):
    rng = Rng(seed)
    X = rng.sample(Normal(0, 1), (n, d))
    w = rng.sample(Normal(0, 1), (d, 1))
    y = X @ w + 0.5
    net = Network([SequentialLayer([LinearNode(d, 1, rng=rng)])])
    return net, X, y


# ---------------------------------------------------------------- clipping, L2, Adam


def test_clip_examples():
    g = np.array([6.0, 8.0])
    out = clip_gradients(g, 1.0)
    np.testing.assert_allclose(out, g * 0.1)
    assert abs(np.linalg.norm(out) - 1.0) < 1e-12
    small = np.array([0.3, 0.4])
    np.testing.assert_array_equal(clip_gradients(small, 1.0), small)
    np.testing.assert_array_equal(clip_gradients(np.zeros(3), 1.0), np.zeros(3))


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(1e-3, 10.0))
def test_clip_bound(seed, max_norm):
    g = Rng(seed).sample(Normal(0, 100), 7)
    assert np.linalg.norm(clip_gradients(g, max_norm)) <= max_norm + 1e-9


def test_l2_examples_and_oracle():
    g = np.array([1.0, -2.0])
    np.testing.assert_array_equal(apply_l2(g, np.array([5.0, 5.0]), 0.0), g)
    p = np.array([0.5, -1.5, 2.0])
    np.testing.assert_array_equal(apply_l2(np.zeros(3), p, 0.1), 0.1 * p)
    num = fd_gradient(lambda t: 0.5 * 0.1 * t @ t, p)
    np.testing.assert_allclose(apply_l2(np.zeros(3), p, 0.1), num, rtol=1e-5, atol=1e-8)
    with pytest.raises(ShapeError):
        apply_l2(np.zeros(2), np.zeros(3), 0.1)


def test_adam_first_step():
    state = AdamState.zeros(1)
    new = adam_step(state, np.array([1.0]), np.array([4.0]), 0.01)
    assert new[0] == pytest.approx(0.99, abs=1e-8)
    np.testing.assert_allclose(state.m, [0.4], rtol=1e-15)
    assert state.t == 1
    state = AdamState.zeros(2)
    np.testing.assert_array_equal(adam_step(state, np.ones(2), np.zeros(2), 0.01), np.ones(2))


def test_adam_converges_on_quadratic():
    theta = np.array([0.0])
    state = AdamState.zeros(1)
    for _ in range(500):
        theta = adam_step(state, theta, 2.0 * (theta - 3.0), 0.05)
    assert abs(theta[0] - 3.0) < 1e-3


def test_adam_shape_check():
    with pytest.raises(ShapeError):
        adam_step(AdamState.zeros(2), np.zeros(3), np.zeros(3), 0.01)


def test_lr_schedule():
    cfg = TrainConfig()
    assert lr_at(1, cfg) == 0.01
    assert lr_at(50, cfg) == 0.01
    assert lr_at(51, cfg) == pytest.approx(0.001)
    flat = TrainConfig(lr_decay_factor=1.0)
    assert lr_at(1000, flat) == 0.01
    with pytest.raises(ArgumentError):
        lr_at(0, cfg)


@pytest.mark.parametrize("bad", [dict(learning_rate=0), dict(beta1=1.0), dict(patience=0),
                                 dict(lr_decay_factor=0), dict(epochs=0), dict(batch_size=-1)])
def test_config_validation(bad):
    with pytest.raises(ArgumentError):
        TrainConfig(**bad)


# ---------------------------------------------------------------- train loop


def scripted_validation(monkeypatch, values, snapshots):
    it = iter(values)

    def fake(net, X, y, kind):
        snapshots.append(net.param_vector().copy())
        return next(it)

    monkeypatch.setattr(training, "_validation_loss", fake)


@pytest.mark.parametrize("values, patience, stop, best", [
    ([5, 4, 4, 4], 2, 4, 2),
    ([3, 2, 1, 0.5, 0.25, 0.1], 2, 6, 6),
    ([1, 2, 3, 4, 5, 6], 3, 4, 1),
    ([4, 3, 3.5, 2, 2, 2, 2], 3, 7, 4),
])
def test_early_stopping_contract(monkeypatch, values, patience, stop, best):
    net, X, y = linear_problem(0)
    snaps = []
    scripted_validation(monkeypatch, values, snaps)
    cfg = TrainConfig(epochs=len(values), patience=patience, learning_rate=0.05)
    result = train(net, (X, y), (X, y), "mse", cfg)
    assert result.stopped_epoch == stop
    assert result.best_epoch == best
    assert len(result.history) == stop
    np.testing.assert_array_equal(net.param_vector(), snaps[best - 1])
    np.testing.assert_array_equal(result.best_params, snaps[best - 1])


def test_early_stopping_monitor_copies():
    mon = EarlyStopping(1)
    p = np.array([1.0])
    assert not mon.update(1, 1.0, p)
    p[0] = 9.0
    assert mon.best_params[0] == 1.0
    assert mon.update(2, 1.0, p)


def test_operation_order(monkeypatch):
    # raw grad -> + L2 -> clip -> Adam, checked against a hand computation for one step
    net, X, y = linear_problem(1)
    theta0 = net.param_vector()
    g_raw = np.array([30.0, -40.0, 0.0, 5.0])
    monkeypatch.setattr(training, "loss_and_gradient", lambda *a: (1.0, g_raw.copy()))
    cfg = TrainConfig(epochs=1, l2_lambda=0.5, clip_norm=2.0, learning_rate=0.1)
    train(net, (X, y), (X, y), "mse", cfg)
    g = clip_gradients(g_raw + 0.5 * theta0, 2.0)
    expected = adam_step(AdamState.zeros(4), theta0, g, 0.1)
    np.testing.assert_array_equal(net.param_vector(), expected)


def test_non_finite_loss_aborts_with_epoch(monkeypatch):
    net, X, y = linear_problem(2)
    monkeypatch.setattr(training, "loss_and_gradient", lambda *a: (np.nan, np.zeros(4)))
    with pytest.raises(TrainingAborted, match="epoch 1"):
        train(net, (X, y), (X, y), "mse", TrainConfig(epochs=3))


def test_non_finite_forward_aborts_naming_layer():
    from cfn.nodes import ExponentialNode
    node = ExponentialNode(1, direction=[1.0], clamp_hi=1000.0)
    net = Network([SequentialLayer([node])])
    X = np.array([[800.0], [1.0]])
    with pytest.raises(TrainingAborted, match=r"epoch 1.*layer 0"), np.errstate(over="ignore"):
        train(net, (X, np.ones((2, 1))), (X, np.ones((2, 1))), "mse", TrainConfig(epochs=2))


def test_data_shape_checks():
    net, X, y = linear_problem(3)
    with pytest.raises(ShapeError):
        train(net, (X[:, :2], y), (X, y), "mse")
    with pytest.raises(ShapeError):
        train(net, (X, y[:5]), (X, y), "mse")


@pytest.mark.parametrize("batch", [0, 7])
def test_determinism(batch):
    results = []
    for _ in range(2):
        net, X, y = linear_problem(4)
        cfg = TrainConfig(epochs=30, batch_size=batch, seed=11)
        res = train(net, (X, y), (X[:10], y[:10]), "mse", cfg)
        results.append((res, net.param_vector()))
    (a, pa), (b, pb) = results
    assert a.history == b.history
    np.testing.assert_array_equal(a.best_params, b.best_params)
    np.testing.assert_array_equal(pa, pb)


def test_invariants_of_result():
    net, X, y = linear_problem(5)
    res = train(net, (X, y), (X[:8], y[:8] + 0.3), "mse", TrainConfig(epochs=200, patience=5))
    vals = [r.val_loss for r in res.history]
    assert res.history[res.best_epoch - 1].val_loss == min(vals)
    assert res.stopped_epoch <= res.best_epoch + 5
    assert len(res.history) == res.stopped_epoch
    assert [r.epoch for r in res.history] == list(range(1, res.stopped_epoch + 1))


def test_convex_sweep_improves_every_seed():
    for seed in range(10):
        net, X, y = linear_problem(seed)
        before = loss("mse", net.predict(X), y)[0]
        train(net, (X, y), (X, y), "mse", TrainConfig(epochs=100, seed=seed))
        assert loss("mse", net.predict(X), y)[0] < before


def test_noiseless_shm_fit():
    ds = gen_shm(n=300, noise_sd=0.0, seed=3)
    node = SinusoidalNode(1, amplitude=1.5, frequency=1.4, phase=0.5, direction=[1.0], frozen=("direction",))
    net = Network([SequentialLayer([node])])
    cfg = TrainConfig(learning_rate=0.02, epochs=3000, patience=3000, l2_lambda=0.0,
                      lr_decay_every=1000, lr_decay_factor=0.5)
    res = train(net, (ds.X, ds.y), (ds.X, ds.y), "mse", cfg)
    assert res.best_val_loss < 1e-6
    A, w, phi = node.canonical()
    assert abs(A - 2.0) < 1e-3 and abs(w - 1.5) < 1e-3 and abs(phi - np.pi / 4) < 1e-3
