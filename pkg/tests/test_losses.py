import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracle import close
from cfn.errors import ArgumentError, MetricUndefinedError, ShapeError
from cfn.losses import accuracy, loss, one_hot, rmse, roc_auc, softmax, task_metrics
from cfn.mathcore import Normal, Rng, Uniform, fd_gradient

seeds = st.integers(0, 2**32 - 1)


def brute_auc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (pos.size * neg.size)


def random_case(kind, rng, n=6, k=3):
    if kind == "mse":
        return rng.sample(Normal(0, 1), (n, 2)), rng.sample(Normal(0, 1), (n, 2))
    if kind == "bce":
        return rng.sample(Uniform(0.05, 0.95), (n, 1)), (rng.sample(Uniform(0, 1), (n, 1)) > 0.5) * 1.0
    labels = rng.generator.integers(0, k, n)
    return rng.sample(Normal(0, 2), (n, k)), one_hot(labels, k)


# ---------------------------------------------------------------- losses


def test_loss_examples():
    y = np.array([[0.0], [1.0]])
    v, g = loss("mse", y, y)
    assert v == 0.0 and np.all(g == 0)
    assert loss("bce", np.full((2, 1), 0.5), y)[0] == pytest.approx(np.log(2), abs=1e-9)
    assert loss("softmax_ce", np.zeros((2, 3)), one_hot([0, 2], 3))[0] == pytest.approx(np.log(3), abs=1e-9)


@pytest.mark.parametrize("kind", ["mse", "bce", "softmax_ce"])
@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_loss_gradients(kind, seed):
    pred, target = random_case(kind, Rng(seed))
    _, g = loss(kind, pred, target)
    num = fd_gradient(lambda p: loss(kind, p.reshape(pred.shape), target)[0], pred.ravel())
    assert close(g.ravel(), num)


@pytest.mark.parametrize("kind", ["mse", "bce", "softmax_ce"])
@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_loss_non_negative(kind, seed):
    pred, target = random_case(kind, Rng(seed))
    assert loss(kind, pred, target)[0] >= 0


def test_bce_clamp_keeps_finite():
    v, g = loss("bce", np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]))
    assert np.isfinite(v) and np.all(np.isfinite(g))


def test_loss_domain_errors():
    with pytest.raises(ShapeError):
        loss("mse", np.zeros((2, 1)), np.zeros((3, 1)))
    with pytest.raises(ArgumentError):
        loss("bce", np.full((1, 1), 0.5), np.full((1, 1), 0.3))
    with pytest.raises(ArgumentError):
        loss("softmax_ce", np.zeros((1, 2)), np.ones((1, 2)))
    with pytest.raises(ValueError):
        loss("hinge", np.zeros((1, 1)), np.zeros((1, 1)))


def test_softmax_rows_sum_to_one():
    p = softmax(Rng(0).sample(Normal(0, 30), (10, 4)))
    np.testing.assert_allclose(p.sum(axis=1), 1.0)


# ---------------------------------------------------------------- metrics


def test_accuracy_examples():
    y = np.array([[1.0], [0.0], [1.0]])
    assert accuracy(np.array([[0.9], [0.1], [0.7]]), y, "binary") == 1.0
    assert accuracy(np.array([[0.1], [0.9], [0.3]]), y, "binary") == 0.0
    assert accuracy(np.array([[0.5]]), np.array([[1.0]]), "binary") == 1.0
    assert accuracy(np.array([[0.5]]), np.array([[0.0]]), "binary") == 0.0
    with pytest.raises(ArgumentError):
        accuracy(np.zeros((0, 1)), np.zeros((0, 1)), "binary")


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_accuracy_of_perfect_logits(seed):
    rng = Rng(seed)
    Y = one_hot(rng.generator.integers(0, 4, 30), 4)
    assert accuracy(Y, Y, "multiclass") == 1.0


def test_auc_examples():
    labels = np.array([0, 0, 1, 1])
    assert roc_auc(np.array([0.1, 0.2, 0.8, 0.9]), labels) == 1.0
    assert roc_auc(np.array([0.9, 0.8, 0.2, 0.1]), labels) == 0.0
    assert roc_auc(np.array([0.5, 0.5, 0.5, 0.5]), labels) == 0.5
    with pytest.raises(MetricUndefinedError):
        roc_auc(np.array([0.1, 0.2]), np.array([1, 1]))


def test_auc_matches_brute_force():
    rng = Rng(2024)
    for _ in range(200):
        n = int(rng.generator.integers(2, 40))
        labels = rng.generator.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.sample(Normal(0, 1), n), 1)  # coarse values create ties
        assert roc_auc(scores, labels) == pytest.approx(brute_auc(scores, labels), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_auc_monotone_invariance(seed):
    rng = Rng(seed)
    labels = np.r_[0, 1, rng.generator.integers(0, 2, 30)]
    scores = rng.sample(Normal(0, 1), labels.size)
    base = roc_auc(scores, labels)
    assert roc_auc(np.exp(scores), labels) == base
    assert roc_auc(3 * scores ** 3 - 1, labels) == base


def test_ovr_macro_auc():
    rng = Rng(1)
    labels = np.r_[0, 1, 2, rng.generator.integers(0, 3, 40)]
    scores = rng.sample(Uniform(0, 1), (labels.size, 3))
    expected = np.mean([brute_auc(scores[:, k], (labels == k).astype(int)) for k in range(3)])
    assert roc_auc(scores, one_hot(labels, 3), "one_vs_rest_macro") == pytest.approx(expected)


def test_rmse_examples():
    y = np.array([[1.0], [2.0]])
    assert rmse(y, y) == 0.0
    assert rmse(y + 1, y) == 1.0
    with pytest.raises(ArgumentError):
        rmse(np.zeros((0, 1)), np.zeros((0, 1)))


def test_one_hot():
    np.testing.assert_array_equal(one_hot([2], 3), [[0, 0, 1]])
    with pytest.raises(ArgumentError):
        one_hot([3], 3)


def test_task_metrics_keys():
    y = np.array([[1.0], [2.0]])
    assert set(task_metrics(y, y, "regression")) == {"rmse"}
    yb = np.array([[0.0], [1.0]])
    assert set(task_metrics(np.array([[0.2], [0.8]]), yb, "binary")) == {"accuracy", "auc"}
    ym = one_hot([0, 1, 2], 3)
    assert task_metrics(ym * 5, ym, "multiclass") == {"accuracy": 1.0, "auc": 1.0}
