"""Losses with analytic gradients, and evaluation metrics."""

from enum import Enum

import numpy as np

from . import _kernels
from .errors import ArgumentError, MetricUndefinedError, ShapeError
from .mathcore import as_matrix

BCE_CLAMP = 1e-12


class LossKind(str, Enum):
    MSE = "mse"
    BCE = "bce"
    SOFTMAX_CE = "softmax_ce"


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss(kind, pred, target):
    """Mean-over-batch loss value and its gradient with respect to ``pred``."""
    kind = LossKind(kind)
    pred = as_matrix(pred, "pred")
    target = as_matrix(target, "target")
    if pred.shape != target.shape:
        raise ShapeError(f"{kind.value}: pred shape {pred.shape} != target shape {target.shape}")
    n = pred.shape[0]
    if n == 0:
        raise ArgumentError("loss of an empty batch")
    if kind is LossKind.MSE:
        diff = pred - target
        return float(np.mean(diff ** 2)), 2.0 * diff / diff.size
    if kind is LossKind.BCE:
        if not np.all((target == 0) | (target == 1)):
            raise ArgumentError("binary cross-entropy targets must be 0 or 1")
        p = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
        value = -np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
        grad = (p - target) / (p * (1.0 - p)) / p.size
        return float(value), grad
    if not np.all((target == 0) | (target == 1)) or not np.all(target.sum(axis=1) == 1):
        raise ArgumentError("softmax cross-entropy targets must be one-hot rows")
    z = pred - pred.max(axis=1, keepdims=True)
    log_sm = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    value = -np.sum(target * log_sm) / n
    return float(value), (np.exp(log_sm) - target) / n


def one_hot(labels, K):
    labels = np.asarray(labels).ravel()
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ArgumentError(f"labels must lie in [0, {K}), got range [{labels.min()}, {labels.max()}]")
    if not np.all(labels == np.round(labels)):
        raise ArgumentError("labels must be integers")
    out = np.zeros((labels.size, K))
    out[np.arange(labels.size), labels.astype(np.int64)] = 1.0
    return out


def _class_labels(target):
    t = np.asarray(target)
    if t.ndim == 2 and t.shape[1] > 1:
        return np.argmax(t, axis=1)
    return t.ravel()


def predict_labels(pred, task):
    pred = as_matrix(pred, "pred")
    if task == "binary":
        # ties at exactly 0.5 go to the positive class
        return (pred[:, 0] >= 0.5).astype(np.int64)
    if task == "multiclass":
        return np.argmax(pred, axis=1)
    raise ArgumentError(f"accuracy needs a classification task, got {task!r}")


def accuracy(pred, target, task):
    pred = as_matrix(pred, "pred")
    if pred.shape[0] == 0:
        raise ArgumentError("accuracy of empty input")
    labels = _class_labels(target)
    if labels.size != pred.shape[0]:
        raise ShapeError(f"{pred.shape[0]} predictions for {labels.size} targets")
    return float(np.mean(predict_labels(pred, task) == labels))


def _binary_auc(scores, labels):
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("ROC AUC is undefined when only one class is present")
    ranks = _kernels.midranks(np.asarray(scores, dtype=np.float64))
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc(scores, labels, scheme="binary"):
    """Mann-Whitney AUC with midranks; ``one_vs_rest_macro`` averages per class."""
    scores = np.asarray(scores, dtype=np.float64)
    if scheme == "binary":
        labels = np.asarray(labels).ravel()
        if not np.all((labels == 0) | (labels == 1)):
            raise ArgumentError("binary AUC labels must be 0 or 1")
        return _binary_auc(scores.ravel(), labels)
    if scheme == "one_vs_rest_macro":
        scores = as_matrix(scores, "scores")
        labels = _class_labels(labels)
        K = scores.shape[1]
        return float(np.mean([_binary_auc(scores[:, k], (labels == k).astype(np.int64))
                              for k in range(K)]))
    raise ArgumentError(f"unknown AUC scheme {scheme!r}")


def rmse(pred, target):
    pred = as_matrix(pred, "pred")
    target = as_matrix(target, "target")
    if pred.shape != target.shape:
        raise ShapeError(f"rmse: pred shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise ArgumentError("rmse of empty input")
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def task_metrics(pred, target, task):
    """Metrics reported per task: RMSE for regression, accuracy and AUC otherwise."""
    if task == "regression":
        return {"rmse": rmse(pred, target)}
    if task == "binary":
        return {"accuracy": accuracy(pred, target, "binary"),
                "auc": roc_auc(as_matrix(pred)[:, 0], target, "binary")}
    if task == "multiclass":
        probs = softmax(as_matrix(pred))
        return {"accuracy": accuracy(pred, target, "multiclass"),
                "auc": roc_auc(probs, target, "one_vs_rest_macro")}
    raise ArgumentError(f"unknown task {task!r}")


LOSS_FOR_TASK = {"regression": LossKind.MSE, "binary": LossKind.BCE, "multiclass": LossKind.SOFTMAX_CE}
