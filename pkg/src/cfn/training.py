"""Adam training loop with L2, gradient clipping, step decay and early stopping."""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ArgumentError, NumericError, ShapeError, TrainingAborted
from .losses import LossKind, loss
from .mathcore import Rng, as_matrix


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 1.0
    l2_lambda: float = 1e-4
    epochs: int = 150
    batch_size: int = 0  # 0 means full batch
    patience: int = 20
    lr_decay_factor: float = 0.1
    lr_decay_every: int = 50
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ArgumentError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ArgumentError(f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.patience < 1 or self.epochs < 1:
            raise ArgumentError("patience and epochs must be >= 1")
        if not 0 < self.lr_decay_factor <= 1:
            raise ArgumentError(f"lr_decay_factor must lie in (0, 1], got {self.lr_decay_factor}")
        if self.lr_decay_every < 1:
            raise ArgumentError("lr_decay_every must be >= 1")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ArgumentError("clip_norm must be positive or None")
        if self.batch_size < 0:
            raise ArgumentError("batch_size must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainResult:
    best_params: np.ndarray
    history: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_loss: float = np.inf


def clip_gradients(g, max_norm):
    if not max_norm > 0:
        raise ArgumentError(f"max_norm must be positive, got {max_norm}")
    norm = float(np.linalg.norm(g))
    if norm > max_norm:
        return g * (max_norm / norm)
    return g


def apply_l2(g, params, lam):
    """Gradient of the penalty (lam / 2) * ||params||^2 added to ``g``."""
    if g.shape != params.shape:
        raise ShapeError(f"gradient {g.shape} and parameters {params.shape} differ")
    if lam == 0:
        return g
    return g + lam * params


def adam_step(state, params, g, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; mutates ``state`` and returns new params."""
    if not (params.shape == g.shape == state.m.shape):
        raise ShapeError(f"adam: params {params.shape}, grad {g.shape}, state {state.m.shape} differ")
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * g
    state.v = beta2 * state.v + (1.0 - beta2) * g * g
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


def lr_at(epoch, config):
    if epoch < 1:
        raise ArgumentError(f"epochs count from 1, got {epoch}")
    steps = (epoch - 1) // config.lr_decay_every
    return config.learning_rate * config.lr_decay_factor ** steps


class EarlyStopping:
    """Patience monitor that keeps a copy of the best parameters seen."""

    def __init__(self, patience):
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.best_params = None
        self.wait = 0

    def update(self, epoch, val_loss, params):
        """Record one epoch; returns True when training should stop."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_params = np.array(params, copy=True)
            self.wait = 0
            return False
        self.wait += 1
        return self.wait >= self.patience


def _validation_loss(net, X, y, kind):
    return loss(kind, net.predict(X), y)[0]


def _unpack(data, net, what):
    X, y = (data.X, data.y) if hasattr(data, "X") else data
    X = as_matrix(X, f"{what} X")
    y = as_matrix(y, f"{what} y")
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"{what}: {X.shape[0]} inputs but {y.shape[0]} targets")
    if X.shape[1] != net.input_dim:
        raise ShapeError(f"{what}: network expects {net.input_dim} features, data has {X.shape[1]}")
    if y.shape[1] != net.output_dim:
        raise ShapeError(f"{what}: network outputs {net.output_dim} columns, targets have {y.shape[1]}")
    if X.shape[0] == 0:
        raise ArgumentError(f"{what} data is empty")
    return X, y


def loss_and_gradient(net, X, y, kind):
    pred, cache = net.forward(X)
    value, grad_out = loss(kind, pred, y)
    grad, _ = net.backward(cache, grad_out)
    return value, grad


def train(net, train_data, val_data, loss_kind, config=None, callback=None):
    """Fit ``net`` in place and return the run's history.

    The network ends up holding the parameters from the best validation epoch.
    ``callback(record)`` is invoked after every epoch if given.
    """
    config = config or TrainConfig()
    kind = LossKind(loss_kind)
    X, y = _unpack(train_data, net, "train")
    Xv, yv = _unpack(val_data, net, "validation")
    rng = Rng(config.seed)
    n = X.shape[0]
    batch = n if config.batch_size == 0 else min(config.batch_size, n)

    params = net.param_vector()
    state = AdamState.zeros(params.size)
    monitor = EarlyStopping(config.patience)
    result = TrainResult(best_params=params.copy())

    for epoch in range(1, config.epochs + 1):
        lr = lr_at(epoch, config)
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            try:
                value, g = loss_and_gradient(net, X[idx], y[idx], kind)
            except NumericError as exc:
                raise TrainingAborted(f"epoch {epoch}: {exc}") from exc
            if not np.isfinite(value):
                raise TrainingAborted(f"epoch {epoch}: non-finite training loss at the loss layer")
            g = apply_l2(g, params, config.l2_lambda)
            if config.clip_norm is not None:
                g = clip_gradients(g, config.clip_norm)
            params = adam_step(state, params, g, lr, config.beta1, config.beta2, config.eps)
            net.set_params(params)
            batch_losses.append(value * idx.size)
        try:
            val_loss = float(_validation_loss(net, Xv, yv, kind))
        except NumericError as exc:
            raise TrainingAborted(f"epoch {epoch} (validation): {exc}") from exc
        if not np.isfinite(val_loss):
            raise TrainingAborted(f"epoch {epoch}: non-finite validation loss")
        record = EpochRecord(epoch, float(np.sum(batch_losses) / n), val_loss, lr)
        result.history.append(record)
        if callback is not None:
            callback(record)
        stop = monitor.update(epoch, val_loss, params)
        if stop:
            break

    result.stopped_epoch = len(result.history)
    result.best_epoch = monitor.best_epoch
    result.best_val_loss = monitor.best_loss
    if monitor.best_params is not None:
        result.best_params = monitor.best_params
    net.set_params(result.best_params)
    return result
