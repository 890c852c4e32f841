"""Split -> scale -> build -> train -> evaluate, shared by the CLI commands and tests."""

import time
from dataclasses import dataclass

import numpy as np

from .data import apply_scaler, fit_scaler, split
from .losses import LOSS_FOR_TASK, task_metrics
from .mathcore import Rng
from .presets import get_preset
from .training import TrainConfig, train


@dataclass
class RunOutput:
    net: object
    scaler: object
    result: object
    metrics: dict
    config: TrainConfig
    train_set: object
    test_set: object
    seconds: float


def make_config(preset, **overrides):
    """Preset training settings with explicit overrides (``None`` values are skipped)."""
    settings = dict(preset.config)
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**settings)


def init_network(preset, ds, seed):
    n_out = ds.y.shape[1]
    rng = Rng(seed).split(2)[0]
    return preset.build(ds.X.shape[1], ds.task, n_out, rng)


def init_output_bias(net, y):
    """Start a regression network's final Linear bias at the training-target mean."""
    from .composition import SequentialLayer
    from .nodes import LinearNode

    last = net.layers[-1]
    if isinstance(last, SequentialLayer) and isinstance(last.chain[-1], LinearNode):
        head = last.chain[-1]
        if head.trainable and "bias" not in head.frozen:
            head.params["bias"] = np.asarray(y, dtype=np.float64).mean(axis=0).copy()


def evaluate(net, ds, scaler=None):
    X = apply_scaler(scaler, ds.X) if scaler is not None else ds.X
    return task_metrics(net.predict(X), ds.y, ds.task)


def run(ds, preset_name, seed=0, split_seed=42, test_fraction=0.2, builder=None, **overrides):
    """Train one preset network on ``ds`` and score it on the held-out split.

    ``builder(input_dim, task, n_out, rng)`` replaces the preset's architecture
    while keeping its scaling and training settings.
    """
    preset = get_preset(preset_name)
    config = make_config(preset, seed=seed, **overrides)
    start = time.perf_counter()
    train_set, test_set = split(ds, test_fraction, split_seed)
    scaler = fit_scaler(train_set.X) if preset.standardize else None
    Xtr = apply_scaler(scaler, train_set.X) if scaler else train_set.X
    Xte = apply_scaler(scaler, test_set.X) if scaler else test_set.X
    if builder is None:
        net = init_network(preset, ds, seed)
    else:
        net = builder(ds.X.shape[1], ds.task, ds.y.shape[1], Rng(seed).split(2)[0])
    if ds.task == "regression":
        init_output_bias(net, train_set.y)
    # init draws from a spawned child stream, shuffling from the root stream
    result = train(net, (Xtr, train_set.y), (Xte, test_set.y), LOSS_FOR_TASK[ds.task], config)
    metrics = task_metrics(net.predict(Xte), test_set.y, ds.task)
    seconds = time.perf_counter() - start
    return RunOutput(net, scaler, result, metrics, config, train_set, test_set, seconds)


def summarize(values):
    """Mean and n-1 standard deviation; a single value reports sd 0."""
    arr = np.asarray(values, dtype=np.float64)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "sd": sd, "n": int(arr.size)}
