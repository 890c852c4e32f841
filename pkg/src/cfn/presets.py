"""Architecture presets used by the command line.

Each preset knows how to wire a network for a dataset's dimensions, which loss
goes with the task, whether features are standardized, and which training
settings it changes from :class:`~cfn.training.TrainConfig` defaults.
"""

from dataclasses import dataclass, field

import numpy as np

from .composition import Combine, ConditionalLayer, Network, ParallelLayer, SequentialLayer
from .errors import ArgumentError
from .nodes import (AngleNode, ExponentialNode, GaussianNode, LinearNode, PolynomialNode,
                    RadiusNode, ReLUNode, SigmoidNode, SinusoidalNode, StepNode)

TABULAR_HIDDEN = 64
SPIRAL_HIDDEN = 16


def _head(in_dim, task, n_out, rng):
    if task == "binary":
        return SequentialLayer([LinearNode(in_dim, 1, rng=rng), SigmoidNode(1, rng=rng, direction=[1.0])])
    return SequentialLayer([LinearNode(in_dim, n_out, rng=rng)])


def build_tabular(d, task, n_out, rng):
    """Feature bank {passthrough, poly2, Gaussian, Sigmoid, Sinusoidal, Exponential} -> 64 ReLU -> head."""
    features = ParallelLayer([
        LinearNode.identity(d),
        PolynomialNode(d, degree=2, rng=rng),
        GaussianNode(d, rng=rng),
        SigmoidNode(d, rng=rng),
        SinusoidalNode(d, rng=rng),
        ExponentialNode(d, rng=rng),
    ], Combine.CONCAT)
    hidden = SequentialLayer([LinearNode(features.output_dim, TABULAR_HIDDEN, rng=rng),
                              ReLUNode(TABULAR_HIDDEN)])
    return Network([features, hidden, _head(TABULAR_HIDDEN, task, n_out, rng)])


def build_symreg_sin(d, task, n_out, rng):
    """One sinusoid A sin(w t + phase) of a scalar input; direction pinned to +1."""
    if d != 1 or task != "regression":
        raise ArgumentError("symreg_sin needs a single input column and a regression target")
    node = SinusoidalNode(1, rng=rng, direction=[1.0], frozen=("direction",))
    return Network([SequentialLayer([node])])


def build_spiral(d, task, n_out, rng):
    """12-node feature bank -> bank of sigmoid units -> linear class logits."""
    bank = ([GaussianNode(d, rng=rng) for _ in range(5)]
            + [SigmoidNode(d, rng=rng) for _ in range(4)]
            + [SinusoidalNode(d, rng=rng) for _ in range(2)]
            + [PolynomialNode(d, degree=2, rng=rng)])
    features = ParallelLayer(bank, Combine.CONCAT)
    # one sigmoid per hidden unit: sigma(s (w . x + o)) is a linear unit with sigmoid activation
    hidden = ParallelLayer([SigmoidNode(features.output_dim, rng=rng) for _ in range(SPIRAL_HIDDEN)],
                           Combine.CONCAT)
    return Network([features, hidden, SequentialLayer([LinearNode(SPIRAL_HIDDEN, n_out, rng=rng)])])


# feature columns produced by the concentric feature layer
_MOE_FEATURES = ("x1", "x2", "r", "r2", "theta")
MOE_GATE_SHARPNESS = 4.0


def concentric_features():
    return ParallelLayer([LinearNode.identity(2), RadiusNode(2), RadiusNode(2, power=2), AngleNode(2)],
                         Combine.CONCAT)


def _moe_gates():
    # features: x1, x2, r, r^2, theta. Inner disk, two rings, outer region.
    e = {n: np.eye(len(_MOE_FEATURES))[i] for i, n in enumerate(_MOE_FEATURES)}
    f = len(_MOE_FEATURES)

    def ring(lo, hi):
        # -(r - lo)(r - hi) > 0 inside the ring
        return dict(direction=(lo + hi) * e["r"] - e["r2"], offset=-lo * hi)

    specs = [dict(direction=-e["r"], offset=0.8), ring(0.8, 1.6), ring(1.6, 2.4),
             dict(direction=e["r"], offset=-2.4)]
    return [StepNode(f, sharpness=MOE_GATE_SHARPNESS, **s) for s in specs]


def moe_experts(f, rng):
    return [SinusoidalNode(f, rng=rng), PolynomialNode(f, degree=2, rng=rng),
            GaussianNode(f, rng=rng), SinusoidalNode(f, rng=rng)]


def build_moe_concentric(d, task, n_out, rng):
    """Polar feature layer, then four Step-gated experts over the feature vector."""
    if d != 2 or task != "regression":
        raise ArgumentError("moe_concentric needs two input columns and a regression target")
    features = concentric_features()
    gates = _moe_gates()
    return Network([features, ConditionalLayer(gates, moe_experts(features.output_dim, rng))])


def build_single_expert(d, task, n_out, rng, expert):
    """Baseline: the moe feature layer followed by one expert (index into the moe expert list)."""
    features = concentric_features()
    node = moe_experts(features.output_dim, rng)[expert]
    return Network([features, SequentialLayer([node])])


def build_basis2d(d, task, n_out, rng):
    """5 Gaussian + 3 Sinusoidal + 2 Polynomial basis functions combined linearly."""
    bank = ([GaussianNode(d, rng=rng) for _ in range(5)]
            + [SinusoidalNode(d, rng=rng) for _ in range(3)]
            + [PolynomialNode(d, degree=2, rng=rng) for _ in range(2)])
    features = ParallelLayer(bank, Combine.CONCAT)
    return Network([features, SequentialLayer([LinearNode(features.output_dim, n_out, rng=rng)])])


@dataclass(frozen=True)
class Preset:
    name: str
    builder: object
    tasks: tuple
    standardize: bool = True
    config: dict = field(default_factory=dict)

    def build(self, input_dim, task, n_out, rng):
        if task not in self.tasks:
            raise ArgumentError(f"preset {self.name!r} supports tasks {self.tasks}, got {task!r}")
        return self.builder(input_dim, task, n_out, rng)


PRESETS = {
    "tabular": Preset("tabular", build_tabular, ("regression", "binary", "multiclass")),
    "symreg_sin": Preset("symreg_sin", build_symreg_sin, ("regression",), standardize=False,
                         config=dict(learning_rate=0.05, epochs=1500, patience=100,
                                     lr_decay_every=500, lr_decay_factor=0.3, l2_lambda=0.0)),
    "spiral": Preset("spiral", build_spiral, ("multiclass", "binary"),
                     config=dict(learning_rate=0.05, epochs=1500, patience=200,
                                 lr_decay_every=500, lr_decay_factor=0.3)),
    "moe_concentric": Preset("moe_concentric", build_moe_concentric, ("regression",), standardize=False,
                             config=dict(learning_rate=0.02, epochs=1500, patience=150,
                                         lr_decay_every=500, lr_decay_factor=0.3, l2_lambda=0.0)),
    "basis2d": Preset("basis2d", build_basis2d, ("regression",), standardize=False,
                      config=dict(learning_rate=0.05, epochs=2000, patience=200,
                                  lr_decay_every=700, lr_decay_factor=0.3, l2_lambda=0.0)),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ArgumentError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
