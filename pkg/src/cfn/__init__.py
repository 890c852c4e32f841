"""Compositional function networks: interpretable function nodes, composed and trained
end to end with explicit gradients."""

from .composition import (Combine, ConditionalLayer, Network, ParallelLayer, SequentialLayer,
                          describe)
from .data import Dataset, fit_scaler, gen_concentric, gen_shm, gen_spiral, load_csv, split
from .errors import CFNError
from .losses import LossKind, accuracy, loss, one_hot, rmse, roc_auc
from .mathcore import Rng, fd_gradient, matmul
from .nodes import (ExponentialNode, GaussianNode, LinearNode, PolynomialNode, ReLUNode,
                    SigmoidNode, SinusoidalNode, StepNode, make_node)
from .serialization import load, register_node_kind, save
from .training import TrainConfig, TrainResult, train

__version__ = "0.1.0"
