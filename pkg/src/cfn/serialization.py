"""Versioned JSON model files and the node-kind registry used to rebuild them.

File layout (``format_version`` 1)::

    {
      "format": "cfn-model",
      "format_version": 1,
      "network": {"input_dim": .., "output_dim": .., "layers": [LAYER, ...]},
      "scaler": {"means": [...], "stds": [...]} | null,
      "metadata": {...}
    }

    LAYER = {"type": "sequential", "nodes": [NODE, ...]}
          | {"type": "parallel", "combine": "sum|product|concat|weighted_sum",
             "nodes": [NODE, ...], "weights": [...]}          # weights: weighted_sum only
          | {"type": "conditional", "epsilon": 1e-10,
             "condition_nodes": [NODE, ...], "function_nodes": [NODE, ...]}

    NODE = {"kind": "Gaussian", "input_dim": 2, "output_dim": 1,
            "trainable": true, "frozen": [], "options": {},
            "params": {"center": [...], "log_width": 0.0},
            "interpretation": {"center": [...], "width": 1.0}}

``params`` holds the raw stored values and is what loading reads back;
``interpretation`` is informational. Unknown keys are ignored on read. Floats
are written with Python's shortest round-trip repr, so values reload bit-exactly.
"""

import json
import os

import numpy as np

from .composition import ConditionalLayer, Network, ParallelLayer, SequentialLayer, layer_entry
from .data import Scaler
from .errors import ArgumentError, CFNError, RegistryError, ShapeError, UsageError, VersionError
from .nodes import BUILTIN_NODES, LinearNode

FORMAT_NAME = "cfn-model"
FORMAT_VERSION = 1

_registry = {}


def register_node_kind(name, constructor):
    """Make ``name`` loadable. ``constructor(input_dim, output_dim, **options)`` must return a node."""
    if name in _registry:
        raise UsageError(f"node kind {name!r} is already registered")
    if not callable(constructor):
        raise ArgumentError(f"constructor for {name!r} is not callable")
    _registry[name] = constructor


def registered_kinds():
    return sorted(_registry)


def _builtin_constructor(cls):
    def build(input_dim, output_dim, **options):
        if cls is LinearNode:
            return cls(input_dim, output_dim, weight=np.zeros((output_dim, input_dim)), **options)
        node = cls(input_dim, **options)
        if node.output_dim != output_dim:
            raise ShapeError(f"{cls.kind} node has output_dim {node.output_dim}, file says {output_dim}")
        return node
    return build


for _kind, _cls in BUILTIN_NODES.items():
    register_node_kind(_kind, _builtin_constructor(_cls))


# ---------------------------------------------------------------- writing


def model_document(net, scaler=None, metadata=None):
    return {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "network": {
            "input_dim": net.input_dim,
            "output_dim": net.output_dim,
            "layers": [layer_entry(layer) for layer in net.layers],
        },
        "scaler": scaler.to_dict() if scaler is not None else None,
        "metadata": metadata or {},
    }


def dumps(net, scaler=None, metadata=None):
    return json.dumps(model_document(net, scaler, metadata), indent=2, allow_nan=False) + "\n"


def save(net, path, scaler=None, metadata=None):
    text = dumps(net, scaler, metadata)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------- reading


def _build_node(entry, where):
    kind = entry.get("kind")
    if kind not in _registry:
        raise RegistryError(f"{where}: unknown node kind {kind!r} (registered: {registered_kinds()})")
    try:
        node = _registry[kind](int(entry["input_dim"]), int(entry["output_dim"]), **entry.get("options", {}))
    except KeyError as exc:
        raise ShapeError(f"{where}: node entry missing field {exc}") from None
    stored = entry.get("params", {})
    for name in node.param_names:
        if name not in stored:
            raise ShapeError(f"{where}: {kind} node is missing parameter {name!r}")
        arr = np.array(stored[name], dtype=np.float64)
        expected = node.params[name].shape
        if arr.shape != expected:
            raise ShapeError(f"{where}: {kind}.{name} has shape {arr.shape}, expected {expected}")
        node.params[name] = arr
    node.trainable = bool(entry.get("trainable", True))
    frozen = tuple(entry.get("frozen", ()))
    unknown = set(frozen) - set(node.param_names)
    if unknown:
        raise ShapeError(f"{where}: frozen names {sorted(unknown)} are not {kind} parameters")
    node.frozen = frozen
    return node


def _build_layer(entry, i):
    kind = entry.get("type")
    where = f"layer {i}"
    if kind == "sequential":
        return SequentialLayer([_build_node(e, f"{where} node {j}") for j, e in enumerate(entry["nodes"])])
    if kind == "parallel":
        nodes = [_build_node(e, f"{where} node {j}") for j, e in enumerate(entry["nodes"])]
        return ParallelLayer(nodes, entry["combine"], entry.get("weights"))
    if kind == "conditional":
        conds = [_build_node(e, f"{where} condition {j}") for j, e in enumerate(entry["condition_nodes"])]
        experts = [_build_node(e, f"{where} expert {j}") for j, e in enumerate(entry["function_nodes"])]
        return ConditionalLayer(conds, experts, entry.get("epsilon", 1e-10))
    raise RegistryError(f"{where}: unknown layer type {kind!r}")


def from_document(doc):
    """Rebuild ``(network, scaler, metadata)`` from a parsed model document."""
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise VersionError("not a model file: missing format_version")
    version = doc["format_version"]
    if not isinstance(version, int) or version < 1:
        raise VersionError(f"invalid format_version {version!r}")
    if version > FORMAT_VERSION:
        raise VersionError(f"model file format_version {version} is newer than supported {FORMAT_VERSION}")
    body = doc["network"]
    net = Network([_build_layer(e, i) for i, e in enumerate(body["layers"])])
    if (net.input_dim, net.output_dim) != (body.get("input_dim", net.input_dim),
                                           body.get("output_dim", net.output_dim)):
        raise ShapeError(f"rebuilt network is {net.input_dim}->{net.output_dim}, file declares "
                         f"{body.get('input_dim')}->{body.get('output_dim')}")
    scaler = Scaler.from_dict(doc["scaler"]) if doc.get("scaler") else None
    if scaler is not None and scaler.means.size != net.input_dim:
        raise ShapeError(f"scaler has {scaler.means.size} features, network expects {net.input_dim}")
    return net, scaler, doc.get("metadata", {})


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VersionError(f"model file is not valid JSON: {exc}") from None
    return from_document(doc)


def load(path):
    """Read a model file; returns ``(network, scaler, metadata)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CFNError(f"cannot read model file {path}: {exc}") from exc
    return loads(text)
