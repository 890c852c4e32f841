"""Sequential, parallel and conditional layers and the network that chains them.

``forward`` returns ``(Y, cache)``; the cache belongs to the caller and must be
handed back to the same object's ``backward``. Gradients come back as one flat
vector laid out like ``param_vector`` (node segments in order, then any
layer-level parameters such as weighted-sum weights).
"""

import json
from enum import Enum

import numpy as np

from .errors import ArgumentError, NumericError, ShapeError, UsageError
from .mathcore import as_matrix

CONDITIONAL_EPS = 1e-10


class Combine(str, Enum):
    SUM = "sum"
    PRODUCT = "product"
    CONCAT = "concat"
    WEIGHTED_SUM = "weighted_sum"


class _Cache:
    __slots__ = ("owner", "data")

    def __init__(self, owner, data):
        self.owner = owner
        self.data = data


def _check_finite(Y, what):
    if not np.all(np.isfinite(Y)):
        raise NumericError(f"non-finite output from {what}")


class Layer:
    kind = "layer"
    input_dim: int
    output_dim: int

    def nodes(self):
        """All nodes of the layer in parameter order."""
        raise NotImplementedError

    def _extra_params(self):
        return np.zeros(0)

    def _set_extra_params(self, v):
        pass

    @property
    def n_params(self):
        return sum(n.n_params for n in self.nodes()) + self._extra_params().size

    def param_vector(self):
        parts = [n.param_vector() for n in self.nodes()] + [self._extra_params()]
        return np.concatenate(parts) if parts else np.zeros(0)

    def set_params(self, v):
        v = np.asarray(v, dtype=np.float64).ravel()
        if v.size != self.n_params:
            raise ShapeError(f"{self.kind} layer expects {self.n_params} parameters, got {v.size}")
        pos = 0
        for node in self.nodes():
            k = node.n_params
            node.set_params(v[pos:pos + k])
            pos += k
        self._set_extra_params(v[pos:])

    def _unwrap(self, cache):
        if not isinstance(cache, _Cache) or cache.owner is not self:
            raise UsageError(f"cache passed to {self.kind} layer backward did not come from its forward")
        return cache.data

    def _node_forward(self, node, X, label):
        try:
            return node.forward_with_context(X)
        except NumericError as exc:
            raise NumericError(f"{self.kind} layer, {label}: {exc}") from exc


class SequentialLayer(Layer):
    kind = "sequential"

    def __init__(self, nodes):
        nodes = list(nodes)
        if not nodes:
            raise ArgumentError("sequential layer needs at least one node")
        for i in range(1, len(nodes)):
            if nodes[i].input_dim != nodes[i - 1].output_dim:
                raise ShapeError(
                    f"sequential layer: node {i} ({nodes[i].kind}) expects input dim "
                    f"{nodes[i].input_dim} but node {i - 1} ({nodes[i - 1].kind}) outputs "
                    f"{nodes[i - 1].output_dim}")
        self.chain = nodes
        self.input_dim = nodes[0].input_dim
        self.output_dim = nodes[-1].output_dim

    def nodes(self):
        return list(self.chain)

    def forward(self, X):
        steps = []
        for i, node in enumerate(self.chain):
            Y, ctx = self._node_forward(node, X, f"node {i} ({node.kind})")
            steps.append((X, ctx))
            X = Y
        return X, _Cache(self, steps)

    def backward(self, cache, upstream):
        steps = self._unwrap(cache)
        grads = [None] * len(self.chain)
        g = upstream
        for i in range(len(self.chain) - 1, -1, -1):
            X, ctx = steps[i]
            g, grads[i] = self.chain[i].backward(X, g, ctx)
        return g, np.concatenate(grads)


class ParallelLayer(Layer):
    kind = "parallel"

    def __init__(self, nodes, combine=Combine.CONCAT, weights=None):
        nodes = list(nodes)
        if not nodes:
            raise ArgumentError("parallel layer needs at least one node")
        self.combine = Combine(combine)
        in_dims = {n.input_dim for n in nodes}
        if len(in_dims) != 1:
            raise ShapeError(f"parallel layer: nodes disagree on input dim {sorted(in_dims)}")
        out_dims = [n.output_dim for n in nodes]
        if self.combine is Combine.CONCAT:
            self.output_dim = sum(out_dims)
        else:
            if len(set(out_dims)) != 1:
                raise ShapeError(f"parallel {self.combine.value} needs equal node output dims, got {out_dims}")
            self.output_dim = out_dims[0]
        self.branches = nodes
        self.input_dim = nodes[0].input_dim
        if self.combine is Combine.WEIGHTED_SUM:
            if weights is None:
                weights = np.full(len(nodes), 1.0 / len(nodes))
            weights = np.array(weights, dtype=np.float64)
            if weights.shape != (len(nodes),):
                raise ShapeError(f"weighted sum needs {len(nodes)} weights, got shape {weights.shape}")
            self.weights = weights
        elif weights is not None:
            raise ArgumentError("weights only apply to weighted_sum combination")
        else:
            self.weights = None

    def nodes(self):
        return list(self.branches)

    def _extra_params(self):
        return self.weights.copy() if self.weights is not None else np.zeros(0)

    def _set_extra_params(self, v):
        if self.weights is not None:
            self.weights = np.array(v, dtype=np.float64)

    def forward(self, X):
        outs, ctxs = [], []
        for i, node in enumerate(self.branches):
            Y, ctx = self._node_forward(node, X, f"node {i} ({node.kind})")
            outs.append(Y)
            ctxs.append(ctx)
        c = self.combine
        if c is Combine.CONCAT:
            Y = np.concatenate(outs, axis=1)
        elif c is Combine.SUM:
            Y = np.sum(outs, axis=0)
        elif c is Combine.PRODUCT:
            Y = np.prod(outs, axis=0)
        else:
            Y = np.tensordot(self.weights, np.stack(outs), axes=1)
        _check_finite(Y, f"parallel layer ({c.value})")
        return Y, _Cache(self, (X, outs, ctxs))

    def _others_product(self, outs, i):
        # product over j != i without dividing (outputs may be zero)
        result = np.ones_like(outs[0])
        for j, o in enumerate(outs):
            if j != i:
                result = result * o
        return result

    def backward(self, cache, upstream):
        X, outs, ctxs = self._unwrap(cache)
        grad_in = np.zeros_like(X)
        grads = []
        col = 0
        for i, node in enumerate(self.branches):
            c = self.combine
            if c is Combine.CONCAT:
                u = upstream[:, col:col + node.output_dim]
                col += node.output_dim
            elif c is Combine.SUM:
                u = upstream
            elif c is Combine.PRODUCT:
                u = upstream * self._others_product(outs, i)
            else:
                u = upstream * self.weights[i]
            gi, gp = node.backward(X, u, ctxs[i])
            grad_in += gi
            grads.append(gp)
        if self.combine is Combine.WEIGHTED_SUM:
            grads.append(np.array([np.sum(upstream * o) for o in outs]))
        return grad_in, np.concatenate(grads)


class ConditionalLayer(Layer):
    """Mixture of experts: per row, sum_i c_i / (sum_j c_j + eps) * g_i."""

    kind = "conditional"

    def __init__(self, condition_nodes, function_nodes, epsilon=CONDITIONAL_EPS):
        conds = list(condition_nodes)
        experts = list(function_nodes)
        if not conds or len(conds) != len(experts):
            raise ShapeError(f"conditional layer needs matching non-empty condition/expert lists, "
                             f"got {len(conds)} and {len(experts)}")
        for i, c in enumerate(conds):
            if c.output_dim != 1:
                raise ShapeError(f"condition node {i} ({c.kind}) must have output_dim 1, got {c.output_dim}")
        all_nodes = conds + experts
        in_dims = {n.input_dim for n in all_nodes}
        if len(in_dims) != 1:
            raise ShapeError(f"conditional layer: nodes disagree on input dim {sorted(in_dims)}")
        out_dims = {e.output_dim for e in experts}
        if len(out_dims) != 1:
            raise ShapeError(f"conditional layer: experts disagree on output dim {sorted(out_dims)}")
        self.conditions = conds
        self.experts = experts
        self.epsilon = float(epsilon)
        self.input_dim = conds[0].input_dim
        self.output_dim = experts[0].output_dim

    def nodes(self):
        return self.conditions + self.experts

    def gate_weights(self, X):
        X = as_matrix(X)
        C = np.concatenate([c.forward(X) for c in self.conditions], axis=1)
        return C / (C.sum(axis=1, keepdims=True) + self.epsilon)

    def forward(self, X):
        c_out, c_ctx, g_out, g_ctx = [], [], [], []
        for i, node in enumerate(self.conditions):
            Y, ctx = self._node_forward(node, X, f"condition {i} ({node.kind})")
            c_out.append(Y)
            c_ctx.append(ctx)
        for i, node in enumerate(self.experts):
            Y, ctx = self._node_forward(node, X, f"expert {i} ({node.kind})")
            g_out.append(Y)
            g_ctx.append(ctx)
        C = np.concatenate(c_out, axis=1)
        S = C.sum(axis=1, keepdims=True) + self.epsilon
        W = C / S
        G = np.stack(g_out, axis=1)  # batch x N x m
        Y = np.einsum("bn,bnm->bm", W, G)
        _check_finite(Y, "conditional layer")
        return Y, _Cache(self, (X, S, W, G, c_ctx, g_ctx))

    def backward(self, cache, upstream):
        X, S, W, G, c_ctx, g_ctx = self._unwrap(cache)
        grad_in = np.zeros_like(X)
        # dL/dW_i per row, then quotient rule through the normalization
        dW = np.einsum("bm,bnm->bn", upstream, G)
        dC = (dW - np.sum(dW * W, axis=1, keepdims=True)) / S
        cond_grads, exp_grads = [], []
        for i, node in enumerate(self.conditions):
            gi, gp = node.backward(X, dC[:, i:i + 1], c_ctx[i])
            grad_in += gi
            cond_grads.append(gp)
        for i, node in enumerate(self.experts):
            gi, gp = node.backward(X, upstream * W[:, i:i + 1], g_ctx[i])
            grad_in += gi
            exp_grads.append(gp)
        return grad_in, np.concatenate(cond_grads + exp_grads)


class Network:
    """An ordered stack of composition layers."""

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ArgumentError("network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].input_dim != layers[i - 1].output_dim:
                raise ShapeError(f"layer {i} ({layers[i].kind}) expects input dim {layers[i].input_dim} "
                                 f"but layer {i - 1} outputs {layers[i - 1].output_dim}")
        self.layers = layers
        self.input_dim = layers[0].input_dim
        self.output_dim = layers[-1].output_dim

    @property
    def n_params(self):
        return sum(layer.n_params for layer in self.layers)

    def param_vector(self):
        return np.concatenate([layer.param_vector() for layer in self.layers])

    def set_params(self, v):
        v = np.asarray(v, dtype=np.float64).ravel()
        if v.size != self.n_params:
            raise ShapeError(f"network expects {self.n_params} parameters, got {v.size}")
        pos = 0
        for layer in self.layers:
            k = layer.n_params
            layer.set_params(v[pos:pos + k])
            pos += k

    def forward(self, X):
        X = as_matrix(X, "input")
        if X.shape[1] != self.input_dim:
            raise ShapeError(f"network expects input (batch, {self.input_dim}), got {X.shape}")
        caches = []
        for i, layer in enumerate(self.layers):
            try:
                X, cache = layer.forward(X)
            except NumericError as exc:
                raise NumericError(f"layer {i}: {exc}") from exc
            caches.append(cache)
        return X, _Cache(self, caches)

    def predict(self, X):
        return self.forward(X)[0]

    __call__ = predict

    def backward(self, cache, loss_grad):
        if not isinstance(cache, _Cache) or cache.owner is not self:
            raise UsageError("cache passed to network backward did not come from its forward")
        g = np.asarray(loss_grad, dtype=np.float64)
        grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            g, grads[i] = self.layers[i].backward(cache.data[i], g)
        return np.concatenate(grads), g

    def nodes(self):
        return [n for layer in self.layers for n in layer.nodes()]


# ---------------------------------------------------------------- reporting


def node_entry(node):
    """Structured per-node record shared by reports and model files."""
    return {
        "kind": node.kind,
        "input_dim": node.input_dim,
        "output_dim": node.output_dim,
        "trainable": node.trainable,
        "frozen": list(node.frozen),
        "options": node.options(),
        "params": {n: _to_list(v) for n, v in node.params.items()},
        "interpretation": node.interpret(),
    }


def _to_list(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v.tolist()


def layer_entry(layer):
    entry = {"type": layer.kind, "input_dim": layer.input_dim, "output_dim": layer.output_dim}
    if isinstance(layer, SequentialLayer):
        entry["nodes"] = [node_entry(n) for n in layer.chain]
    elif isinstance(layer, ParallelLayer):
        entry["combine"] = layer.combine.value
        entry["nodes"] = [node_entry(n) for n in layer.branches]
        if layer.weights is not None:
            entry["weights"] = layer.weights.tolist()
    elif isinstance(layer, ConditionalLayer):
        entry["epsilon"] = layer.epsilon
        entry["condition_nodes"] = [node_entry(n) for n in layer.conditions]
        entry["function_nodes"] = [node_entry(n) for n in layer.experts]
    else:
        raise ArgumentError(f"cannot describe layer type {type(layer).__name__}")
    return entry


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _text_node(lines, label, entry):
    dims = f"{entry['input_dim']}->{entry['output_dim']}"
    flag = "" if entry["trainable"] else " (frozen)"
    lines.append(f"    {label}: {entry['kind']} {dims}{flag}")
    for name, value in entry["interpretation"].items():
        if isinstance(value, list) and value and isinstance(value[0], list):
            lines.append(f"      {name}:")
            for row in value:
                lines.append(f"        {_fmt(row)}")
        else:
            lines.append(f"      {name}: {_fmt(value)}")


def describe(net, fmt="text"):
    """Interpretability report listing every node's parameters by semantic name.

    ``fmt="structured"`` returns the dict form (same per-node schema as model
    files); ``fmt="json"`` returns it serialized; ``fmt="text"`` renders it.
    """
    doc = {"input_dim": net.input_dim, "output_dim": net.output_dim,
           "n_params": net.n_params, "layers": [layer_entry(layer) for layer in net.layers]}
    if fmt == "structured":
        return doc
    if fmt == "json":
        return json.dumps(doc, indent=2)
    if fmt != "text":
        raise ArgumentError(f"unknown report format {fmt!r}")
    lines = [f"Network {net.input_dim}->{net.output_dim}, {net.n_params} trainable parameters"]
    for i, entry in enumerate(doc["layers"]):
        head = f"Layer {i}: {entry['type']} {entry['input_dim']}->{entry['output_dim']}"
        if "combine" in entry:
            head += f" [{entry['combine']}]"
        lines.append(head)
        if entry["type"] == "conditional":
            for j, e in enumerate(entry["condition_nodes"]):
                _text_node(lines, f"condition {j}", e)
            for j, e in enumerate(entry["function_nodes"]):
                _text_node(lines, f"expert {j}", e)
        else:
            for j, e in enumerate(entry["nodes"]):
                _text_node(lines, f"node {j}", e)
        if "weights" in entry:
            lines.append(f"    combination weights: {_fmt(entry['weights'])}")
    return "\n".join(lines)
