"""Elementary function nodes with hand-derived backward rules.

A node maps a batch ``X`` of shape (batch, input_dim) to (batch, output_dim)
row by row. Parameters live in ``node.params`` as named float64 arrays, in the
order given by the class attribute ``param_names``; that order is also the
layout of :meth:`FunctionNode.param_vector`. Positive quantities (Gaussian
width, Step sharpness) are stored as logs so that any unconstrained update keeps
them positive.

Parameter layouts (flat vector order):

=============  =====================================================
Linear         weight (out x in, row-major), bias (out)
Gaussian       center (in), log_width
Sigmoid        direction (in), offset, steepness
Step           direction (in), offset, log_sharpness
Polynomial     direction (in), coefficients a_0 .. a_D
Sinusoidal     amplitude, frequency, phase, direction (in)
ReLU           (none)
Exponential    direction (in), offset
=============  =====================================================
"""

import numpy as np

from . import _kernels
from .errors import ArgumentError, NumericError, ShapeError
from .mathcore import He, Normal, Rng, Uniform


def _log_sigmoid_to_sigmoid(z):
    # exp(-log(1 + exp(-z))) without overflow for large |z|
    return np.exp(-np.logaddexp(0.0, -z))


class FunctionNode:
    kind = "FunctionNode"
    param_names = ()

    def __init__(self, input_dim, output_dim, trainable=True, frozen=()):
        if int(input_dim) < 1 or int(output_dim) < 1:
            raise ArgumentError(f"{self.kind}: dimensions must be >= 1, got {input_dim}->{output_dim}")
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self._layout = None
        self.trainable = trainable
        self.frozen = frozen
        self.params = {}

    # -- construction helpers -------------------------------------------------

    def _set_initial(self, defaults, overrides):
        extra = set(overrides) - set(self.param_names)
        if extra:
            raise ArgumentError(f"{self.kind}: unknown parameters {sorted(extra)}")
        for name in self.param_names:
            value = overrides[name] if name in overrides else defaults[name]
            arr = np.array(value, dtype=np.float64)
            expected = self._param_shape(name)
            if arr.shape != expected:
                raise ShapeError(f"{self.kind}.{name}: expected shape {expected}, got {arr.shape}")
            self.params[name] = arr

    def _param_shape(self, name):  # pragma: no cover - every subclass overrides
        raise NotImplementedError

    def options(self):
        """Structural settings beyond dims (e.g. polynomial degree)."""
        return {}

    # -- parameters -----------------------------------------------------------

    @property
    def trainable(self):
        return self._trainable

    @trainable.setter
    def trainable(self, value):
        self._trainable = bool(value)
        self._layout = None

    @property
    def frozen(self):
        return self._frozen

    @frozen.setter
    def frozen(self, names):
        names = tuple(names)
        unknown = set(names) - set(self.param_names)
        if unknown:
            raise ArgumentError(f"{self.kind}: cannot freeze unknown parameters {sorted(unknown)}")
        self._frozen = tuple(n for n in self.param_names if n in names)
        self._layout = None

    def _segments(self):
        # (name, shape, size) of each trainable array; shapes are fixed per node
        if self._layout is None:
            names = () if not self._trainable else tuple(n for n in self.param_names if n not in self._frozen)
            segs = []
            for n in names:
                shape = self._param_shape(n)
                segs.append((n, shape, int(np.prod(shape, dtype=np.int64))))
            self._layout = (names, tuple(segs), sum(s[2] for s in segs))
        return self._layout

    @property
    def trainable_names(self):
        return self._segments()[0]

    @property
    def n_params(self):
        return self._segments()[2]

    def param_vector(self):
        names = self.trainable_names
        if not names:
            return np.zeros(0)
        return np.concatenate([self.params[n].ravel() for n in names])

    def set_params(self, v):
        v = np.asarray(v, dtype=np.float64).ravel()
        _, segs, total = self._segments()
        if v.size != total:
            raise ShapeError(f"{self.kind}: expected {total} parameters, got {v.size}")
        pos = 0
        for name, shape, size in segs:
            self.params[name] = v[pos:pos + size].reshape(shape).copy()
            pos += size

    def _flatten_grads(self, grads):
        names = self.trainable_names
        if not names:
            return np.zeros(0)
        return np.concatenate([np.asarray(grads[n], dtype=np.float64).ravel() for n in names])

    # -- evaluation -------------------------------------------------------------

    def _check_input(self, X):
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(f"{self.kind} expects input (batch, {self.input_dim}), got {X.shape}")

    def forward_with_context(self, X):
        X = np.asarray(X, dtype=np.float64)
        self._check_input(X)
        Y, ctx = self._forward(X)
        if not np.all(np.isfinite(Y)):
            raise NumericError(f"{self.kind} node produced non-finite output")
        return Y, ctx

    def forward(self, X):
        return self.forward_with_context(X)[0]

    __call__ = forward

    def backward(self, X, upstream, ctx=None):
        """Gradients of sum(upstream * f(X)) w.r.t. X and the trainable parameters.

        Returns ``(grad_input, grad_params)`` with ``grad_params`` flat, aligned with
        :meth:`param_vector`.
        """
        X = np.asarray(X, dtype=np.float64)
        self._check_input(X)
        U = np.asarray(upstream, dtype=np.float64)
        if U.shape != (X.shape[0], self.output_dim):
            raise ShapeError(f"{self.kind}: upstream shape {U.shape} does not match output "
                             f"{(X.shape[0], self.output_dim)}")
        if ctx is None:
            ctx = self._forward(X)[1]
        grad_in, grads = self._backward(X, U, ctx)
        return grad_in, self._flatten_grads(grads)

    def _forward(self, X):  # pragma: no cover
        raise NotImplementedError

    def _backward(self, X, U, ctx):  # pragma: no cover
        raise NotImplementedError

    # -- reporting --------------------------------------------------------------

    def interpret(self):
        """Semantic parameter values, keyed by their human-readable names."""
        return {n: _plain(v) for n, v in self.params.items()}

    def __repr__(self):
        return f"{self.kind}Node({self.input_dim}->{self.output_dim})"


def _plain(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v.tolist()


class _ProjectionNode(FunctionNode):
    """Scalar-output node acting on the projection ``x . direction``."""

    def __init__(self, input_dim, trainable=True, frozen=()):
        super().__init__(input_dim, 1, trainable, frozen)

    def _param_shape(self, name):
        if name == "direction":
            return (self.input_dim,)
        return ()


class LinearNode(FunctionNode):
    kind = "Linear"
    param_names = ("weight", "bias")

    def __init__(self, input_dim, output_dim, rng=None, trainable=True, frozen=(), **params):
        super().__init__(input_dim, output_dim, trainable, frozen)
        defaults = {}
        if "weight" not in params:
            rng = rng or Rng(0)
            defaults["weight"] = rng.sample(He(self.input_dim), (self.output_dim, self.input_dim))
        defaults["bias"] = np.zeros(self.output_dim)
        self._set_initial(defaults, params)

    @classmethod
    def identity(cls, dim, trainable=False):
        return cls(dim, dim, weight=np.eye(dim), bias=np.zeros(dim), trainable=trainable)

    def _param_shape(self, name):
        return (self.output_dim, self.input_dim) if name == "weight" else (self.output_dim,)

    def _forward(self, X):
        return X @ self.params["weight"].T + self.params["bias"], None

    def _backward(self, X, U, ctx):
        W = self.params["weight"]
        return U @ W, {"weight": U.T @ X, "bias": U.sum(axis=0)}

    def interpret(self):
        return {"weights": self.params["weight"].tolist(), "bias": self.params["bias"].tolist()}


class GaussianNode(FunctionNode):
    kind = "Gaussian"
    param_names = ("center", "log_width")

    def __init__(self, input_dim, rng=None, trainable=True, frozen=(), **params):
        super().__init__(input_dim, 1, trainable, frozen)
        defaults = {"log_width": 0.0}
        if "center" not in params:
            rng = rng or Rng(0)
            defaults["center"] = rng.sample(Normal(0.0, 1.0), self.input_dim)
        if "width" in params:
            params["log_width"] = np.log(params.pop("width"))
        self._set_initial(defaults, params)

    def _param_shape(self, name):
        return (self.input_dim,) if name == "center" else ()

    @property
    def width(self):
        return float(np.exp(self.params["log_width"]))

    def _forward(self, X):
        c = self.params["center"]
        q = _kernels.sqdist(X, c)
        inv_w2 = np.exp(-2.0 * self.params["log_width"])
        f = np.exp(-0.5 * q * inv_w2)
        return f[:, None], (q, f, inv_w2)

    def _backward(self, X, U, ctx):
        q, f, inv_w2 = ctx
        g = U[:, 0] * f
        diff = X - self.params["center"]
        gc = (g * inv_w2) @ diff
        return -(g * inv_w2)[:, None] * diff, {"center": gc, "log_width": np.sum(g * q) * inv_w2}

    def interpret(self):
        return {"center": self.params["center"].tolist(), "width": self.width}


class SigmoidNode(_ProjectionNode):
    kind = "Sigmoid"
    param_names = ("direction", "offset", "steepness")

    def __init__(self, input_dim, rng=None, trainable=True, frozen=(), **params):
        super().__init__(input_dim, trainable, frozen)
        defaults = {"offset": 0.0, "steepness": 1.0}
        if "direction" not in params:
            defaults["direction"] = (rng or Rng(0)).unit_vector(self.input_dim)
        self._set_initial(defaults, params)

    def _scale(self):
        return self.params["steepness"]

    def _forward(self, X):
        u = X @ self.params["direction"] + self.params["offset"]
        f = _log_sigmoid_to_sigmoid(self._scale() * u)
        return f[:, None], (u, f)

    def _backward(self, X, U, ctx):
        u, f = ctx
        s = self._scale()
        g = U[:, 0] * f * (1.0 - f)
        gs = g * s
        d = self.params["direction"]
        grads = {"direction": X.T @ gs, "offset": gs.sum()}
        grads[self.param_names[2]] = self._scale_grad(np.sum(g * u))
        return np.outer(gs, d), grads

    def _scale_grad(self, g_scale):
        return g_scale

    def interpret(self):
        return {"direction": self.params["direction"].tolist(),
                "offset": float(self.params["offset"]),
                "steepness": float(self.params["steepness"])}


class StepNode(SigmoidNode):
    """Smooth step: a sigmoid gate whose sharpness is kept positive."""

    kind = "Step"
    param_names = ("direction", "offset", "log_sharpness")

    def __init__(self, input_dim, rng=None, trainable=True, frozen=(), **params):
        _ProjectionNode.__init__(self, input_dim, trainable, frozen)
        defaults = {"offset": 0.0, "log_sharpness": 0.0}
        if "sharpness" in params:
            params["log_sharpness"] = np.log(params.pop("sharpness"))
        if "direction" not in params:
            defaults["direction"] = (rng or Rng(0)).unit_vector(self.input_dim)
        self._set_initial(defaults, params)

    def _scale(self):
        return np.exp(self.params["log_sharpness"])

    def _scale_grad(self, g_scale):
        # chain rule through s = exp(rho)
        return g_scale * self._scale()

    def interpret(self):
        return {"direction": self.params["direction"].tolist(),
                "offset": float(self.params["offset"]),
                "sharpness": float(self._scale())}


class PolynomialNode(_ProjectionNode):
    kind = "Polynomial"
    param_names = ("direction", "coefficients")

    def __init__(self, input_dim, degree=2, rng=None, trainable=True, frozen=(), **params):
        if int(degree) < 1:
            raise ArgumentError(f"Polynomial degree must be >= 1, got {degree}")
        self.degree = int(degree)
        super().__init__(input_dim, trainable, frozen)
        defaults = {}
        if "direction" not in params or "coefficients" not in params:
            rng = rng or Rng(0)
            defaults["direction"] = rng.unit_vector(self.input_dim)
            defaults["coefficients"] = rng.sample(Uniform(-0.1, 0.1), self.degree + 1)
        self._set_initial(defaults, params)

    def _param_shape(self, name):
        return (self.input_dim,) if name == "direction" else (self.degree + 1,)

    def options(self):
        return {"degree": self.degree}

    def _forward(self, X):
        p = X @ self.params["direction"]
        value, deriv = _kernels.horner(self.params["coefficients"], p)
        return value[:, None], (p, deriv)

    def _backward(self, X, U, ctx):
        p, deriv = ctx
        u = U[:, 0]
        powers = np.vander(p, self.degree + 1, increasing=True)
        gp = u * deriv
        return (np.outer(gp, self.params["direction"]),
                {"direction": X.T @ gp, "coefficients": u @ powers})

    def interpret(self):
        return {"direction": self.params["direction"].tolist(),
                "coefficients": self.params["coefficients"].tolist(),
                "degree": self.degree}


class SinusoidalNode(_ProjectionNode):
    kind = "Sinusoidal"
    param_names = ("amplitude", "frequency", "phase", "direction")

    def __init__(self, input_dim, rng=None, trainable=True, frozen=(), **params):
        super().__init__(input_dim, trainable, frozen)
        rng = rng or Rng(0)
        defaults = {"amplitude": 1.0}
        # draw in a fixed order so overrides do not shift the stream
        defaults["frequency"] = rng.sample(Uniform(0.5, 2.0))
        defaults["phase"] = rng.sample(Uniform(-np.pi, np.pi))
        defaults["direction"] = rng.unit_vector(self.input_dim)
        self._set_initial(defaults, params)

    def _forward(self, X):
        p = X @ self.params["direction"]
        arg = self.params["frequency"] * p + self.params["phase"]
        s = np.sin(arg)
        return (self.params["amplitude"] * s)[:, None], (p, s, np.cos(arg))

    def _backward(self, X, U, ctx):
        p, s, c = ctx
        u = U[:, 0]
        A = self.params["amplitude"]
        w = self.params["frequency"]
        g_arg = u * A * c
        grads = {
            "amplitude": u @ s,
            "frequency": g_arg @ p,
            "phase": g_arg.sum(),
            "direction": X.T @ (g_arg * w),
        }
        return np.outer(g_arg * w, self.params["direction"]), grads

    def canonical(self):
        """(amplitude, frequency, phase) rewritten with A > 0, w > 0, phase in (-pi, pi].

        For one-dimensional input the direction is folded into the frequency so the
        triple describes ``A sin(w t + phase)`` directly.
        """
        A = float(self.params["amplitude"])
        w = float(self.params["frequency"])
        phi = float(self.params["phase"])
        if self.input_dim == 1:
            w *= float(self.params["direction"][0])
        if w < 0:
            # A sin(-|w| t + phi) = -A sin(|w| t - phi)
            w, phi, A = -w, -phi, -A
        if A < 0:
            A, phi = -A, phi + np.pi
        phi = float(np.pi - np.mod(np.pi - phi, 2 * np.pi))
        return A, w, phi

    def interpret(self):
        return {"amplitude": float(self.params["amplitude"]),
                "frequency": float(self.params["frequency"]),
                "phase": float(self.params["phase"]),
                "direction": self.params["direction"].tolist()}


class ReLUNode(FunctionNode):
    kind = "ReLU"
    param_names = ()

    def __init__(self, input_dim, output_dim=None, rng=None, trainable=True, frozen=()):
        if output_dim is not None and int(output_dim) != int(input_dim):
            raise ShapeError(f"ReLU output_dim must equal input_dim, got {input_dim}->{output_dim}")
        super().__init__(input_dim, input_dim, trainable, frozen)

    def _param_shape(self, name):  # pragma: no cover
        raise ArgumentError("ReLU has no parameters")

    def _forward(self, X):
        mask = X > 0
        return np.where(mask, X, 0.0), mask

    def _backward(self, X, U, ctx):
        return U * ctx, {}


class ExponentialNode(_ProjectionNode):
    kind = "Exponential"
    param_names = ("direction", "offset")

    def __init__(self, input_dim, clamp_hi=20.0, rng=None, trainable=True, frozen=(), **params):
        if not np.isfinite(clamp_hi):
            raise ArgumentError("clamp_hi must be finite")
        self.clamp_hi = float(clamp_hi)
        super().__init__(input_dim, trainable, frozen)
        defaults = {"offset": 0.0}
        if "direction" not in params:
            defaults["direction"] = 0.1 * (rng or Rng(0)).unit_vector(self.input_dim)
        self._set_initial(defaults, params)

    def options(self):
        return {"clamp_hi": self.clamp_hi}

    def _forward(self, X):
        z = X @ self.params["direction"] + self.params["offset"]
        f = np.exp(np.minimum(z, self.clamp_hi))
        return f[:, None], (z, f)

    def _backward(self, X, U, ctx):
        z, f = ctx
        g = np.where(z < self.clamp_hi, U[:, 0] * f, 0.0)
        return np.outer(g, self.params["direction"]), {"direction": X.T @ g, "offset": g.sum()}

    def interpret(self):
        return {"direction": self.params["direction"].tolist(),
                "offset": float(self.params["offset"]),
                "clamp_hi": self.clamp_hi}


class RadiusNode(FunctionNode):
    """Parameter-free Euclidean norm of the input row, optionally squared (``power=2``)."""

    kind = "Radius"
    param_names = ()

    def __init__(self, input_dim, output_dim=None, rng=None, trainable=False, frozen=(), power=1):
        if int(power) not in (1, 2):
            raise ArgumentError(f"Radius power must be 1 or 2, got {power}")
        self.power = int(power)
        super().__init__(input_dim, 1, trainable, frozen)

    def options(self):
        return {"power": self.power}

    def _forward(self, X):
        r2 = np.einsum("ij,ij->i", X, X)
        out = r2 if self.power == 2 else np.sqrt(r2)
        return out[:, None], out

    def _backward(self, X, U, ctx):
        if self.power == 2:
            return 2.0 * U[:, 0:1] * X, {}
        r = ctx
        scale = np.where(r > 0, U[:, 0] / np.where(r > 0, r, 1.0), 0.0)
        return scale[:, None] * X, {}


class AngleNode(FunctionNode):
    """Parameter-free polar angle atan2(x2, x1) of a two-column input, in (-pi, pi]."""

    kind = "Angle"
    param_names = ()

    def __init__(self, input_dim=2, output_dim=None, rng=None, trainable=False, frozen=()):
        if int(input_dim) != 2:
            raise ShapeError(f"Angle node needs input_dim 2, got {input_dim}")
        super().__init__(2, 1, trainable, frozen)

    def _forward(self, X):
        return np.arctan2(X[:, 1], X[:, 0])[:, None], None

    def _backward(self, X, U, ctx):
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        scale = np.where(r2 > 0, U[:, 0] / np.where(r2 > 0, r2, 1.0), 0.0)
        return np.column_stack([-X[:, 1] * scale, X[:, 0] * scale]), {}


BUILTIN_NODES = {
    cls.kind: cls
    for cls in (LinearNode, GaussianNode, SigmoidNode, StepNode, PolynomialNode,
                SinusoidalNode, ReLUNode, ExponentialNode, RadiusNode, AngleNode)
}


def make_node(kind, input_dim, output_dim=None, rng=None, **kwargs):
    """Build and initialize a built-in node by kind name."""
    try:
        cls = BUILTIN_NODES[kind]
    except KeyError:
        raise ArgumentError(f"unknown node kind {kind!r}") from None
    if cls is LinearNode:
        return cls(input_dim, output_dim if output_dim is not None else input_dim, rng=rng, **kwargs)
    if cls in (ReLUNode, RadiusNode, AngleNode):
        return cls(input_dim, output_dim, rng=rng, **kwargs)
    if output_dim not in (None, 1):
        raise ShapeError(f"{kind} nodes have scalar output, got output_dim={output_dim}")
    return cls(input_dim, rng=rng, **kwargs)
