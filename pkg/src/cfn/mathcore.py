"""Matrix helpers, seeded random draws and the finite-difference oracle.

Matrices are plain ``float64`` numpy arrays of shape (rows, cols). The random
generator is numpy's PCG64 seeded through ``SeedSequence``, which is a
documented, platform-independent 64-bit generator that supports splitting
into independent child streams.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, OracleError, ShapeError

DEFAULT_FD_STEP = 1e-6


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float64 array, promoting vectors to a single column."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def fd_gradient(f, theta, h=DEFAULT_FD_STEP):
    """Central-difference gradient of scalar ``f`` at ``theta``.

    ``f`` receives a fresh copy of the perturbed vector on every call.
    """
    if not h > 0:
        raise ArgumentError(f"step size must be positive, got {h}")
    theta = np.array(theta, dtype=np.float64, copy=True).ravel()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        plus = theta.copy()
        plus[i] += h
        minus = theta.copy()
        minus[i] -= h
        fp = float(f(plus))
        fm = float(f(minus))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleError(f"non-finite function value at coordinate {i}: f(+h)={fp}, f(-h)={fm}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


# ---------------------------------------------------------------- distributions


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float


@dataclass(frozen=True)
class He:
    """Zero-mean normal with variance 2 / fan_in."""

    fan_in: int


class Rng:
    """Seeded PCG64 stream. Single owner; use :meth:`split` for independent children."""

    def __init__(self, seed=0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self.seed = self._seq.entropy
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def split(self, n=2):
        return [Rng(s) for s in self._seq.spawn(n)]

    def sample(self, dist, size=None):
        if isinstance(dist, Uniform):
            if not dist.hi >= dist.lo:
                raise ArgumentError(f"uniform requires hi >= lo, got {dist}")
            return self._gen.uniform(dist.lo, dist.hi, size)
        if isinstance(dist, Normal):
            if not dist.sd >= 0:
                raise ArgumentError(f"normal requires sd >= 0, got {dist}")
            return self._gen.normal(dist.mean, dist.sd, size)
        if isinstance(dist, He):
            if dist.fan_in < 1:
                raise ArgumentError(f"he requires fan_in >= 1, got {dist.fan_in}")
            return self._gen.normal(0.0, np.sqrt(2.0 / dist.fan_in), size)
        raise ArgumentError(f"unknown distribution {dist!r}")

    def unit_vector(self, dim):
        v = self._gen.normal(size=dim)
        norm = np.linalg.norm(v)
        while norm == 0.0:  # pragma: no cover
            v = self._gen.normal(size=dim)
            norm = np.linalg.norm(v)
        return v / norm

    def permutation(self, n):
        return self._gen.permutation(n)

    @property
    def generator(self):
        return self._gen
