"""Inner-loop kernels with an optional numba path.

Every kernel exists twice: a pure-numpy reference (``*_py``) and, when numba
is importable, a jitted twin (``*_jit``). The public name is bound to the jitted
version unless ``CFN_DISABLE_NUMBA`` is set to a truthy value before import.
Both paths must agree to rounding; tests/test_kernels.py pins that.
"""

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

_flag = os.environ.get("CFN_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = NUMBA_AVAILABLE and _flag not in ("1", "true", "yes", "on")


def _maybe_jit(func):
    if NUMBA_AVAILABLE:
        return njit(cache=True)(func)
    return func


# ---------------------------------------------------------------- Horner


def horner_py(coeffs, p):
    """Evaluate sum_i coeffs[i] * p**i and its derivative in p."""
    value = np.full(p.shape, coeffs[-1], dtype=np.float64)
    deriv = np.zeros(p.shape, dtype=np.float64)
    for i in range(coeffs.shape[0] - 2, -1, -1):
        deriv = deriv * p + value
        value = value * p + coeffs[i]
    return value, deriv


def _horner_loop(coeffs, p):
    n = p.shape[0]
    deg = coeffs.shape[0] - 1
    value = np.empty(n)
    deriv = np.empty(n)
    for k in range(n):
        v = coeffs[deg]
        d = 0.0
        x = p[k]
        for i in range(deg - 1, -1, -1):
            d = d * x + v
            v = v * x + coeffs[i]
        value[k] = v
        deriv[k] = d
    return value, deriv


horner_jit = _maybe_jit(_horner_loop)


# ---------------------------------------------------------------- midranks


def midranks_py(x):
    """1-based ranks of ``x`` with tied values sharing their average rank."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    n = xs.shape[0]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], n]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(n)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def _midranks_loop(x, order):
    n = x.shape[0]
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        r = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


_midranks_ties = _maybe_jit(_midranks_loop)


def midranks_jit(x):
    # numpy's sort beats numba's argsort; only the tie walk is compiled
    return _midranks_ties(x, np.argsort(x, kind="mergesort"))


# ---------------------------------------------------------------- squared distance


def sqdist_py(X, c):
    """Row-wise squared Euclidean distance from ``c``."""
    diff = X - c
    return np.einsum("ij,ij->i", diff, diff)


def _sqdist_loop(X, c):
    n, d = X.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(d):
            t = X[i, j] - c[j]
            acc += t * t
        out[i] = acc
    return out


sqdist_jit = _maybe_jit(_sqdist_loop)


if USE_NUMBA:
    def horner(coeffs, p):
        return horner_jit(np.ascontiguousarray(coeffs, dtype=np.float64),
                          np.ascontiguousarray(p, dtype=np.float64))

    def midranks(x):
        return midranks_jit(np.ascontiguousarray(x, dtype=np.float64))

    def sqdist(X, c):
        return sqdist_jit(np.ascontiguousarray(X, dtype=np.float64),
                          np.ascontiguousarray(c, dtype=np.float64))
else:
    horner = horner_py
    midranks = midranks_py
    sqdist = sqdist_py
