import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfn import _kernels
from cfn.mathcore import Normal, Rng

needs_numba = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")


def _data(seed):
    rng = Rng(seed)
    n = int(rng.generator.integers(1, 60))
    return rng, n


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_horner_paths_agree(seed):
    rng, n = _data(seed)
    coeffs = rng.sample(Normal(0, 1), int(rng.generator.integers(1, 6)))
    p = rng.sample(Normal(0, 2), n)
    v1, d1 = _kernels.horner_py(coeffs, p)
    v2, d2 = _kernels.horner_jit(coeffs, p)
    np.testing.assert_allclose(v1, v2, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(d1, d2, rtol=1e-12, atol=1e-12)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_midranks_paths_agree(seed):
    rng, n = _data(seed)
    x = np.round(rng.sample(Normal(0, 1), n), 1)  # rounding forces ties
    np.testing.assert_array_equal(_kernels.midranks_py(x), _kernels.midranks_jit(x))


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sqdist_paths_agree(seed):
    rng, n = _data(seed)
    X = rng.sample(Normal(0, 1), (n, 3))
    c = rng.sample(Normal(0, 1), 3)
    np.testing.assert_allclose(_kernels.sqdist_py(X, c), _kernels.sqdist_jit(X, c), rtol=1e-13)


def test_horner_matches_polyval():
    coeffs = np.array([1.0, -2.0, 0.5, 3.0])
    p = np.linspace(-2, 2, 9)
    v, d = _kernels.horner(coeffs, p)
    np.testing.assert_allclose(v, np.polynomial.polynomial.polyval(p, coeffs))
    np.testing.assert_allclose(d, np.polynomial.polynomial.polyval(p, np.polynomial.polynomial.polyder(coeffs)))


def test_midranks_ties():
    np.testing.assert_array_equal(_kernels.midranks(np.array([3.0, 1.0, 3.0, 2.0])), [3.5, 1.0, 3.5, 2.0])


def test_public_binding_follows_flag():
    expected = _kernels.NUMBA_AVAILABLE and _kernels.USE_NUMBA
    assert (_kernels.horner is _kernels.horner_py) != expected
