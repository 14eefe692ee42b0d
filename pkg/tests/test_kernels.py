"""Backend parity: the compiled kernels and the pure-Python references
must produce bit-identical output (same arithmetic, same ordering)."""

import numpy as np
import pytest

from geoseg import kernels
from geoseg.kernels import pyref

try:
    from geoseg.kernels import _native
except ImportError:
    _native = None

needs_native = pytest.mark.skipif(_native is None, reason="extension not built")


@needs_native
class TestFastMarchParity:
    def test_uniform_cost(self):
        cost = np.ones((9, 9))
        a = _native.fast_march(cost, np.array([0, 4]), np.array([0, 7]), 1.0, 1.0)
        b = pyref.fast_march(cost, np.array([0, 4]), np.array([0, 7]), 1.0, 1.0)
        assert np.array_equal(a, b)

    def test_random_costs_and_spacings(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            h = int(rng.integers(4, 20))
            w = int(rng.integers(4, 20))
            cost = rng.uniform(0.01, 5.0, (h, w))
            k = int(rng.integers(1, 4))
            cols = rng.integers(0, w, k)
            rows = rng.integers(0, h, k)
            hx, hy = rng.uniform(0.5, 2.0, 2)
            a = _native.fast_march(cost, cols, rows, hx, hy)
            b = pyref.fast_march(cost, cols, rows, hx, hy)
            assert np.array_equal(a, b)

    def test_duplicate_seeds(self):
        cost = np.ones((5, 5))
        a = _native.fast_march(cost, np.array([2, 2]), np.array([2, 2]), 1.0, 1.0)
        b = pyref.fast_march(cost, np.array([2, 2]), np.array([2, 2]), 1.0, 1.0)
        assert np.array_equal(a, b)


@needs_native
class TestGaussSeidelParity:
    def test_random_coefficients(self):
        rng = np.random.default_rng(1)
        h, w = 13, 11
        u0 = rng.random((h, w))
        z = rng.random((h, w))
        ce = rng.random((h, w))
        ce[:, -1] = 0
        cw = rng.random((h, w))
        cw[:, 0] = 0
        cn = rng.random((h, w))
        cn[0, :] = 0
        cs = rng.random((h, w))
        cs[-1, :] = 0
        a = _native.gauss_seidel_sweeps(u0, z, ce, cw, cn, cs, 5e-4, 9)
        b = pyref.gauss_seidel_sweeps(u0, z, ce, cw, cn, cs, 5e-4, 9)
        assert np.array_equal(a, b)

    def test_input_not_mutated(self):
        rng = np.random.default_rng(2)
        u0 = rng.random((6, 6))
        keep = u0.copy()
        zeros = np.zeros((6, 6))
        _native.gauss_seidel_sweeps(u0, u0, zeros, zeros, zeros, zeros, 1e-3, 3)
        assert np.array_equal(u0, keep)


@needs_native
class TestTridiagonalParity:
    def test_random_batches(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            m = int(rng.integers(1, 9))
            n = int(rng.integers(1, 40))
            lower = rng.normal(size=(m, max(n - 1, 0)))
            upper = rng.normal(size=(m, max(n - 1, 0)))
            diag = 4.0 + rng.random((m, n))
            rhs = rng.normal(size=(m, n))
            a = _native.solve_tridiagonal_batched(lower, diag, upper, rhs)
            b = pyref.solve_tridiagonal_batched(lower, diag, upper, rhs)
            assert np.array_equal(a, b)

    def test_singular_raises_in_both(self):
        lower = np.array([[1.0]])
        upper = np.array([[1.0]])
        diag = np.array([[0.0, 1.0]])
        rhs = np.array([[1.0, 1.0]])
        with pytest.raises(ValueError, match="singular line system"):
            _native.solve_tridiagonal_batched(lower, diag, upper, rhs)
        with pytest.raises(ValueError, match="singular line system"):
            pyref.solve_tridiagonal_batched(lower, diag, upper, rhs)


def test_dispatch_exposes_backend():
    assert kernels.BACKEND in ("native", "python")
    assert callable(kernels.fast_march)
