"""Scalar pixel grids and the discrete differential operators built on them.

Grids are row-major 2D fields indexed ``values[j, i]`` with ``i`` the column
and ``j`` the row, origin top-left. Grid steps default to 1 in both axes;
they appear in the finite-difference stencils as 1/h and 1/h^2 factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GridIndex = tuple[int, int]  # (i, j) = (column, row)


@dataclass
class ScalarGrid:
    """2D field of real values on a pixel lattice.

    All public operations return fresh grids and never produce NaN/Inf.
    """

    values: np.ndarray
    spacing: tuple[float, float] = (1.0, 1.0)  # (hx, hy)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("grid values must be 2D")
        if self.values.shape[0] < 2 or self.values.shape[1] < 2:
            raise ValueError("grid must be at least 2x2")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        hx, hy = self.spacing
        if hx <= 0 or hy <= 0:
            raise ValueError("grid spacing must be positive")
        self.values = np.ascontiguousarray(self.values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width), the numpy array shape."""
        return self.values.shape

    def with_values(self, values: np.ndarray) -> "ScalarGrid":
        """New grid with the same spacing and the given values."""
        return ScalarGrid(values, self.spacing)

    def in_bounds(self, index: GridIndex) -> bool:
        i, j = index
        return 0 <= i < self.width and 0 <= j < self.height


def normalize(grid: ScalarGrid) -> ScalarGrid:
    """Affinely rescale values to [0, 1]; a constant grid maps to all zeros.

    Idempotent, and the constant case deliberately avoids introducing a
    spurious mid-level: any constant image is equally featureless.
    """
    v = grid.values
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        return grid.with_values(np.zeros_like(v))
    return grid.with_values((v - lo) / (hi - lo))


def _gradients(v: np.ndarray, hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    """Central differences in the interior, one-sided at the boundary."""
    gx = np.empty_like(v)
    gx[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2.0 * hx)
    gx[:, 0] = (v[:, 1] - v[:, 0]) / hx
    gx[:, -1] = (v[:, -1] - v[:, -2]) / hx
    gy = np.empty_like(v)
    gy[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2.0 * hy)
    gy[0, :] = (v[1, :] - v[0, :]) / hy
    gy[-1, :] = (v[-1, :] - v[-2, :]) / hy
    return gx, gy


def gradient_magnitude_sq(grid: ScalarGrid) -> ScalarGrid:
    """|grad z|^2 per pixel; zero on constant grids, exact on linear ramps."""
    hx, hy = grid.spacing
    gx, gy = _gradients(grid.values, hx, hy)
    return grid.with_values(gx * gx + gy * gy)


def edge_detector(grad_sq: ScalarGrid, beta: float) -> ScalarGrid:
    """g(s) = 1 / (1 + beta * s^2) applied to s^2 = grad_sq; values in (0, 1].

    Monotone non-increasing in the squared gradient, ~1 in homogeneous
    regions and near 0 on strong edges.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return grad_sq.with_values(1.0 / (1.0 + beta * grad_sq.values))


def gaussian_convolve(grid: ScalarGrid, sigma: float) -> ScalarGrid:
    """Separable Gaussian blur, kernel radius ceil(3*sigma), edge replication.

    The sampled kernel is renormalized to sum 1, so constants are fixed
    points and the grid mean is preserved wherever replication is exact.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()

    v = grid.values
    padded = np.pad(v, ((0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(v)
    for k, wk in enumerate(kernel):
        out += wk * padded[:, k:k + v.shape[1]]
    padded = np.pad(out, ((radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(v)
    for k, wk in enumerate(kernel):
        out += wk * padded[k:k + v.shape[0], :]
    return grid.with_values(out)
