"""Marker distance penalties: Euclidean, edge-weighted geodesic, anti-marker.

The geodesic distance is the viscosity solution of |grad D| = f with D = 0
on the marker set, computed by first-order upwind fast marching
(O(N log N) with a binary heap). The cost field

    f2 = eps_D + beta_G * |grad S^k(z)|^2 + vartheta * D_E

grows at image edges (so the distance jumps across object boundaries),
rides on the pre-smoothed image S^k(z) for noise robustness, and carries a
small Euclidean term so far-away homogeneous regions are still penalized.

Anti-markers mark objects to exclude: their distance map is flipped and
exponentially localized so the penalty is ~1 at the anti-marker set and
decays to ~0 a short distance away, then averaged into the combined map.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .grid import GridIndex, ScalarGrid, gradient_magnitude_sq
from .smoothing import SmootherParams, gauss_seidel_smooth


@dataclass(frozen=True)
class MarkerSet:
    """User-placed pixel sets: markers inside the target, anti-markers inside
    objects to exclude. Stored sorted and deduplicated; the two sets must be
    disjoint and markers must be non-empty."""

    markers: tuple[GridIndex, ...]
    anti_markers: tuple[GridIndex, ...] = ()

    def __post_init__(self):
        markers = tuple(sorted({(int(i), int(j)) for i, j in self.markers}))
        anti = tuple(sorted({(int(i), int(j)) for i, j in self.anti_markers}))
        if not markers:
            raise ValueError("empty marker set")
        if set(markers) & set(anti):
            raise ValueError("markers and anti-markers overlap")
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "anti_markers", anti)

    @property
    def has_anti_markers(self) -> bool:
        return len(self.anti_markers) > 0

    def validate_bounds(self, width: int, height: int) -> None:
        for i, j in self.markers + self.anti_markers:
            if not (0 <= i < width and 0 <= j < height):
                raise ValueError(f"marker ({i}, {j}) out of bounds for {width}x{height} image")

    def to_json(self) -> str:
        return json.dumps({
            "markers": [[i, j] for i, j in self.markers],
            "anti_markers": [[i, j] for i, j in self.anti_markers],
        })

    @classmethod
    def from_json(cls, text: str) -> "MarkerSet":
        doc = json.loads(text)
        return cls(
            markers=tuple((p[0], p[1]) for p in doc.get("markers", [])),
            anti_markers=tuple((p[0], p[1]) for p in doc.get("anti_markers", [])),
        )

    @classmethod
    def load(cls, path: str | Path) -> "MarkerSet":
        return cls.from_json(Path(path).read_text())


@dataclass
class DistanceConfig:
    beta_G: float = 1000.0    # edge weight in the cost field
    eps_D: float = 1e-3       # cost floor, keeps the Eikonal RHS positive
    vartheta: float = 0.1     # weight of the Euclidean term in the cost
    alpha_tilde: float = 200.0  # anti-marker decay rate
    smoothing_iterations: int = 100  # Gauss-Seidel pre-smoother sweeps

    def __post_init__(self):
        if min(self.beta_G, self.eps_D, self.vartheta, self.alpha_tilde) < 0:
            raise ValueError("distance parameters must be non-negative")
        if self.smoothing_iterations < 0:
            raise ValueError("smoothing_iterations must be non-negative")


@dataclass
class DistanceBundle:
    """All distance maps for one image + marker set, plus the cost field
    they were marched on. euclidean/marker_geodesic/combined are in [0, 1];
    anti_marker is identically zero when there are no anti-markers."""

    euclidean: ScalarGrid
    marker_geodesic: ScalarGrid
    anti_marker: ScalarGrid
    combined: ScalarGrid
    cost_field: ScalarGrid


def _seed_arrays(seeds: Iterable[GridIndex]):
    pts = sorted({(int(i), int(j)) for i, j in seeds})
    cols = np.array([p[0] for p in pts], dtype=np.int64)
    rows = np.array([p[1] for p in pts], dtype=np.int64)
    return cols, rows


def euclidean_distance(shape: tuple[int, int], seeds: Sequence[GridIndex],
                       spacing: tuple[float, float] = (1.0, 1.0)) -> ScalarGrid:
    """Normalized distance to the nearest seed; exact min over all seeds.

    ``shape`` is (height, width) as for the backing arrays. The map is
    divided by its maximum, so the farthest pixel is 1 and seeds are 0;
    with seeds everywhere the map is all zeros.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("empty marker set")
    h, w = shape
    hx, hy = spacing
    cols, rows = _seed_arrays(seeds)
    if cols.min() < 0 or cols.max() >= w or rows.min() < 0 or rows.max() >= h:
        raise ValueError("seed out of bounds")
    ii = np.arange(w, dtype=np.float64)[None, :]
    jj = np.arange(h, dtype=np.float64)[:, None]
    best = np.full((h, w), np.inf)
    for k0 in range(0, len(cols), 64):
        ci = cols[k0:k0 + 64, None, None]
        rj = rows[k0:k0 + 64, None, None]
        d2 = ((ii[None] - ci) * hx) ** 2 + ((jj[None] - rj) * hy) ** 2
        best = np.minimum(best, d2.min(axis=0))
    dist = np.sqrt(best)
    top = dist.max()
    if top > 0:
        dist /= top
    return ScalarGrid(dist, spacing)


def solve_eikonal(cost: ScalarGrid, seeds: Sequence[GridIndex]) -> ScalarGrid:
    """Upwind fast-marching solution of |grad D| = cost, D = 0 on seeds.

    The cost is sampled at the node being updated; requires a strictly
    positive cost field (enforce with the eps_D floor upstream).
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("empty marker set")
    if cost.values.min() <= 0.0:
        raise ValueError("degenerate cost field")
    cols, rows = _seed_arrays(seeds)
    if cols.min() < 0 or cols.max() >= cost.width or rows.min() < 0 or rows.max() >= cost.height:
        raise ValueError("seed out of bounds")
    hx, hy = cost.spacing
    dist = kernels.fast_march(cost.values, cols, rows, hx, hy)
    return cost.with_values(dist)


def build_edge_cost(smoothed_image: ScalarGrid, d_euclid: ScalarGrid,
                    cfg: DistanceConfig) -> ScalarGrid:
    """f2 = eps_D + beta_G * |grad S^k(z)|^2 + vartheta * D_E, strictly > 0."""
    grad_sq = gradient_magnitude_sq(smoothed_image).values
    return smoothed_image.with_values(
        cfg.eps_D + cfg.beta_G * grad_sq + cfg.vartheta * d_euclid.values
    )


def _presmooth(image: ScalarGrid, cfg: DistanceConfig) -> ScalarGrid:
    return gauss_seidel_smooth(
        image,
        SmootherParams(iterations=cfg.smoothing_iterations, edge_beta=cfg.beta_G),
    )


def _normalized_geodesic(image: ScalarGrid, seeds: Sequence[GridIndex],
                         cfg: DistanceConfig, pre_smoothed: ScalarGrid | None) -> ScalarGrid:
    smoothed = pre_smoothed if pre_smoothed is not None else _presmooth(image, cfg)
    d_e = euclidean_distance(image.shape, seeds, image.spacing)
    cost = build_edge_cost(smoothed, d_e, cfg)
    raw = solve_eikonal(cost, seeds).values
    top = raw.max()
    if top > 0:
        raw = raw / top
    return image.with_values(raw)


def marker_distance(image: ScalarGrid, markers: Sequence[GridIndex],
                    cfg: DistanceConfig,
                    pre_smoothed: ScalarGrid | None = None) -> ScalarGrid:
    """Normalized geodesic distance from the marker set; 0 on markers."""
    return _normalized_geodesic(image, markers, cfg, pre_smoothed)


def anti_marker_distance(image: ScalarGrid, anti_markers: Sequence[GridIndex],
                         cfg: DistanceConfig,
                         pre_smoothed: ScalarGrid | None = None) -> ScalarGrid:
    """Exponentially localized penalty around the anti-marker set.

    With d the normalized geodesic distance from the anti-markers,
    returns (exp(-at*d) - exp(-at)) / (1 - exp(-at)): exactly 1 on the
    set, decaying to 0 at the far end, so distant pixels (in particular
    the object actually being segmented) see almost no penalty. An empty
    set yields the all-zero grid.
    """
    if not list(anti_markers):
        return image.with_values(np.zeros_like(image.values))
    d = _normalized_geodesic(image, anti_markers, cfg, pre_smoothed).values
    at = cfg.alpha_tilde
    scale = 1.0 - math.exp(-at)
    return image.with_values((np.exp(-at * d) - math.exp(-at)) / scale)


def combined_distance(d_m: ScalarGrid, d_am: ScalarGrid, am_empty: bool) -> ScalarGrid:
    """Average of marker and anti-marker penalties.

    With no anti-markers this is the marker distance unchanged (halving it
    would silently rescale the distance weight against runs that do use
    anti-markers).
    """
    if am_empty:
        return d_m.with_values(d_m.values.copy())
    return d_m.with_values(0.5 * (d_m.values + d_am.values))


def build_distance_bundle(image: ScalarGrid, marker_set: MarkerSet,
                          cfg: DistanceConfig | None = None) -> DistanceBundle:
    """Full distance pipeline for a normalized image and a marker set.

    The pre-smoothed image is shared between the marker and anti-marker
    passes; the Euclidean term inside each cost field is measured from the
    respective seed set.
    """
    if cfg is None:
        cfg = DistanceConfig()
    marker_set.validate_bounds(image.width, image.height)
    smoothed = _presmooth(image, cfg)
    d_e = euclidean_distance(image.shape, marker_set.markers, image.spacing)
    cost = build_edge_cost(smoothed, d_e, cfg)
    raw = solve_eikonal(cost, marker_set.markers).values
    top = raw.max()
    d_m = image.with_values(raw / top if top > 0 else raw)
    d_am = anti_marker_distance(image, marker_set.anti_markers, cfg, smoothed)
    d_g = combined_distance(d_m, d_am, not marker_set.has_anti_markers)
    return DistanceBundle(
        euclidean=d_e,
        marker_geodesic=d_m,
        anti_marker=d_am,
        combined=d_g,
        cost_field=cost,
    )
