"""Image and grid file I/O: PNG/PGM input, CSV and PNG export.

8- and 16-bit grayscale PNG and PGM are read natively; color inputs are
collapsed with the Rec. 601 luma weights before any further processing.
CSV export is row-major at full precision so exported grids round-trip
bit-exactly and runs are byte-reproducible.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .grid import ScalarGrid

_LUMA = (0.299, 0.587, 0.114)


def _from_pil(img: Image.Image) -> ScalarGrid:
    if img.mode in ("I;16", "I;16B", "I"):
        arr = np.asarray(img, dtype=np.float64)
    elif img.mode in ("L", "P"):
        arr = np.asarray(img.convert("L"), dtype=np.float64)
    else:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
        arr = _LUMA[0] * rgb[..., 0] + _LUMA[1] * rgb[..., 1] + _LUMA[2] * rgb[..., 2]
    return ScalarGrid(arr)


def load_image(path: str | Path) -> ScalarGrid:
    """Read a PNG or PGM file into a raw (unnormalized) grid."""
    with Image.open(path) as img:
        return _from_pil(img)


def load_image_bytes(data: bytes) -> ScalarGrid:
    """Read PNG/PGM from an in-memory buffer (HTTP uploads)."""
    with Image.open(io.BytesIO(data)) as img:
        return _from_pil(img)


def to_png_bytes(grid: ScalarGrid) -> bytes:
    """8-bit grayscale PNG after affine mapping of [min, max] to [0, 255]."""
    v = grid.values
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        scaled = np.zeros_like(v)
    else:
        scaled = (v - lo) / (hi - lo) * 255.0
    img = Image.fromarray(np.round(scaled).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_png(grid: ScalarGrid, path: str | Path) -> None:
    Path(path).write_bytes(to_png_bytes(grid))


def mask_to_png_bytes(mask: np.ndarray) -> bytes:
    """Binary mask as a 0/255 PNG."""
    img = Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    Path(path).write_bytes(mask_to_png_bytes(mask))


def load_mask_png(path: str | Path) -> np.ndarray:
    """Read a mask PNG; any nonzero pixel counts as foreground."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) > 0


def grid_to_csv_bytes(grid: ScalarGrid) -> bytes:
    return array_to_csv_bytes(grid.values)


def array_to_csv_bytes(values: np.ndarray) -> bytes:
    rows = (",".join(f"{x:.17g}" for x in row) for row in np.asarray(values, dtype=np.float64))
    return ("\n".join(rows) + "\n").encode()


def save_csv(grid: ScalarGrid, path: str | Path) -> None:
    Path(path).write_bytes(grid_to_csv_bytes(grid))


def load_csv(path: str | Path) -> ScalarGrid:
    return ScalarGrid(np.loadtxt(path, delimiter=",", ndmin=2))
