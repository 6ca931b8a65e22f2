"""Image file helpers (PNG via Pillow)."""

from __future__ import annotations

import numpy as np
from PIL import Image


def load_image(path) -> np.ndarray:
    """Load an image as uint8 (H, W) grayscale or (H, W, 3) color."""
    img = Image.open(path)
    if img.mode in ("L", "1"):
        return np.asarray(img.convert("L"), dtype=np.uint8)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_image(arr: np.ndarray, path) -> None:
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        a = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    Image.fromarray(a).save(path)


def load_mask(path) -> np.ndarray:
    """Binary mask from an image file: nonzero pixels are foreground."""
    return load_image(path) > 0


def save_mask(mask: np.ndarray, path) -> None:
    save_image(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), path)


def save_depth_png(depth: np.ndarray, path) -> None:
    """Debug depth export: 16-bit grayscale, near = bright, background 0."""
    d = np.asarray(depth, dtype=np.float64)
    covered = np.isfinite(d)
    out = np.zeros(d.shape, dtype=np.uint16)
    if covered.any():
        dmin = d[covered].min()
        dmax = d[covered].max()
        span = max(dmax - dmin, 1e-9)
        # near (small depth) maps bright, far maps dim; 0 reserved for bg
        norm = 1.0 - (d[covered] - dmin) / span
        out[covered] = (1 + np.rint(norm * 65534)).astype(np.uint16)
    Image.fromarray(out).save(path)
