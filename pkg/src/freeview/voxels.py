"""Axis-aligned occupancy grids and their debug dump format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

GRID_MAGIC = b"FVVG"
GRID_VERSION = 1

# Worst-case full-stage grid in the target configurations is ~2.3e7
# voxels; leave generous headroom before refusing to allocate.
DEFAULT_VOXEL_BUDGET = 400_000_000


@dataclass
class GridSpec:
    origin: np.ndarray
    spacing: float
    dims: tuple
    budget: int = DEFAULT_VOXEL_BUDGET

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.dims = tuple(int(d) for d in self.dims)
        if self.spacing <= 0:
            raise ValueError("voxel spacing must be positive")
        if any(d <= 0 for d in self.dims):
            raise ValueError("grid dims must be positive")
        if self.num_voxels > self.budget:
            raise ValueError(
                f"grid of {self.num_voxels} voxels exceeds budget {self.budget}"
            )

    @property
    def num_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def extent(self) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(self.dims, dtype=np.float64)

    def centers(self, linear_idx=None) -> np.ndarray:
        """Voxel centers (mm) for the given linear indices (all if None)."""
        nx, ny, nz = self.dims
        if linear_idx is None:
            linear_idx = np.arange(self.num_voxels, dtype=np.int64)
        linear_idx = np.asarray(linear_idx, dtype=np.int64)
        i = linear_idx % nx
        j = (linear_idx // nx) % ny
        k = linear_idx // (nx * ny)
        ijk = np.stack([i, j, k], axis=-1).astype(np.float64)
        return self.origin + self.spacing * (ijk + 0.5)

    def linear_index(self, i, j, k):
        nx, ny, _ = self.dims
        return np.asarray(i) + nx * (np.asarray(j) + ny * np.asarray(k))

    @classmethod
    def from_aabb(cls, lo, hi, spacing: float, budget: int = DEFAULT_VOXEL_BUDGET) -> "GridSpec":
        """Grid covering [lo, hi] with dims = ceil(extent / spacing)."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if np.any(hi <= lo):
            raise ValueError("AABB must have positive extent on every axis")
        dims = np.ceil((hi - lo) / spacing - 1e-9).astype(int)
        dims = np.maximum(dims, 1)
        return cls(origin=lo, spacing=spacing, dims=tuple(dims), budget=budget)


@dataclass
class VoxelGrid:
    """Occupancy grid; flat layout with linear index i + nx*(j + ny*k).

    In memory the occupancy is a flat bool array (packed to bits only in
    the on-disk dump).
    """

    spec: GridSpec
    occ: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.occ is None:
            self.occ = np.zeros(self.spec.num_voxels, dtype=bool)
        self.occ = np.asarray(self.occ, dtype=bool).reshape(self.spec.num_voxels)

    @property
    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.occ))

    def as_volume(self) -> np.ndarray:
        """Occupancy as a (nx, ny, nz) array view (Fortran-order reshape)."""
        return self.occ.reshape(self.spec.dims, order="F")

    def occupied_centers(self) -> np.ndarray:
        return self.spec.centers(np.flatnonzero(self.occ))


def _rle_encode(bits: np.ndarray) -> np.ndarray:
    """Run lengths of a flat bool array, first run counted as OFF."""
    n = len(bits)
    if n == 0:
        return np.zeros(0, dtype=np.uint64)
    edges = np.flatnonzero(np.diff(bits.view(np.uint8))) + 1
    bounds = np.concatenate(([0], edges, [n]))
    runs = np.diff(bounds).astype(np.uint64)
    if bits[0]:
        runs = np.concatenate(([np.uint64(0)], runs))
    return runs


def _rle_decode(runs: np.ndarray, n: int) -> np.ndarray:
    bits = np.zeros(n, dtype=bool)
    pos = 0
    state = False
    for r in runs:
        r = int(r)
        if state:
            bits[pos : pos + r] = True
        pos += r
        state = not state
    if pos != n:
        raise ValueError("run lengths do not cover the grid")
    return bits


def save_grid(grid: VoxelGrid, path) -> None:
    """Dump a grid as RLE binary (layout documented in docs/formats.md)."""
    runs = _rle_encode(grid.occ)
    header = struct.pack(
        "<4sI3Iq d 3d",
        GRID_MAGIC,
        GRID_VERSION,
        *grid.spec.dims,
        len(runs),
        grid.spec.spacing,
        *grid.spec.origin,
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(runs.astype("<u8").tobytes())


def load_grid(path) -> VoxelGrid:
    with open(path, "rb") as f:
        raw = f.read()
    head_fmt = "<4sI3Iq d 3d"
    head_size = struct.calcsize(head_fmt)
    magic, version, nx, ny, nz, nruns, spacing, ox, oy, oz = struct.unpack(
        head_fmt, raw[:head_size]
    )
    if magic != GRID_MAGIC:
        raise ValueError(f"{path}: not a voxel grid dump")
    if version != GRID_VERSION:
        raise ValueError(f"{path}: unsupported grid dump version {version}")
    runs = np.frombuffer(raw[head_size:], dtype="<u8", count=nruns)
    spec = GridSpec(origin=(ox, oy, oz), spacing=spacing, dims=(nx, ny, nz))
    occ = _rle_decode(runs, spec.num_voxels)
    return VoxelGrid(spec=spec, occ=occ)
