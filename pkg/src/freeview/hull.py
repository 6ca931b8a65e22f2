"""Coarse-to-fine volumetric visual hull.

Pipeline: sparse carve over the full stage, 26-adjacency connected
components labeling (block-local union-find plus a global merge),
component-size noise filtering, per-object 3D ROI extraction, and a
dense re-carve restricted to each ROI.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from freeview.camera import CameraRig, project
from freeview.voxels import GridSpec, VoxelGrid

CARVE_CHUNK = 1 << 20


@dataclass
class Component:
    id: int
    voxel_count: int
    bbox_min: tuple  # inclusive voxel indices (i, j, k)
    bbox_max: tuple  # inclusive


@dataclass
class Labeling:
    labels: np.ndarray  # flat int32 per voxel, 0 = background
    components: list  # list[Component], ascending id


@dataclass
class NoiseFilterParams:
    t_small: int = 0
    t_large: float = np.inf

    def __post_init__(self) -> None:
        if not (0 <= self.t_small <= self.t_large):
            raise ValueError("require 0 <= t_small <= t_large")

    def keeps(self, count: int) -> bool:
        return self.t_small <= count <= self.t_large


@dataclass
class Roi:
    lo: np.ndarray  # world mm
    hi: np.ndarray
    component_id: int

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        self.hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if np.any(self.lo >= self.hi):
            raise ValueError("ROI must have positive extent")


def _check_sils(rig: CameraRig, sils) -> list:
    if len(sils) != len(rig):
        raise ValueError(f"{len(sils)} silhouettes for {len(rig)} cameras")
    out = []
    for cam, sil in zip(rig, sils):
        s = np.asarray(sil, dtype=bool)
        if s.shape != (cam.image_height, cam.image_width):
            raise ValueError(
                f"camera {cam.id}: silhouette shape {s.shape} != "
                f"({cam.image_height}, {cam.image_width})"
            )
        out.append(s)
    return out


def _carve_chunk(rig, sils, spec, min_views, lo, hi):
    idx = np.arange(lo, hi, dtype=np.int64)
    centers = spec.centers(idx)
    keep = np.ones(len(idx), dtype=bool)
    seen = np.zeros(len(idx), dtype=np.int32)
    for cam, sil in zip(rig, sils):
        px, _, inside = project(cam, centers)
        seen += inside
        iu = np.rint(px[inside, 0]).astype(np.int64)
        iv = np.rint(px[inside, 1]).astype(np.int64)
        fg = sil[iv, iu]
        bad = np.flatnonzero(inside)[~fg]
        keep[bad] = False
    keep &= seen >= min_views
    return keep


def carve(rig: CameraRig, sils, spec: GridSpec, min_views: int = 1, workers: int = 1) -> VoxelGrid:
    """Silhouette-consistency carve.

    A voxel stays ON iff its center is in-frustum for at least
    ``min_views`` cameras and every camera that sees it observes
    foreground at the projected (nearest) pixel. Cameras whose frustum
    excludes the voxel abstain.
    """
    sils = _check_sils(rig, sils)
    n = spec.num_voxels
    occ = np.zeros(n, dtype=bool)
    bounds = list(range(0, n, CARVE_CHUNK)) + [n]
    ranges = list(zip(bounds[:-1], bounds[1:]))
    if workers <= 1 or len(ranges) == 1:
        for lo, hi in ranges:
            occ[lo:hi] = _carve_chunk(rig, sils, spec, min_views, lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                (lo, hi, pool.submit(_carve_chunk, rig, sils, spec, min_views, lo, hi))
                for lo, hi in ranges
            ]
            for lo, hi, fut in futs:
                occ[lo:hi] = fut.result()
    return VoxelGrid(spec=spec, occ=occ)


# 13 lexicographically-negative offsets of the 26-neighborhood; visiting
# them for every voxel covers each adjacent pair exactly once.
_NEG_OFFSETS = np.array(
    [
        (di, dj, dk)
        for dk in (-1, 0)
        for dj in (-1, 0, 1)
        for di in (-1, 0, 1)
        if (dk, dj, di) < (0, 0, 0)
    ],
    dtype=np.int64,
)


@njit(cache=True)
def _uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


@njit(cache=True)
def _uf_union(parent, a, b):
    ra = _uf_find(parent, a)
    rb = _uf_find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit(cache=True)
def _label_pass(occ, parent, nx, ny, nz, bx, by, bz, offsets, cross_blocks):
    """Union ON voxels with their negative-direction 26-neighbors.

    cross_blocks selects the phase: False unions only pairs inside one
    block (local labeling), True only pairs straddling a block boundary
    (global merge).
    """
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                l = i + nx * (j + ny * k)
                if not occ[l]:
                    continue
                for o in range(offsets.shape[0]):
                    ii = i + offsets[o, 0]
                    jj = j + offsets[o, 1]
                    kk = k + offsets[o, 2]
                    if ii < 0 or jj < 0 or kk < 0 or ii >= nx or jj >= ny or kk >= nz:
                        continue
                    ln = ii + nx * (jj + ny * kk)
                    if not occ[ln]:
                        continue
                    same = (i // bx == ii // bx) and (j // by == jj // by) and (k // bz == kk // bz)
                    if same != cross_blocks:
                        _uf_union(parent, l, ln)


@njit(cache=True)
def _finalize_labels(occ, parent, labels, counts, bbmin, bbmax, nx, ny, nz):
    """Compact labels in ascending order of component minimum linear index."""
    next_label = 0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                l = i + nx * (j + ny * k)
                if not occ[l]:
                    continue
                r = _uf_find(parent, l)
                if labels[r] == 0:
                    next_label += 1
                    labels[r] = next_label
                lab = labels[r]
                if l != r:
                    labels[l] = lab
                c = lab - 1
                counts[c] += 1
                if i < bbmin[c, 0]:
                    bbmin[c, 0] = i
                if j < bbmin[c, 1]:
                    bbmin[c, 1] = j
                if k < bbmin[c, 2]:
                    bbmin[c, 2] = k
                if i > bbmax[c, 0]:
                    bbmax[c, 0] = i
                if j > bbmax[c, 1]:
                    bbmax[c, 1] = j
                if k > bbmax[c, 2]:
                    bbmax[c, 2] = k
    return next_label


def label_components(grid: VoxelGrid, block_dims=(16, 16, 16)) -> Labeling:
    """26-adjacency connected components labeling.

    Two phases over a shared union-find forest: per-block local unions,
    then a global merge of equivalences across block faces, edges and
    corners. Union-by-minimum-root makes the result independent of
    block decomposition; final ids are renumbered compactly in
    ascending order of each component's minimum linear voxel index.
    """
    bx, by, bz = (int(b) for b in block_dims)
    if min(bx, by, bz) < 1:
        raise ValueError("block dims must be >= 1")
    nx, ny, nz = grid.spec.dims
    n = grid.spec.num_voxels
    occ = np.ascontiguousarray(grid.occ)
    parent = np.arange(n, dtype=np.int64)
    _label_pass(occ, parent, nx, ny, nz, bx, by, bz, _NEG_OFFSETS, False)
    _label_pass(occ, parent, nx, ny, nz, bx, by, bz, _NEG_OFFSETS, True)

    labels = np.zeros(n, dtype=np.int32)
    max_comp = grid.occupied_count
    counts = np.zeros(max_comp + 1, dtype=np.int64)
    bbmin = np.full((max_comp + 1, 3), 2**31 - 1, dtype=np.int64)
    bbmax = np.full((max_comp + 1, 3), -1, dtype=np.int64)
    ncomp = 0
    if max_comp:
        ncomp = _finalize_labels(occ, parent, labels, counts, bbmin, bbmax, nx, ny, nz)
    comps = [
        Component(
            id=c + 1,
            voxel_count=int(counts[c]),
            bbox_min=tuple(int(v) for v in bbmin[c]),
            bbox_max=tuple(int(v) for v in bbmax[c]),
        )
        for c in range(ncomp)
    ]
    return Labeling(labels=labels, components=comps)


def filter_noise(grid: VoxelGrid, lab: Labeling, params: NoiseFilterParams):
    """Drop components whose voxel count is outside [t_small, t_large].

    Returns (filtered grid, filtered labeling); surviving components
    keep their ids and voxels untouched.
    """
    keep_ids = np.array([c.id for c in lab.components if params.keeps(c.voxel_count)], dtype=np.int32)
    keep_set = np.zeros(len(lab.components) + 1, dtype=bool)
    keep_set[keep_ids] = True
    new_labels = np.where(keep_set[lab.labels], lab.labels, 0)
    new_occ = new_labels > 0
    comps = [c for c in lab.components if params.keeps(c.voxel_count)]
    return VoxelGrid(spec=grid.spec, occ=new_occ), Labeling(labels=new_labels, components=comps)


def extract_rois(lab: Labeling, spec: GridSpec, margin: float) -> list:
    """World-space AABB per surviving component, margin-expanded and
    clamped to the stage volume."""
    stage_lo = spec.origin
    stage_hi = spec.extent
    rois = []
    for c in lab.components:
        lo = spec.origin + spec.spacing * np.asarray(c.bbox_min, dtype=np.float64) - margin
        hi = spec.origin + spec.spacing * (np.asarray(c.bbox_max, dtype=np.float64) + 1.0) + margin
        lo = np.maximum(lo, stage_lo)
        hi = np.minimum(hi, stage_hi)
        rois.append(Roi(lo=lo, hi=hi, component_id=c.id))
    return rois


def dense_carve(
    rig: CameraRig,
    sils,
    rois,
    fine_spacing: float,
    min_views: int = 1,
    workers: int = 1,
    budget: int = None,
) -> list:
    """Re-carve each ROI as its own fine-spacing volume."""
    grids = []
    for roi in rois:
        kwargs = {} if budget is None else {"budget": budget}
        spec = GridSpec.from_aabb(roi.lo, roi.hi, fine_spacing, **kwargs)
        grids.append(carve(rig, sils, spec, min_views=min_views, workers=workers))
    return grids
