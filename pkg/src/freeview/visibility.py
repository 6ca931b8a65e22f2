"""Per-camera depth images via software rasterization, and
per-triangle occlusion classification.

Rasterization uses the linear pinhole part of each camera only
(rasterizing straight 2D triangles under lens distortion is
ill-defined); the occlusion test is threshold-based and tolerant of the
small resulting bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from freeview.camera import CameraModel, project
from freeview.mesh import TriangleMesh

NEAR_CLIP_MM = 1.0


@dataclass
class RasterResult:
    depth: np.ndarray  # (H, W) float64 mm, +inf where uncovered
    tri_id: np.ndarray  # (H, W) int32, -1 where uncovered


def _is_top_left(ax, ay, bx, by) -> bool:
    dy = by - ay
    dx = bx - ax
    return dy < 0 or (dy == 0 and dx < 0)


def rasterize(mesh: TriangleMesh, cam: CameraModel) -> RasterResult:
    """Edge-function rasterizer with top-left tie convention.

    Depth is the perspective-correct interpolated camera-space z; the
    per-pixel value is the minimum over covering triangles and the
    winning triangle id is recorded (lowest id on exact depth ties).
    Triangles reaching behind the near clip are skipped.
    """
    h, w = cam.image_height, cam.image_width
    depth = np.full((h, w), np.inf)
    tri_id = np.full((h, w), -1, dtype=np.int32)
    if mesh.num_triangles == 0:
        return RasterResult(depth, tri_id)

    px, z, _ = project(cam, mesh.vertices, use_distortion=False)
    tv_px = px[mesh.triangles]  # (T, 3, 2)
    tv_z = z[mesh.triangles]  # (T, 3)

    front = np.all(tv_z > NEAR_CLIP_MM, axis=1)
    lo = np.maximum(np.floor(tv_px.min(axis=1)), 0).astype(np.int64)
    hi = np.minimum(np.ceil(tv_px.max(axis=1)), [w - 1, h - 1]).astype(np.int64)
    onscreen = np.all(hi >= lo, axis=1)

    for t in np.flatnonzero(front & onscreen):
        (x0, y0), (x1, y1), (x2, y2) = tv_px[t]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        swapped = area < 0.0
        if swapped:
            x1, y1, x2, y2 = x2, y2, x1, y1
            area = -area
        xs = np.arange(lo[t, 0], hi[t, 0] + 1, dtype=np.float64)
        ys = np.arange(lo[t, 1], hi[t, 1] + 1, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys)
        w0 = (x2 - x1) * (gy - y1) - (y2 - y1) * (gx - x1)
        w1 = (x0 - x2) * (gy - y2) - (y0 - y2) * (gx - x2)
        w2 = (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0)
        inside = (
            (w0 > 0) | ((w0 == 0) & _is_top_left(x1, y1, x2, y2))
        ) & (
            (w1 > 0) | ((w1 == 0) & _is_top_left(x2, y2, x0, y0))
        ) & (
            (w2 > 0) | ((w2 == 0) & _is_top_left(x0, y0, x1, y1))
        )
        if not inside.any():
            continue
        b0 = w0 / area
        b1 = w1 / area
        b2 = w2 / area
        za, zb, zc = tv_z[t]
        if swapped:
            zb, zc = zc, zb
        zinv = b0 / za + b1 / zb + b2 / zc
        d = 1.0 / zinv
        ys_idx = np.arange(lo[t, 1], hi[t, 1] + 1)
        xs_idx = np.arange(lo[t, 0], hi[t, 0] + 1)
        sub_d = depth[np.ix_(ys_idx, xs_idx)]
        sub_t = tri_id[np.ix_(ys_idx, xs_idx)]
        win = inside & (d < sub_d)
        sub_d[win] = d[win]
        sub_t[win] = t
        depth[np.ix_(ys_idx, xs_idx)] = sub_d
        tri_id[np.ix_(ys_idx, xs_idx)] = sub_t
    return RasterResult(depth, tri_id)


def depth_image(mesh: TriangleMesh, cam: CameraModel) -> np.ndarray:
    """Per-pixel nearest-surface depth in mm; +inf background sentinel."""
    return rasterize(mesh, cam).depth


def classify_visibility(
    mesh: TriangleMesh,
    cam: CameraModel,
    depth: np.ndarray,
    t_v: float,
) -> np.ndarray:
    """Per-triangle visibility flags (True = visible).

    A triangle is occluded iff its centroid's camera-space depth exceeds
    the cached depth at the centroid's pixel by more than t_v.
    Out-of-frustum triangles are occluded.
    """
    if mesh.num_triangles == 0:
        return np.zeros(0, dtype=bool)
    cent = mesh.centroids()
    px, z, in_frustum = project(cam, cent, use_distortion=False)
    visible = np.zeros(mesh.num_triangles, dtype=bool)
    ok = np.flatnonzero(in_frustum)
    if len(ok):
        iu = np.rint(px[ok, 0]).astype(np.int64)
        iv = np.rint(px[ok, 1]).astype(np.int64)
        cached = depth[iv, iu]
        visible[ok] = (z[ok] - cached) <= t_v
    return visible


def visibility_maps(mesh: TriangleMesh, rig, t_v: float):
    """Depth image and visibility flags for every camera in the rig."""
    depths = {}
    vis = {}
    for cam in rig:
        d = depth_image(mesh, cam)
        depths[cam.id] = d
        vis[cam.id] = classify_visibility(mesh, cam, d, t_v)
    return depths, vis
