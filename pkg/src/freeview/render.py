"""View-dependent rendering.

Reference cameras are ranked by distance to the virtual viewpoint; each
surface triangle is textured from the first-ranked camera that sees it,
so occluded regions fall back to neighboring cameras. Selection is
hard (no blending) and recorded per pixel for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from freeview.camera import CameraModel, CameraRig, back_project, project
from freeview.mesh import TriangleMesh
from freeview.visibility import rasterize

FALLBACK_COLOR = np.array([128, 128, 128], dtype=np.uint8)


@dataclass
class RenderedImage:
    color: np.ndarray  # (H, W, 3) uint8
    source: np.ndarray  # (H, W) int32 camera id, -1 = none
    covered: np.ndarray  # (H, W) bool geometry coverage


def rank_cameras(virtual: CameraModel, rig: CameraRig) -> list:
    """Camera ids by ascending optical-center distance; ties to lower id."""
    keys = sorted((float(np.linalg.norm(c.center - virtual.center)), c.id) for c in rig)
    return [cid for _, cid in keys]


def triangle_sources(ranking, vis, n_triangles: int) -> np.ndarray:
    """First-ranked camera id that sees each triangle; -1 if none does."""
    src = np.full(n_triangles, -1, dtype=np.int32)
    unset = np.ones(n_triangles, dtype=bool)
    for cam_id in ranking:
        take = unset & vis[cam_id]
        src[take] = cam_id
        unset &= ~take
    return src


def sample_bilinear(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear sample of an (H, W, 3) image at float pixel coords,
    clamped to the border."""
    h, w = img.shape[:2]
    u = np.clip(u, 0.0, w - 1.0)
    v = np.clip(v, 0.0, h - 1.0)
    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (u - x0)[:, None]
    fy = (v - y0)[:, None]
    img_f = img.astype(np.float64)
    top = img_f[y0, x0] * (1 - fx) + img_f[y0, x1] * fx
    bot = img_f[y1, x0] * (1 - fx) + img_f[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def render_view(
    mesh: TriangleMesh,
    rig: CameraRig,
    frames: dict,
    vis: dict,
    virtual: CameraModel,
    fallback_color=FALLBACK_COLOR,
) -> RenderedImage:
    """Rasterize the mesh from the virtual camera and texture each pixel
    from the best-ranked camera that sees its triangle.

    ``frames`` and ``vis`` map camera id to the camera's color frame and
    per-triangle visibility flags. Pixels whose triangle no camera sees
    get the fallback color and source -1.
    """
    for cam in rig:
        if cam.id not in frames:
            raise ValueError(f"missing frame for camera {cam.id}")
        if cam.id not in vis:
            raise ValueError(f"missing visibility for camera {cam.id}")

    h, w = virtual.image_height, virtual.image_width
    color = np.zeros((h, w, 3), dtype=np.uint8)
    source = np.full((h, w), -1, dtype=np.int32)

    ras = rasterize(mesh, virtual)
    covered = ras.tri_id >= 0
    if not covered.any():
        return RenderedImage(color, source, covered)

    ranking = rank_cameras(virtual, rig)
    tri_src = triangle_sources(ranking, vis, mesh.num_triangles)

    ys, xs = np.nonzero(covered)
    pix = np.stack([xs, ys], axis=-1).astype(np.float64)
    pts = back_project(virtual, pix, ras.depth[ys, xs])
    px_src = tri_src[ras.tri_id[ys, xs]]

    source[ys, xs] = px_src
    none = px_src == -1
    color[ys[none], xs[none]] = np.asarray(fallback_color, dtype=np.uint8)
    for cam_id in np.unique(px_src):
        if cam_id == -1:
            continue
        sel = px_src == cam_id
        cam = rig.by_id(int(cam_id))
        uv, _, _ = project(cam, pts[sel])
        samp = sample_bilinear(frames[cam_id], uv[:, 0], uv[:, 1])
        color[ys[sel], xs[sel]] = np.clip(np.rint(samp), 0, 255).astype(np.uint8)
    return RenderedImage(color, source, covered)


def source_map_image(rendered: RenderedImage, rig: CameraRig) -> np.ndarray:
    """False-color visualization of the per-pixel source camera."""
    palette = np.array(
        [
            [230, 60, 60], [60, 180, 75], [65, 105, 225], [240, 180, 40],
            [170, 70, 200], [70, 200, 200], [245, 130, 48], [140, 220, 90],
            [200, 100, 160], [100, 140, 240], [180, 180, 60], [90, 90, 90],
        ],
        dtype=np.uint8,
    )
    ids = sorted(c.id for c in rig)
    out = np.zeros((*rendered.source.shape, 3), dtype=np.uint8)
    for pos, cid in enumerate(ids):
        out[rendered.source == cid] = palette[pos % len(palette)]
    out[rendered.covered & (rendered.source == -1)] = [255, 255, 255]
    return out
