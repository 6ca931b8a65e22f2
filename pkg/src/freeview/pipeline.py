"""End-to-end orchestration: configuration, per-frame reconstruction,
and the voxel-size sweep harness.

Stage timings mirror the processing steps: B-1 sparse carve, B-2 noise
filtering and ROI extraction, B-3 dense carve, C polygonization, D-1
depth images, D-2 visibility detection. Wall-clock per stage, I/O
excluded.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from freeview.bundle import SceneBundle, StageTimings
from freeview.camera import CameraRig
from freeview.hull import (
    NoiseFilterParams,
    carve,
    dense_carve,
    extract_rois,
    filter_noise,
    label_components,
)
from freeview.mesh import TriangleMesh, polygonize
from freeview.silhouette import AdaptiveParams, distance_map, extract_silhouette
from freeview.visibility import rasterize, classify_visibility
from freeview.voxels import GridSpec


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    stage_lo: tuple = (-9000.0, -9000.0, 0.0)
    stage_hi: tuple = (9000.0, 9000.0, 9000.0)
    coarse_spacing: float = 50.0
    fine_spacing: float = 20.0
    min_views: int = 1
    t_small: int = 5
    t_large: float = float("inf")
    roi_margin: float = None  # default: one coarse voxel
    t_v: float = None  # default: 3 * fine_spacing
    iso_mode: str = "exact"
    fixed_isovalue: float = 0.5
    theta_near: float = 3.0
    theta_far: float = 8.0
    d_max: float = 32.0
    block_dims: tuple = (16, 16, 16)
    workers: int = 1

    def __post_init__(self) -> None:
        self.stage_lo = tuple(float(v) for v in self.stage_lo)
        self.stage_hi = tuple(float(v) for v in self.stage_hi)
        if self.fine_spacing > self.coarse_spacing:
            raise ValueError("fine_spacing must be <= coarse_spacing")
        if any(hi <= lo for lo, hi in zip(self.stage_lo, self.stage_hi)):
            raise ValueError("stage volume must be nonempty")
        if self.t_small < 0 or self.t_v is not None and self.t_v < 0:
            raise ValueError("thresholds must be nonnegative")
        if self.roi_margin is None:
            self.roi_margin = self.coarse_spacing
        if self.t_v is None:
            self.t_v = 3.0 * self.fine_spacing
        if self.iso_mode not in ("exact", "fixed"):
            raise ValueError(f"unknown isovalue mode {self.iso_mode!r}")

    @property
    def adaptive_params(self) -> AdaptiveParams:
        return AdaptiveParams(self.theta_near, self.theta_far, self.d_max)

    @property
    def noise_params(self) -> NoiseFilterParams:
        return NoiseFilterParams(self.t_small, self.t_large)

    def coarse_spec(self) -> GridSpec:
        return GridSpec.from_aabb(self.stage_lo, self.stage_hi, self.coarse_spacing)

    def to_json(self, path) -> None:
        d = asdict(self)
        d["t_large"] = None if np.isinf(self.t_large) else self.t_large
        with open(path, "w", encoding="utf-8") as f:
            json.dump(d, f, indent=2)
            f.write("\n")

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as f:
            d = json.load(f)
        if d.get("t_large") is None:
            d["t_large"] = float("inf")
        d = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}
        return cls(**d)


def compute_silhouettes(cfg: PipelineConfig, rig: CameraRig, frames, proposals, background):
    """Adaptive silhouette extraction for every camera."""
    sils = []
    for cam in rig:
        dm = distance_map(proposals[cam.id])
        sils.append(
            extract_silhouette(frames[cam.id], background[cam.id], dm, cfg.adaptive_params)
        )
    return sils


def run_frame(
    cfg: PipelineConfig,
    rig: CameraRig,
    frames: dict,
    sils=None,
    proposals: dict = None,
    background: dict = None,
    frame_id: int = 0,
    keep_depths: bool = False,
) -> SceneBundle:
    """Reconstruct one frame into an in-memory SceneBundle.

    Silhouettes are either supplied directly or extracted from
    frames/proposals against the background model. An empty scene (no
    components survive filtering) yields a valid empty bundle.
    """
    if sils is None:
        if proposals is None or background is None:
            raise StageError("silhouette", ValueError("need sils or proposals+background"))
        try:
            sils = compute_silhouettes(cfg, rig, frames, proposals, background)
        except Exception as exc:
            raise StageError("silhouette", exc) from exc

    timings = StageTimings()
    stats = {}

    def timed(stage_attr, stage_name, fn):
        t0 = time.perf_counter()
        try:
            out = fn()
        except Exception as exc:
            raise StageError(stage_name, exc) from exc
        setattr(timings, stage_attr, (time.perf_counter() - t0) * 1e3)
        return out

    spec = cfg.coarse_spec()
    stats["sparse_tests"] = spec.num_voxels

    coarse = timed(
        "sparse_carve", "B-1 sparse carve",
        lambda: carve(rig, sils, spec, cfg.min_views, cfg.workers),
    )
    stats["sparse_occupied"] = coarse.occupied_count

    def stage_b2():
        lab = label_components(coarse, cfg.block_dims)
        _, lab_f = filter_noise(coarse, lab, cfg.noise_params)
        return lab_f, extract_rois(lab_f, spec, cfg.roi_margin)

    lab_f, rois = timed("noise_filter_roi", "B-2 noise filter/ROI", stage_b2)
    stats["components"] = len(lab_f.components)

    fine_grids = timed(
        "dense_carve", "B-3 dense carve",
        lambda: dense_carve(rig, sils, rois, cfg.fine_spacing, cfg.min_views, cfg.workers),
    )
    stats["dense_tests"] = sum(g.spec.num_voxels for g in fine_grids)
    stats["dense_occupied"] = sum(g.occupied_count for g in fine_grids)

    def stage_c():
        meshes = []
        fallback = inconsistent = 0
        for roi, grid in zip(rois, fine_grids):
            m, st = polygonize(
                grid,
                rig,
                sils,
                mode=cfg.iso_mode,
                fixed_isovalue=cfg.fixed_isovalue,
                object_id=roi.component_id,
            )
            fallback += st.fallback_edges
            inconsistent += st.inconsistent_starts
            meshes.append(m)
        return meshes, fallback, inconsistent

    meshes, fallback, inconsistent = timed("polygonize", "C polygonize", stage_c)
    stats["fallback_edges"] = fallback
    stats["inconsistent_edge_starts"] = inconsistent
    merged = TriangleMesh.concatenate(meshes)
    stats["triangles"] = merged.num_triangles

    depths = timed(
        "depth_images", "D-1 depth images",
        lambda: {cam.id: rasterize(merged, cam).depth for cam in rig},
    )
    vis = timed(
        "visibility", "D-2 visibility",
        lambda: {
            cam.id: classify_visibility(merged, cam, depths[cam.id], cfg.t_v) for cam in rig
        },
    )

    return SceneBundle(
        frame_id=frame_id,
        rig=rig,
        meshes=meshes,
        textures=dict(frames),
        visibility=vis,
        timings=timings,
        stats=stats,
        stage_lo=np.array(cfg.stage_lo),
        stage_hi=np.array(cfg.stage_hi),
        depths=depths if keep_depths else {},
    )


def sweep(cfg: PipelineConfig, rig: CameraRig, sils, axis: str, values) -> list:
    """run_frame once per spacing value on fixed inputs.

    Returns [(value, StageTimings)]; values must be ascending.
    """
    if axis not in ("coarse_spacing", "fine_spacing"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    if list(values) != sorted(values):
        raise ValueError("sweep values must be ascending")
    rows = []
    for v in values:
        if axis == "coarse_spacing":
            run_cfg = replace(cfg, coarse_spacing=float(v), roi_margin=None, t_v=cfg.t_v)
            # fine spacing may not exceed the coarse value under test
            if run_cfg.fine_spacing > run_cfg.coarse_spacing:
                raise ValueError(f"coarse value {v} below fine_spacing")
        else:
            run_cfg = replace(cfg, fine_spacing=float(v), t_v=None)
        bundle = run_frame(run_cfg, rig, frames={c.id: None for c in rig}, sils=sils)
        rows.append((float(v), bundle.timings))
    return rows


def sweep_csv(rows, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["value"] + [label for _, label in StageTimings.LABELS] + ["total"])
        for value, t in rows:
            w.writerow([value] + [f"{getattr(t, k):.3f}" for k, _ in StageTimings.LABELS]
                       + [f"{t.total:.3f}"])
