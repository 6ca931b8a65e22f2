"""On-disk synthetic scene fixtures consumed by the CLI.

A scene directory holds the calibration manifest, per-camera frames and
foreground-proposal masks, a handful of object-free background frames,
a pipeline config, and the generating ground truth (truth.json).
"""

from __future__ import annotations

import json
import os

import numpy as np

from freeview.camera import CameraRig, load_rig, save_rig
from freeview.imgio import load_image, load_mask, save_image, save_mask
from freeview.pipeline import PipelineConfig
from freeview.silhouette import build_background
from freeview.synthetic import (
    Box,
    Sphere,
    SyntheticScene,
    analytic_silhouette,
    proposal_from_silhouette,
    ring_rig,
    shade_frame,
    validate_in_stage,
)

N_BACKGROUND_FRAMES = 4


def objects_from_spec(spec_list) -> list:
    objs = []
    for entry in spec_list:
        kind = entry.get("type")
        if kind == "sphere":
            objs.append(
                Sphere(
                    center=np.array(entry["center"], dtype=float),
                    radius=float(entry["radius"]),
                    color=np.array(entry.get("color", [200, 80, 60]), dtype=float),
                )
            )
        elif kind == "box":
            objs.append(
                Box(
                    lo=np.array(entry["lo"], dtype=float),
                    hi=np.array(entry["hi"], dtype=float),
                    color=np.array(entry.get("color", [70, 110, 200]), dtype=float),
                )
            )
        else:
            raise ValueError(f"unknown object type {kind!r}")
    return objs


def generate_scene(
    objects,
    rig: CameraRig,
    cfg: PipelineConfig,
    noise_sigma: float = 2.0,
    erode_px: int = 3,
    seed: int = 0,
):
    """Frames, proposals, background frames, and analytic silhouettes."""
    validate_in_stage(objects, cfg.stage_lo, cfg.stage_hi)
    scene = SyntheticScene(rig=rig, objects=objects)
    empty = SyntheticScene(rig=rig, objects=[])
    frames, proposals, sils, bg_frames = {}, {}, {}, {}
    for cam in rig:
        sil = analytic_silhouette(cam, objects)
        sils[cam.id] = sil
        frames[cam.id] = shade_frame(scene, cam, noise_sigma, seed)
        proposals[cam.id] = proposal_from_silhouette(sil, erode_px)
        bg_frames[cam.id] = [
            shade_frame(empty, cam, noise_sigma, seed + 1000 * (i + 1))
            for i in range(N_BACKGROUND_FRAMES)
        ]
    return scene, frames, proposals, sils, bg_frames


def write_scene(out_dir, rig, cfg, objects, frames, proposals, bg_frames) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for sub in ("frames", "proposals", "background"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    save_rig(rig, os.path.join(out_dir, "rig.json"))
    cfg.to_json(os.path.join(out_dir, "config.json"))
    for cam in rig:
        save_image(frames[cam.id], os.path.join(out_dir, f"frames/cam_{cam.id:03d}.png"))
        save_mask(proposals[cam.id], os.path.join(out_dir, f"proposals/cam_{cam.id:03d}.png"))
        for i, bg in enumerate(bg_frames[cam.id]):
            save_image(bg, os.path.join(out_dir, f"background/cam_{cam.id:03d}_{i}.png"))
    truth = []
    for obj in objects:
        if isinstance(obj, Sphere):
            truth.append(
                {"type": "sphere", "center": obj.center.tolist(), "radius": obj.radius,
                 "color": obj.color.tolist()}
            )
        else:
            truth.append(
                {"type": "box", "lo": obj.lo.tolist(), "hi": obj.hi.tolist(),
                 "color": obj.color.tolist()}
            )
    with open(os.path.join(out_dir, "truth.json"), "w", encoding="utf-8") as f:
        json.dump({"objects": truth}, f, indent=2)
        f.write("\n")


def read_scene(scene_dir):
    """Load a scene directory: (rig, cfg, frames, proposals, background models)."""
    rig = load_rig(os.path.join(scene_dir, "rig.json"))
    cfg = PipelineConfig.from_json(os.path.join(scene_dir, "config.json"))
    frames, proposals, background = {}, {}, {}
    for cam in rig:
        frames[cam.id] = load_image(os.path.join(scene_dir, f"frames/cam_{cam.id:03d}.png"))
        proposals[cam.id] = load_mask(os.path.join(scene_dir, f"proposals/cam_{cam.id:03d}.png"))
        bgs = []
        i = 0
        while True:
            p = os.path.join(scene_dir, f"background/cam_{cam.id:03d}_{i}.png")
            if not os.path.exists(p):
                break
            bgs.append(load_image(p))
            i += 1
        background[cam.id] = build_background(bgs)
    return rig, cfg, frames, proposals, background


def read_truth(scene_dir) -> list:
    with open(os.path.join(scene_dir, "truth.json"), "r", encoding="utf-8") as f:
        return objects_from_spec(json.load(f)["objects"])


def default_rig_from_spec(spec: dict) -> CameraRig:
    return ring_rig(
        n_cameras=int(spec.get("n_cameras", 10)),
        target=spec.get("target", (0.0, 0.0, 800.0)),
        ring_radius=float(spec.get("ring_radius", 6000.0)),
        height=float(spec.get("height", 2000.0)),
        width=int(spec.get("width", 960)),
        image_height=int(spec.get("image_height", 540)),
        focal=float(spec.get("focal", 800.0)),
    )
