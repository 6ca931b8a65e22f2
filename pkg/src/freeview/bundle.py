"""Scene bundle: the on-disk per-frame package.

A bundle directory holds the calibration manifest, one PLY mesh per
reconstructed object, the per-camera texture frames, per-camera
per-triangle visibility vectors (uint8, aligned with the concatenation
of the object meshes in manifest order), and a versioned JSON manifest.
Stage timings go to a sidecar (timings.json) so the content files stay
byte-reproducible across runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from freeview.camera import CameraRig, load_rig, save_rig
from freeview.imgio import load_image, save_depth_png, save_image
from freeview.mesh import TriangleMesh
from freeview.meshio import load_ply, save_ply

SCHEMA_VERSION = 1


@dataclass
class StageTimings:
    """Per-stage wall-clock milliseconds, I/O excluded."""

    sparse_carve: float = 0.0  # B-1
    noise_filter_roi: float = 0.0  # B-2
    dense_carve: float = 0.0  # B-3
    polygonize: float = 0.0  # C
    depth_images: float = 0.0  # D-1
    visibility: float = 0.0  # D-2

    LABELS = (
        ("sparse_carve", "(B-1) Sparse visual hull"),
        ("noise_filter_roi", "(B-2) Noise filtering & 3D ROI extraction"),
        ("dense_carve", "(B-3) Dense visual hull"),
        ("polygonize", "(C) Polygonization"),
        ("depth_images", "(D-1) Computation of depth image"),
        ("visibility", "(D-2) Visibility detection"),
    )

    @property
    def total(self) -> float:
        return sum(getattr(self, k) for k, _ in self.LABELS)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k, _ in self.LABELS}


@dataclass
class SceneBundle:
    frame_id: int
    rig: CameraRig
    meshes: list  # per-object TriangleMesh, ascending object id
    textures: dict  # camera id -> (H, W, 3) uint8
    visibility: dict  # camera id -> (T,) bool over the merged mesh
    timings: StageTimings = field(default_factory=StageTimings)
    stats: dict = field(default_factory=dict)
    stage_lo: np.ndarray = None
    stage_hi: np.ndarray = None
    depths: dict = field(default_factory=dict)  # optional debug depth images

    @property
    def merged_mesh(self) -> TriangleMesh:
        return TriangleMesh.concatenate(self.meshes)

    @property
    def num_objects(self) -> int:
        return len(self.meshes)


def write_bundle(bundle: SceneBundle, out_dir, export_depth: bool = False) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for sub in ("meshes", "textures", "visibility"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)

    save_rig(bundle.rig, os.path.join(out_dir, "rig.json"))

    mesh_entries = []
    for m in bundle.meshes:
        oid = int(m.object_ids[0]) if m.num_triangles else 0
        rel = f"meshes/object_{oid:03d}.ply"
        save_ply(m, os.path.join(out_dir, rel))
        mesh_entries.append({"object_id": oid, "file": rel, "triangles": m.num_triangles})

    tex_entries = {}
    for cam_id in sorted(bundle.textures):
        rel = f"textures/cam_{cam_id:03d}.png"
        save_image(bundle.textures[cam_id], os.path.join(out_dir, rel))
        tex_entries[str(cam_id)] = rel

    total_tris = bundle.merged_mesh.num_triangles
    vis_entries = {}
    for cam_id in sorted(bundle.visibility):
        rel = f"visibility/cam_{cam_id:03d}.bin"
        flags = np.asarray(bundle.visibility[cam_id], dtype=np.uint8)
        if len(flags) != total_tris:
            raise ValueError(
                f"camera {cam_id}: {len(flags)} visibility flags for {total_tris} triangles"
            )
        flags.tofile(os.path.join(out_dir, rel))
        vis_entries[str(cam_id)] = {"file": rel, "triangles": total_tris}

    if export_depth and bundle.depths:
        os.makedirs(os.path.join(out_dir, "depth"), exist_ok=True)
        for cam_id in sorted(bundle.depths):
            save_depth_png(
                bundle.depths[cam_id],
                os.path.join(out_dir, "depth", f"cam_{cam_id:03d}.png"),
            )

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "frame_id": bundle.frame_id,
        "rig": "rig.json",
        "stage": {
            "lo": list(map(float, bundle.stage_lo)) if bundle.stage_lo is not None else None,
            "hi": list(map(float, bundle.stage_hi)) if bundle.stage_hi is not None else None,
        },
        "meshes": mesh_entries,
        "textures": tex_entries,
        "visibility": vis_entries,
        "stats": bundle.stats,
        "timings_file": "timings.json",
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out_dir, "timings.json"), "w", encoding="utf-8") as f:
        json.dump(bundle.timings.to_dict(), f, indent=2)
        f.write("\n")


def load_bundle(bundle_dir) -> SceneBundle:
    with open(os.path.join(bundle_dir, "manifest.json"), "r", encoding="utf-8") as f:
        manifest = json.load(f)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported bundle schema {manifest.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    for entry in manifest["meshes"]:
        if not os.path.exists(os.path.join(bundle_dir, entry["file"])):
            raise FileNotFoundError(f"bundle references missing mesh {entry['file']}")

    rig = load_rig(os.path.join(bundle_dir, manifest["rig"]))
    meshes = [load_ply(os.path.join(bundle_dir, e["file"])) for e in manifest["meshes"]]
    textures = {
        int(cid): load_image(os.path.join(bundle_dir, rel))
        for cid, rel in manifest["textures"].items()
    }
    visibility = {
        int(cid): np.fromfile(
            os.path.join(bundle_dir, e["file"]), dtype=np.uint8, count=e["triangles"]
        ).astype(bool)
        for cid, e in manifest["visibility"].items()
    }
    timings = StageTimings()
    tpath = os.path.join(bundle_dir, manifest.get("timings_file", "timings.json"))
    if os.path.exists(tpath):
        with open(tpath, "r", encoding="utf-8") as f:
            timings = StageTimings(**json.load(f))
    stage = manifest.get("stage") or {}
    return SceneBundle(
        frame_id=manifest["frame_id"],
        rig=rig,
        meshes=meshes,
        textures=textures,
        visibility=visibility,
        timings=timings,
        stats=manifest.get("stats", {}),
        stage_lo=np.array(stage["lo"]) if stage.get("lo") else None,
        stage_hi=np.array(stage["hi"]) if stage.get("hi") else None,
    )
