"""Command-line interface.

Subcommands: ``synth`` (generate a fixture scene), ``reconstruct``
(scene -> bundle), ``render`` (bundle + virtual pose -> image),
``sweep`` (voxel-size timing sweep), ``orbit`` (emit an orbit pose
fixture with active reference camera ids).
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from freeview.bundle import load_bundle, write_bundle
from freeview.camera import CameraModel
from freeview.imgio import save_image
from freeview.pipeline import PipelineConfig, StageError, run_frame, sweep, sweep_csv
from freeview.render import rank_cameras, render_view, source_map_image
from freeview.scenes import (
    default_rig_from_spec,
    generate_scene,
    objects_from_spec,
    read_scene,
    write_scene,
)

PRESETS = {
    "two-spheres": {
        "objects": [
            {"type": "sphere", "center": [-600, 0, 700], "radius": 400},
            {"type": "sphere", "center": [800, 200, 600], "radius": 300,
             "color": [60, 180, 90]},
        ],
        "rig": {"n_cameras": 10, "target": [0, 0, 600], "ring_radius": 6000,
                "height": 2200, "width": 960, "image_height": 540, "focal": 800},
        "stage_lo": [-2000, -2000, 0],
        "stage_hi": [2000, 2000, 1500],
    },
}


def _config_overrides(cfg: PipelineConfig, **kw) -> PipelineConfig:
    from dataclasses import replace

    updates = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **updates) if updates else cfg


@click.group()
def main():
    """Free-viewpoint reconstruction pipeline."""


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None,
              help="JSON scene spec: objects, rig, stage, noise.")
@click.option("--noise-sigma", type=float, default=2.0)
@click.option("--seed", type=int, default=0)
def synth(out_dir, preset, spec_path, noise_sigma, seed):
    """Generate a synthetic fixture scene directory."""
    if (preset is None) == (spec_path is None):
        raise click.UsageError("give exactly one of --preset / --spec")
    spec = PRESETS[preset] if preset else json.load(open(spec_path, encoding="utf-8"))
    objects = objects_from_spec(spec["objects"])
    rig = default_rig_from_spec(spec.get("rig", {}))
    cfg = PipelineConfig(
        stage_lo=tuple(spec.get("stage_lo", (-2000, -2000, 0))),
        stage_hi=tuple(spec.get("stage_hi", (2000, 2000, 1500))),
        **spec.get("config", {}),
    )
    _, frames, proposals, _, bg_frames = generate_scene(
        objects, rig, cfg, noise_sigma=spec.get("noise_sigma", noise_sigma), seed=seed
    )
    write_scene(out_dir, rig, cfg, objects, frames, proposals, bg_frames)
    click.echo(f"scene written to {out_dir}")


@main.command()
@click.option("--scene", "scene_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--coarse-spacing", type=float, default=None)
@click.option("--fine-spacing", type=float, default=None)
@click.option("--min-views", type=int, default=None)
@click.option("--t-small", type=int, default=None)
@click.option("--t-large", type=float, default=None)
@click.option("--roi-margin", type=float, default=None)
@click.option("--t-v", type=float, default=None)
@click.option("--iso-mode", type=click.Choice(["exact", "fixed"]), default=None)
@click.option("--fixed-isovalue", type=float, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--frame-id", type=int, default=0)
@click.option("--export-depth", is_flag=True, help="also dump 16-bit depth PNGs")
def reconstruct(scene_dir, out_dir, export_depth, frame_id, **overrides):
    """Reconstruct a scene frame into a bundle directory."""
    rig, cfg, frames, proposals, background = read_scene(scene_dir)
    cfg = _config_overrides(cfg, **overrides)
    try:
        bundle = run_frame(
            cfg, rig, frames, proposals=proposals, background=background,
            frame_id=frame_id, keep_depths=export_depth,
        )
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    write_bundle(bundle, out_dir, export_depth=export_depth)
    click.echo(
        f"bundle written to {out_dir}: {bundle.num_objects} objects, "
        f"{bundle.stats.get('triangles', 0)} triangles"
    )


def orbit_pose(stage_lo, stage_hi, azimuth_deg, elevation_deg, radius, ref: CameraModel,
               cam_id: int = 1000) -> CameraModel:
    """Virtual camera on an orbit around the stage center."""
    target = 0.5 * (np.asarray(stage_lo) + np.asarray(stage_hi))
    az = np.deg2rad(azimuth_deg)
    el = np.deg2rad(elevation_deg)
    center = target + radius * np.array(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
    )
    from freeview.synthetic import look_at_camera

    return look_at_camera(
        cam_id, center, target, ref.image_width, ref.image_height, ref.fx
    )


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--azimuth", type=float, default=None, help="orbit azimuth, degrees")
@click.option("--elevation", type=float, default=20.0)
@click.option("--radius", type=float, default=None, help="orbit radius, mm")
@click.option("--camera-id", type=int, default=None,
              help="render from this input camera's exact pose instead")
@click.option("--source-map", "source_map_path", type=click.Path(), default=None)
def render(bundle_dir, out_path, azimuth, elevation, radius, camera_id, source_map_path):
    """Render a novel viewpoint from a bundle."""
    b = load_bundle(bundle_dir)
    if camera_id is not None:
        virtual = b.rig.by_id(camera_id)
    else:
        if azimuth is None:
            raise click.UsageError("give --azimuth (and optionally --radius) or --camera-id")
        if radius is None:
            radius = 1.2 * float(np.linalg.norm(b.rig[0].center))
        virtual = orbit_pose(b.stage_lo, b.stage_hi, azimuth, elevation, radius, b.rig[0])
    out = render_view(b.merged_mesh, b.rig, b.textures, b.visibility, virtual)
    save_image(out.color, out_path)
    if source_map_path:
        save_image(source_map_image(out, b.rig), source_map_path)
    click.echo(f"rendered {out_path} (covered px: {int(out.covered.sum())})")


@main.command("sweep")
@click.option("--scene", "scene_dir", required=True, type=click.Path(exists=True))
@click.option("--axis", type=click.Choice(["coarse_spacing", "fine_spacing"]), required=True)
@click.option("--values", required=True, help="comma-separated ascending spacings (mm)")
@click.option("--out", "out_csv", required=True, type=click.Path())
def sweep_cmd(scene_dir, axis, values, out_csv):
    """Timing sweep over voxel spacings on a fixed scene."""
    from freeview.pipeline import compute_silhouettes

    rig, cfg, frames, proposals, background = read_scene(scene_dir)
    sils = compute_silhouettes(cfg, rig, frames, proposals, background)
    vals = [float(v) for v in values.split(",")]
    rows = sweep(cfg, rig, sils, axis, vals)
    sweep_csv(rows, out_csv)
    for v, t in rows:
        click.echo(f"{axis}={v:g}mm total={t.total:.1f}ms")


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--poses", "n_poses", type=int, default=64)
@click.option("--elevation", type=float, default=20.0)
@click.option("--radius", type=float, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def orbit(bundle_dir, n_poses, elevation, radius, out_path):
    """Emit an orbit pose fixture with the active reference camera per pose."""
    b = load_bundle(bundle_dir)
    if radius is None:
        radius = 1.2 * float(np.linalg.norm(b.rig[0].center))
    entries = []
    for i in range(n_poses):
        # half-step offset keeps poses off exact camera positions and
        # inter-camera bisectors, where the nearest camera is a knife-edge
        az = 360.0 * (i + 0.5) / n_poses
        cam = orbit_pose(b.stage_lo, b.stage_hi, az, elevation, radius, b.rig[0])
        ranking = rank_cameras(cam, b.rig)
        entries.append(
            {
                "azimuth_deg": az,
                "elevation_deg": elevation,
                "radius_mm": radius,
                "position": cam.center.tolist(),
                "ranking": ranking,
                "active_camera": ranking[0],
            }
        )
    target = (0.5 * (b.stage_lo + b.stage_hi)).tolist()
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump({"target": target, "poses": entries}, f, indent=2)
        f.write("\n")
    click.echo(f"orbit fixture with {n_poses} poses written to {out_path}")


if __name__ == "__main__":
    main()
