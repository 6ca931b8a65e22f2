"""Synthetic multi-camera scenes with analytic ground truth.

Spheres and boxes are rendered with exact per-pixel ray tests, so the
silhouettes, shaded frames, and depth values produced here are
closed-form oracles for the reconstruction pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from freeview.camera import CameraModel, CameraRig, pixel_rays

BG_COLOR = np.array([32, 36, 40], dtype=np.float64)
AMBIENT = 0.35


@dataclass
class Sphere:
    center: np.ndarray
    radius: float
    color: np.ndarray = field(default_factory=lambda: np.array([200.0, 80.0, 60.0]))

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def ray_hits(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """Smallest positive ray parameter per ray, +inf on miss."""
        oc = origin - self.center
        b = dirs @ oc
        c = oc @ oc - self.radius**2
        disc = b * b - c
        hit = disc >= 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t0 = -b - sq
        t1 = -b + sq
        t = np.where(t0 > 1e-9, t0, t1)
        return np.where(hit & (t > 1e-9), t, np.inf)

    def normal_at(self, p: np.ndarray) -> np.ndarray:
        n = p - self.center
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.center, axis=-1) <= self.radius

    def aabb(self):
        return self.center - self.radius, self.center + self.radius


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray
    color: np.ndarray = field(default_factory=lambda: np.array([70.0, 110.0, 200.0]))

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        self.hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have positive extent")

    def ray_hits(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / dirs
            t_lo = (self.lo - origin) * inv
            t_hi = (self.hi - origin) * inv
        tmin = np.nanmax(np.minimum(t_lo, t_hi), axis=-1)
        tmax = np.nanmin(np.maximum(t_lo, t_hi), axis=-1)
        hit = (tmax >= np.maximum(tmin, 1e-9)) & (tmax > 1e-9)
        t = np.where(tmin > 1e-9, tmin, tmax)
        return np.where(hit, t, np.inf)

    def normal_at(self, p: np.ndarray) -> np.ndarray:
        mid = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        rel = (p - mid) / half
        n = np.zeros_like(rel)
        ax = np.argmax(np.abs(rel), axis=-1)
        rows = np.arange(len(np.atleast_2d(rel)))
        rel2 = np.atleast_2d(rel)
        n2 = np.atleast_2d(n)
        n2[rows, ax] = np.sign(rel2[rows, ax])
        return n2.reshape(np.shape(p))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def aabb(self):
        return self.lo.copy(), self.hi.copy()


@dataclass
class SyntheticScene:
    rig: CameraRig
    objects: list
    light_dir: np.ndarray = field(default_factory=lambda: np.array([0.3, 0.5, -0.8]))

    def __post_init__(self) -> None:
        self.light_dir = np.asarray(self.light_dir, dtype=np.float64)
        self.light_dir /= np.linalg.norm(self.light_dir)


def look_at_camera(
    cam_id: int,
    center: np.ndarray,
    target: np.ndarray,
    width: int,
    height: int,
    focal: float,
) -> CameraModel:
    """Zero-distortion camera at ``center`` looking at ``target`` (z-up)."""
    center = np.asarray(center, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    z = target - center
    z = z / np.linalg.norm(z)
    up = np.array([0.0, 0.0, 1.0])
    if abs(z @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    x = np.cross(z, up)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    R = np.stack([x, y, z])
    return CameraModel(
        id=cam_id,
        image_width=width,
        image_height=height,
        fx=focal,
        fy=focal,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        rotation=R,
        translation=-R @ center,
    )


def ring_rig(
    n_cameras: int,
    target,
    ring_radius: float,
    height: float,
    width: int = 1920,
    image_height: int = 1080,
    focal: float = 1200.0,
) -> CameraRig:
    """Cameras on a horizontal ring, all aimed at ``target``."""
    target = np.asarray(target, dtype=np.float64)
    cams = []
    for i in range(n_cameras):
        ang = 2.0 * np.pi * i / n_cameras
        center = target + np.array(
            [ring_radius * np.cos(ang), ring_radius * np.sin(ang), height]
        )
        cams.append(look_at_camera(i, center, target, width, image_height, focal))
    return CameraRig(cams)


def cast_rays(objects, origin: np.ndarray, dirs: np.ndarray):
    """Nearest hit over all objects: (t, object index) with t=+inf/-1 on miss."""
    flat = dirs.reshape(-1, 3)
    best_t = np.full(len(flat), np.inf)
    best_o = np.full(len(flat), -1, dtype=np.int32)
    for oi, obj in enumerate(objects):
        t = obj.ray_hits(origin, flat)
        closer = t < best_t
        best_t[closer] = t[closer]
        best_o[closer] = oi
    shape = dirs.shape[:-1]
    return best_t.reshape(shape), best_o.reshape(shape)


def _camera_rays(cam: CameraModel):
    us, vs = np.meshgrid(
        np.arange(cam.image_width, dtype=np.float64),
        np.arange(cam.image_height, dtype=np.float64),
    )
    return pixel_rays(cam, us, vs)


def analytic_silhouette(cam: CameraModel, objects) -> np.ndarray:
    """Exact binary silhouette: a pixel is foreground iff its center ray
    hits any object in front of the camera."""
    origin, dirs = _camera_rays(cam)
    t, _ = cast_rays(objects, origin, dirs)
    return np.isfinite(t)


def shade_frame(
    scene: SyntheticScene,
    cam: CameraModel,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """Lambertian-shaded frame (uint8 RGB), flat background, optional
    seeded Gaussian noise."""
    origin, dirs = _camera_rays(cam)
    t, oi = cast_rays(scene.objects, origin, dirs)
    img = np.broadcast_to(BG_COLOR, (*t.shape, 3)).copy()
    for idx, obj in enumerate(scene.objects):
        hit = oi == idx
        if not hit.any():
            continue
        pts = origin + t[hit, None] * dirs[hit]
        n = obj.normal_at(pts)
        diffuse = np.maximum(0.0, -(n @ scene.light_dir))
        shade = AMBIENT + (1.0 - AMBIENT) * diffuse
        img[hit] = obj.color * shade[:, None]
    if noise_sigma > 0:
        rng = np.random.default_rng(seed + cam.id)
        img = img + rng.normal(0.0, noise_sigma, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def proposal_from_silhouette(sil: np.ndarray, erode_px: int = 3) -> np.ndarray:
    """Imperfect foreground proposal: the true silhouette eroded, mimicking
    a detector that under-segments."""
    if erode_px <= 0:
        return sil.copy()
    return ndimage.binary_erosion(sil, iterations=erode_px)


def scene_silhouettes(scene: SyntheticScene) -> list:
    return [analytic_silhouette(cam, scene.objects) for cam in scene.rig]


def scene_frames(scene: SyntheticScene, noise_sigma: float = 0.0, seed: int = 0) -> list:
    return [shade_frame(scene, cam, noise_sigma, seed) for cam in scene.rig]


def validate_in_stage(objects, stage_lo, stage_hi) -> None:
    stage_lo = np.asarray(stage_lo, dtype=np.float64)
    stage_hi = np.asarray(stage_hi, dtype=np.float64)
    for i, obj in enumerate(objects):
        lo, hi = obj.aabb()
        if np.any(lo < stage_lo) or np.any(hi > stage_hi):
            raise ValueError(f"object {i} extends outside the stage volume")
