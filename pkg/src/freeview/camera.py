"""Camera models, projection, and calibration manifest ingestion.

Conventions used throughout the package:

* World coordinates are millimetres, right-handed, z-up.
* ``rotation`` maps world to camera coordinates; the camera looks down
  its +z axis. The optical center is ``C = -R.T @ t``.
* Pixel (0, 0) is the center of the top-left pixel, so a camera with
  principal point (cx, cy) maps its optical axis to exactly (cx, cy).

The distortion chain is the 5-coefficient Bouguet model: normalize,
apply radial (k1, k2, k3) and tangential (p1, p2) terms, then scale by
focal lengths and skew and offset by the principal point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class CalibrationError(ValueError):
    """Raised when a calibration manifest fails validation."""


@dataclass
class CameraModel:
    id: int
    image_width: int
    image_height: int
    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0
    dist: np.ndarray = field(default_factory=lambda: np.zeros(5))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        self.dist = np.asarray(self.dist, dtype=np.float64).reshape(5)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.validate()

    def validate(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise CalibrationError(f"camera {self.id}: focal lengths must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise CalibrationError(f"camera {self.id}: image size must be positive")
        R = self.rotation
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-6):
            raise CalibrationError(f"camera {self.id}: rotation is not orthonormal")
        if not np.isclose(np.linalg.det(R), 1.0, atol=1e-6):
            raise CalibrationError(f"camera {self.id}: rotation determinant is not +1")
        if not np.all(np.isfinite(self.center)):
            raise CalibrationError(f"camera {self.id}: camera center is not finite")

    @property
    def center(self) -> np.ndarray:
        """Optical center in world coordinates (mm)."""
        return -self.rotation.T @ self.translation

    @property
    def has_distortion(self) -> bool:
        return bool(np.any(self.dist != 0.0))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "image_size": [self.image_width, self.image_height],
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "skew": self.skew,
            "dist": self.dist.tolist(),
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        try:
            return cls(
                id=int(d["id"]),
                image_width=int(d["image_size"][0]),
                image_height=int(d["image_size"][1]),
                fx=float(d["fx"]),
                fy=float(d["fy"]),
                cx=float(d["cx"]),
                cy=float(d["cy"]),
                skew=float(d.get("skew", 0.0)),
                dist=np.array(d.get("dist", [0.0] * 5), dtype=np.float64),
                rotation=np.array(d["rotation"], dtype=np.float64),
                translation=np.array(d["translation"], dtype=np.float64),
            )
        except (KeyError, TypeError) as exc:
            raise CalibrationError(f"malformed camera entry: {exc}") from exc


@dataclass
class CameraRig:
    cameras: list

    def __post_init__(self) -> None:
        if len(self.cameras) < 1:
            raise CalibrationError("rig must contain at least one camera")
        ids = [c.id for c in self.cameras]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise CalibrationError(f"duplicate camera ids: {dupes}")

    def __len__(self) -> int:
        return len(self.cameras)

    def __iter__(self):
        return iter(self.cameras)

    def __getitem__(self, idx: int) -> CameraModel:
        return self.cameras[idx]

    def by_id(self, cam_id: int) -> CameraModel:
        for c in self.cameras:
            if c.id == cam_id:
                return c
        raise KeyError(f"no camera with id {cam_id}")

    def to_dict(self) -> dict:
        return {"cameras": [c.to_dict() for c in self.cameras]}


def load_rig(path) -> CameraRig:
    """Load a calibration manifest (JSON, schema in docs/formats.md)."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"cannot parse calibration manifest {path}: {exc}") from exc
    if not isinstance(data, dict) or "cameras" not in data:
        raise CalibrationError(f"{path}: manifest must contain a 'cameras' list")
    cams = [CameraModel.from_dict(entry) for entry in data["cameras"]]
    return CameraRig(cams)


def save_rig(rig: CameraRig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(rig.to_dict(), f, indent=2)
        f.write("\n")


def distort(cam: CameraModel, xn: np.ndarray, yn: np.ndarray):
    """Apply radial/tangential distortion to normalized coordinates."""
    k1, k2, p1, p2, k3 = cam.dist
    r2 = xn * xn + yn * yn
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = xn * radial + 2.0 * p1 * xn * yn + p2 * (r2 + 2.0 * xn * xn)
    yd = yn * radial + p1 * (r2 + 2.0 * yn * yn) + 2.0 * p2 * xn * yn
    return xd, yd


def project(cam: CameraModel, p, use_distortion: bool = True):
    """Project world points to pixels.

    Accepts a single 3-vector or an (N, 3) array. Returns
    ``(pixel, depth, in_frustum)`` where depth is the camera-frame z in
    mm and in_frustum is true iff depth > 0 and the (distorted) pixel
    rounds into the image bounds. Points behind the camera are never
    in-frustum.
    """
    pts = np.asarray(p, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)

    pc = pts @ cam.rotation.T + cam.translation
    z = pc[:, 2]
    safe_z = np.where(z != 0.0, z, 1.0)
    xn = pc[:, 0] / safe_z
    yn = pc[:, 1] / safe_z
    if use_distortion and cam.has_distortion:
        xd, yd = distort(cam, xn, yn)
    else:
        xd, yd = xn, yn
    u = cam.fx * (xd + cam.skew * yd) + cam.cx
    v = cam.fy * yd + cam.cy

    iu = np.rint(u)
    iv = np.rint(v)
    in_frustum = (
        (z > 0.0)
        & (iu >= 0)
        & (iu <= cam.image_width - 1)
        & (iv >= 0)
        & (iv <= cam.image_height - 1)
    )
    pixel = np.stack([u, v], axis=-1)
    if single:
        return pixel[0], float(z[0]), bool(in_frustum[0])
    return pixel, z, in_frustum


def back_project(cam: CameraModel, pixel, depth):
    """Invert the zero-distortion projection at a given depth.

    Only the linear pinhole part is inverted; cameras with nonzero
    distortion coefficients are rejected.
    """
    if cam.has_distortion:
        raise ValueError("back_project supports zero-distortion cameras only")
    px = np.atleast_2d(np.asarray(pixel, dtype=np.float64))
    d = np.atleast_1d(np.asarray(depth, dtype=np.float64))
    yn = (px[:, 1] - cam.cy) / cam.fy
    xn = (px[:, 0] - cam.cx) / cam.fx - cam.skew * yn
    pc = np.stack([xn * d, yn * d, d], axis=-1)
    pw = (pc - cam.translation) @ cam.rotation
    if np.asarray(pixel).ndim == 1:
        return pw[0]
    return pw


def pixel_rays(cam: CameraModel, us: np.ndarray, vs: np.ndarray):
    """World-space origin and unit directions of rays through pixel centers.

    Zero-distortion cameras only (synthetic rigs and virtual viewpoints).
    """
    if cam.has_distortion:
        raise ValueError("pixel_rays supports zero-distortion cameras only")
    yn = (vs - cam.cy) / cam.fy
    xn = (us - cam.cx) / cam.fx - cam.skew * yn
    d_cam = np.stack([xn, yn, np.ones_like(xn)], axis=-1)
    d_world = d_cam @ cam.rotation
    d_world /= np.linalg.norm(d_world, axis=-1, keepdims=True)
    return cam.center, d_world
