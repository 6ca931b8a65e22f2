"""Multi-camera free-viewpoint reconstruction.

Converts synchronized frames plus silhouettes into per-object polygonal
meshes via a coarse-to-fine volumetric visual hull, then renders novel
viewpoints with occlusion-aware, view-dependent texturing.
"""

from freeview.camera import CameraModel, CameraRig, load_rig, project
from freeview.voxels import GridSpec, VoxelGrid

__all__ = [
    "CameraModel",
    "CameraRig",
    "load_rig",
    "project",
    "GridSpec",
    "VoxelGrid",
]

__version__ = "0.1.0"
