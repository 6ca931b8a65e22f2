import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from freeview.camera import CameraRig
from freeview.synthetic import Sphere, SyntheticScene, ring_rig, scene_silhouettes


@pytest.fixture(scope="session")
def small_rig() -> CameraRig:
    """12 low-res cameras on a ring, aimed at the stage center."""
    return ring_rig(
        12, target=(0, 0, 500), ring_radius=4000, height=1200,
        width=480, image_height=270, focal=400,
    )


@pytest.fixture(scope="session")
def sphere_scene(small_rig):
    scene = SyntheticScene(rig=small_rig, objects=[Sphere(center=(0, 0, 500), radius=400)])
    return scene, scene_silhouettes(scene)


@pytest.fixture(scope="session")
def two_sphere_scene(small_rig):
    objs = [
        Sphere(center=(-500, 0, 500), radius=350),
        Sphere(center=(700, 0, 500), radius=300, color=np.array([60.0, 180.0, 90.0])),
    ]
    scene = SyntheticScene(rig=small_rig, objects=objs)
    return scene, scene_silhouettes(scene)
