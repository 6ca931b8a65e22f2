"""Mesh export/import: binary little-endian PLY and text OBJ.

PLY faces carry an int32 ``object_id`` property; OBJ encodes object ids
as ``g object_<id>`` groups.
"""

from __future__ import annotations

import numpy as np

from freeview.mesh import TriangleMesh


def save_ply(mesh: TriangleMesh, path) -> None:
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(mesh.vertices)}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        f"element face {mesh.num_triangles}\n"
        "property list uchar int vertex_indices\n"
        "property int object_id\n"
        "end_header\n"
    )
    verts = mesh.vertices.astype("<f4")
    face_dtype = np.dtype(
        [("n", "u1"), ("idx", "<i4", (3,)), ("oid", "<i4")]
    )
    faces = np.empty(mesh.num_triangles, dtype=face_dtype)
    faces["n"] = 3
    faces["idx"] = mesh.triangles.astype("<i4")
    faces["oid"] = mesh.object_ids.astype("<i4")
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(verts.tobytes())
        f.write(faces.tobytes())


def load_ply(path) -> TriangleMesh:
    with open(path, "rb") as f:
        raw = f.read()
    end = raw.index(b"end_header\n") + len(b"end_header\n")
    header = raw[:end].decode("ascii").splitlines()
    if "format binary_little_endian 1.0" not in header:
        raise ValueError(f"{path}: expected binary little-endian PLY")
    n_vert = n_face = 0
    for line in header:
        if line.startswith("element vertex"):
            n_vert = int(line.split()[-1])
        elif line.startswith("element face"):
            n_face = int(line.split()[-1])
    body = raw[end:]
    verts = np.frombuffer(body, dtype="<f4", count=3 * n_vert).reshape(n_vert, 3)
    face_dtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,)), ("oid", "<i4")])
    faces = np.frombuffer(body[verts.nbytes :], dtype=face_dtype, count=n_face)
    if n_face and not np.all(faces["n"] == 3):
        raise ValueError(f"{path}: non-triangular face")
    return TriangleMesh(
        verts.astype(np.float64),
        faces["idx"].astype(np.int32),
        faces["oid"].astype(np.int32),
    )


def save_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        for v in mesh.vertices:
            f.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        current = None
        order = np.argsort(mesh.object_ids, kind="stable")
        for t in order:
            oid = int(mesh.object_ids[t])
            if oid != current:
                f.write(f"g object_{oid}\n")
                current = oid
            a, b, c = (int(i) + 1 for i in mesh.triangles[t])
            f.write(f"f {a} {b} {c}\n")
