"""Triangle meshes, rigid transforms, bounding boxes, hulls and mass properties.

All coordinates are meters. Meshes are immutable after construction so they
can be shared freely between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateGeometryError, MeshValidationError

HULL_TOLERANCE = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup. ``vertices`` is (n, 3) float64, ``triangles`` (m, 3) int32."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if t.shape[0] < 1:
            raise MeshValidationError("mesh has no triangles")
        if v.shape[0] < 3:
            raise MeshValidationError("mesh has fewer than 3 vertices")
        if not np.isfinite(v).all():
            raise MeshValidationError("mesh has non-finite vertex coordinates")
        if t.min() < 0 or t.max() >= v.shape[0]:
            raise MeshValidationError(
                f"triangle index out of range (vertex count {v.shape[0]})"
            )
        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "triangles", _readonly(t))

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_corners(self) -> np.ndarray:
        """Corner coordinates per triangle, shape (m, 3, 3)."""
        return self.vertices[self.triangles]

    def aabb(self) -> "Aabb":
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, min and max corners in meters."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise MeshValidationError("AABB corners must be finite")
        if (lo > hi + 1e-12).any():
            raise MeshValidationError("AABB min corner exceeds max corner")
        object.__setattr__(self, "lo", _readonly(lo))
        object.__setattr__(self, "hi", _readonly(hi))

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def overlaps(self, other: "Aabb", tol: float = 0.0) -> bool:
        return bool(
            (self.lo <= other.hi + tol).all() and (other.lo <= self.hi + tol).all()
        )


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation composed as Rz(yaw) @ Ry(roll) @ Rx(pitch)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    ry = np.array([[cr, 0, sr], [0, 1, 0], [-sr, 0, cr]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (roll about Y, pitch about X, yaw about Z) plus translation.

    The rotation acts first, composed as Rz(yaw) @ Ry(roll) @ Rx(pitch).
    """

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    xyz: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        vals = (self.roll, self.pitch, self.yaw, *self.xyz)
        if not all(math.isfinite(v) for v in vals):
            raise MeshValidationError("transform has non-finite components")
        object.__setattr__(self, "xyz", tuple(float(v) for v in self.xyz))

    @property
    def rpy(self) -> tuple[float, float, float]:
        return (self.roll, self.pitch, self.yaw)

    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.roll, self.pitch, self.yaw)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix().T + np.asarray(self.xyz)


def transform_mesh(mesh: TriangleMesh, transform: RigidTransform) -> TriangleMesh:
    """Apply a rigid transform to every vertex; topology is unchanged."""
    return TriangleMesh(transform.apply(mesh.vertices), mesh.triangles)


def rotate_mesh(mesh: TriangleMesh, roll: float, pitch: float, yaw: float) -> TriangleMesh:
    return TriangleMesh(
        mesh.vertices @ rotation_matrix(roll, pitch, yaw).T, mesh.triangles
    )


def convex_hull(mesh: TriangleMesh) -> TriangleMesh:
    """Convex hull as a watertight mesh with outward-facing triangle normals.

    Raises DegenerateGeometryError for coplanar/collinear input; inputs are
    never perturbed.
    """
    pts = mesh.vertices
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateGeometryError(f"convex hull failed: {exc}") from exc
    if hull.volume <= HULL_TOLERANCE:
        raise DegenerateGeometryError("input points are degenerate (near-zero hull volume)")
    used = hull.vertices
    remap = np.full(pts.shape[0], -1, dtype=np.int32)
    remap[used] = np.arange(used.shape[0], dtype=np.int32)
    verts = pts[used]
    tris = remap[hull.simplices]
    # qhull does not guarantee winding; orient each triangle along its
    # outward plane equation normal.
    corners = verts[tris]
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    flip = np.einsum("ij,ij->i", cross, hull.equations[:, :3]) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return TriangleMesh(verts, tris)


def _signed_volumes_and_centroids(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    c = mesh.triangle_corners()
    vols = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0
    cents = c.sum(axis=1) / 4.0  # tetrahedra against the origin
    return vols, cents


def mesh_volume(mesh: TriangleMesh) -> float:
    """Enclosed volume via signed tetrahedron decomposition (absolute value)."""
    vols, _ = _signed_volumes_and_centroids(mesh)
    return abs(float(vols.sum()))


def surface_area(mesh: TriangleMesh) -> float:
    c = mesh.triangle_corners()
    cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    return float(np.linalg.norm(cross, axis=1).sum()) / 2.0


def is_watertight_enough(mesh: TriangleMesh, rel_tol: float = 1e-6) -> bool:
    """True when the signed volume is large enough to trust volume integrals."""
    vols, _ = _signed_volumes_and_centroids(mesh)
    scale = mesh.aabb().volume
    return abs(float(vols.sum())) > max(rel_tol * scale, 1e-15)


def center_of_mass(mesh: TriangleMesh) -> np.ndarray:
    """Uniform-density centroid.

    Watertight meshes use the signed tetrahedron decomposition. Leaky meshes
    (scanned geometry often is) fall back to the area-weighted surface
    centroid so downstream equilibrium checks always have a COM.
    """
    vols, cents = _signed_volumes_and_centroids(mesh)
    total = float(vols.sum())
    if is_watertight_enough(mesh):
        return np.asarray((vols[:, None] * cents).sum(axis=0) / total)
    c = mesh.triangle_corners()
    areas = np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1) / 2.0
    tri_cents = c.mean(axis=1)
    denom = float(areas.sum())
    if denom <= 0:
        return np.asarray(mesh.vertices.mean(axis=0))
    return np.asarray((areas[:, None] * tri_cents).sum(axis=0) / denom)


def scale_mesh_about(mesh: TriangleMesh, factor: float, center: np.ndarray) -> TriangleMesh:
    center = np.asarray(center, dtype=np.float64)
    return TriangleMesh(center + (mesh.vertices - center) * factor, mesh.triangles)


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one (shells stay separate; no welding)."""
    if not meshes:
        raise MeshValidationError("cannot merge an empty mesh list")
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += m.num_vertices
    return TriangleMesh(np.vstack(verts), np.vstack(tris))
