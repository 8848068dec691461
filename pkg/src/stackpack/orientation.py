"""Planar-stable resting orientations with quasi-static probabilities.

An object dropped on a plane settles on one of its convex hull facets. A
facet is a candidate resting pose when the center of mass projects strictly
inside it; its likelihood is modeled as the solid angle the facet subtends at
the COM, normalized over all stable facets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import TriangleMesh, center_of_mass, convex_hull

_NORMAL_MERGE_TOL = 1e-6  # radians of facet-normal deviation treated as coplanar
_PLANE_OFFSET_TOL = 1e-9


@dataclass(frozen=True)
class StableOrientation:
    """(roll, pitch) that brings one resting facet face-down, with its probability."""

    roll: float
    pitch: float
    probability: float


def _merge_facets(hull: TriangleMesh) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group hull triangles into maximal coplanar facets.

    Returns (unit normal, vertex index array) per facet.
    """
    corners = hull.triangle_corners()
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    lengths = np.linalg.norm(normals, axis=1)
    keep = lengths > 1e-15
    normals = normals[keep] / lengths[keep][:, None]
    tris = hull.triangles[keep]
    offsets = np.einsum("ij,ij->i", normals, hull.vertices[tris[:, 0]])

    facets: list[tuple[np.ndarray, float, list[int]]] = []
    for t in range(tris.shape[0]):
        n, d = normals[t], offsets[t]
        for fn, fd, members in facets:
            # angle between unit normals ~ chord length for small angles
            if np.linalg.norm(fn - n) < _NORMAL_MERGE_TOL and abs(fd - d) < max(
                _PLANE_OFFSET_TOL, 1e-9 * max(1.0, abs(d))
            ):
                members.append(t)
                break
        else:
            facets.append((n, d, [t]))
    out = []
    for fn, _fd, members in facets:
        verts = np.unique(tris[members].ravel())
        out.append((fn, verts))
    return out


def _facet_polygon(hull: TriangleMesh, normal: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Order the facet's vertices into a convex loop (CCW seen from outside)."""
    pts = hull.vertices[verts]
    centroid = pts.mean(axis=0)
    # build an in-plane frame
    a = np.array([1.0, 0.0, 0.0])
    if abs(normal[0]) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, a)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    rel = pts - centroid
    ang = np.arctan2(rel @ v, rel @ u)
    order = np.argsort(ang)
    loop = pts[order]
    # make the loop CCW about the outward normal
    area_vec = np.zeros(3)
    for k in range(len(loop)):
        area_vec += np.cross(loop[k], loop[(k + 1) % len(loop)])
    if area_vec @ normal < 0:
        loop = loop[::-1]
    return loop


def _point_in_polygon_margin(polygon: np.ndarray, normal: np.ndarray, point: np.ndarray) -> float:
    """Signed distance of the in-plane projection of ``point`` to the polygon edges.

    Positive means strictly inside; measured in the facet plane.
    """
    proj = point - normal * ((point - polygon[0]) @ normal)
    margin = math.inf
    n = len(polygon)
    for k in range(n):
        a, b = polygon[k], polygon[(k + 1) % n]
        edge = b - a
        inward = np.cross(normal, edge)
        norm = np.linalg.norm(inward)
        if norm < 1e-15:
            continue
        margin = min(margin, float((proj - a) @ (inward / norm)))
    return margin


def _solid_angle(polygon: np.ndarray, apex: np.ndarray) -> float:
    """Solid angle subtended by a planar convex polygon at ``apex``.

    Sums the Van Oosterom-Strackee formula over a triangle fan.
    """
    total = 0.0
    r0 = polygon[0] - apex
    for k in range(1, len(polygon) - 1):
        r1 = polygon[k] - apex
        r2 = polygon[k + 1] - apex
        l0, l1, l2 = np.linalg.norm(r0), np.linalg.norm(r1), np.linalg.norm(r2)
        numer = float(r0 @ np.cross(r1, r2))
        denom = l0 * l1 * l2 + (r0 @ r1) * l2 + (r0 @ r2) * l1 + (r1 @ r2) * l0
        total += 2.0 * math.atan2(abs(numer), denom)
    return total


def rotation_to_floor(normal: np.ndarray) -> tuple[float, float]:
    """(roll, pitch) such that Ry(roll) @ Rx(pitch) maps ``normal`` to (0, 0, -1)."""
    nx, ny, nz = float(normal[0]), float(normal[1]), float(normal[2])
    r = math.hypot(ny, nz)
    pitch = math.atan2(-ny, -nz) if r > 1e-12 else 0.0
    roll = math.atan2(nx, r)
    return roll, pitch


def planar_stable_orientations(mesh: TriangleMesh, top_n: int) -> list[StableOrientation]:
    """Resting orientations ranked by landing probability, highest first.

    Probabilities are normalized over the object's full stable set, so the
    untruncated list sums to 1. Ties break on (roll, pitch) lexicographically.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    hull = convex_hull(mesh)
    com = center_of_mass(mesh)
    entries = []
    for normal, verts in _merge_facets(hull):
        polygon = _facet_polygon(hull, normal, verts)
        if _point_in_polygon_margin(polygon, normal, com) <= 0.0:
            continue
        omega = _solid_angle(polygon, com)
        roll, pitch = rotation_to_floor(normal)
        entries.append((omega, roll, pitch))
    if not entries:
        return []
    total = sum(e[0] for e in entries)
    ranked = sorted(entries, key=lambda e: (-e[0] / total, e[1], e[2]))
    return [
        StableOrientation(roll=r, pitch=p, probability=om / total)
        for om, r, p in ranked[:top_n]
    ]
