"""Deterministic procedural test items: boxes, L-prisms, bowls, wedges.

These stand in for scanned object corpora in tests and demos. Same kind,
parameters, and seed always produce byte-identical meshes.
"""
from __future__ import annotations

import math

import numpy as np

from .containers import box_mesh
from .errors import MeshValidationError
from .geometry import TriangleMesh, merge_meshes

KINDS = ("box", "lshape", "bowl", "wedge")


def make_box(lx: float, ly: float, lz: float) -> TriangleMesh:
    if min(lx, ly, lz) <= 0:
        raise MeshValidationError("box dimensions must be positive")
    return box_mesh((lx, ly, lz))


def make_lshape(lx: float, ly: float, lz: float, leg: float, rise: float) -> TriangleMesh:
    """L-profile prism: a full slab plus a vertical leg along the -X side.

    ``leg`` is the footprint fraction kept at full height, ``rise`` the slab
    height fraction.
    """
    if min(lx, ly, lz) <= 0 or not (0 < leg < 1) or not (0 < rise < 1):
        raise MeshValidationError("bad lshape parameters")
    slab = box_mesh((lx, ly, lz * rise))
    upright = box_mesh((lx * leg, ly, lz * (1 - rise)), (0.0, 0.0, lz * rise))
    return merge_meshes([slab, upright])


def make_wedge(lx: float, ly: float, lz: float) -> TriangleMesh:
    """Right-triangular prism: full height at x=0 sloping to the floor at x=lx."""
    if min(lx, ly, lz) <= 0:
        raise MeshValidationError("wedge dimensions must be positive")
    v = np.array(
        [
            [0, 0, 0],
            [lx, 0, 0],
            [0, 0, lz],
            [0, ly, 0],
            [lx, ly, 0],
            [0, ly, lz],
        ],
        dtype=np.float64,
    )
    t = np.array(
        [
            [0, 1, 2],  # front triangle (y=0), outward -y
            [3, 5, 4],  # back triangle
            [0, 3, 4],
            [0, 4, 1],  # bottom
            [0, 2, 5],
            [0, 5, 3],  # vertical face at x=0
            [1, 4, 5],
            [1, 5, 2],  # sloped face
        ],
        dtype=np.int32,
    )
    return TriangleMesh(v, t)


def make_bowl(
    outer_r: float,
    inner_r: float,
    height: float,
    thickness: float | None = None,
    segments: int = 32,
    foot_r: float | None = None,
    foot_h: float = 0.0,
) -> TriangleMesh:
    """Solid of revolution with a U cross-section (open cavity, flat base).

    The cavity floor sits ``thickness`` above the body base, so bowls nest.
    An optional pedestal foot (radius ``foot_r``, height ``foot_h``) narrows
    the resting base, the way real tableware stands on a foot ring.
    """
    if not (0 < inner_r < outer_r) or height <= 0 or segments < 8:
        raise MeshValidationError("bad bowl parameters")
    footed = foot_r is not None and foot_h > 0.0
    if footed and not (0 < foot_r <= outer_r):
        raise MeshValidationError("bowl foot radius must lie in (0, outer_r]")
    t = thickness if thickness is not None else 0.2 * height
    if not (0 < t < height - (foot_h if footed else 0.0)):
        raise MeshValidationError("bowl floor thickness must lie inside its height")
    # profile from the base, counter-clockwise in the (r, z) plane
    if footed:
        zf = foot_h + t
        profile = [
            (foot_r, 0.0),
            (foot_r, foot_h),
            (outer_r, foot_h),
            (outer_r, foot_h + height),
            (inner_r, foot_h + height),
            (inner_r, zf),
            (0.0, zf),
            (0.0, 0.0),
        ]
    else:
        profile = [
            (outer_r, 0.0),
            (outer_r, height),
            (inner_r, height),
            (inner_r, t),
            (0.0, t),
            (0.0, 0.0),
        ]
    ang = 2.0 * math.pi * np.arange(segments) / segments
    cos_a, sin_a = np.cos(ang), np.sin(ang)
    verts = []
    ring_index = {}
    for p, (r, z) in enumerate(profile):
        if r == 0.0:
            ring_index[p] = len(verts)
            verts.append((0.0, 0.0, z))
        else:
            ring_index[p] = len(verts)
            for c, s in zip(cos_a, sin_a):
                verts.append((r * c, r * s, z))
    tris = []
    for p in range(len(profile)):
        q = (p + 1) % len(profile)
        rp, zp = profile[p]
        rq, zq = profile[q]
        ip, iq = ring_index[p], ring_index[q]
        for k in range(segments):
            k2 = (k + 1) % segments
            if rp > 0 and rq > 0:
                tris.append((ip + k, ip + k2, iq + k))
                tris.append((iq + k, ip + k2, iq + k2))
            elif rp > 0 and rq == 0.0:
                tris.append((ip + k, ip + k2, iq))
            elif rp == 0.0 and rq > 0:
                tris.append((ip, iq + k2, iq + k))
    mesh = TriangleMesh(np.array(verts), np.array(tris, dtype=np.int32))
    # orient triangles outward via signed volume
    vols = np.einsum(
        "ij,ij->i",
        mesh.vertices[mesh.triangles[:, 0]],
        np.cross(mesh.vertices[mesh.triangles[:, 1]], mesh.vertices[mesh.triangles[:, 2]]),
    )
    if vols.sum() < 0:
        mesh = TriangleMesh(mesh.vertices, mesh.triangles[:, [0, 2, 1]])
    # shift so the bounding box corner sits at the origin like the other kinds
    return TriangleMesh(mesh.vertices - mesh.vertices.min(axis=0), mesh.triangles)


def generate_test_items(kind: str, params: dict | None = None, seed: int = 0) -> TriangleMesh:
    """One procedural item. Missing parameters are drawn from seeded ranges."""
    if kind not in KINDS:
        raise MeshValidationError(f"unknown item kind {kind!r} (expected one of {KINDS})")
    params = dict(params or {})
    rng = np.random.default_rng(seed)

    def take(name, lo, hi):
        if name in params:
            v = float(params[name])
            if v <= 0:
                raise MeshValidationError(f"{kind} parameter {name} must be positive")
            return v
        return float(rng.uniform(lo, hi))

    if kind == "box":
        return make_box(take("lx", 0.04, 0.12), take("ly", 0.04, 0.12), take("lz", 0.03, 0.1))
    if kind == "lshape":
        return make_lshape(
            take("lx", 0.06, 0.12),
            take("ly", 0.04, 0.1),
            take("lz", 0.05, 0.12),
            float(params.get("leg", 0.4)),
            float(params.get("rise", 0.4)),
        )
    if kind == "wedge":
        return make_wedge(take("lx", 0.06, 0.14), take("ly", 0.04, 0.1), take("lz", 0.04, 0.1))
    outer = take("outer_r", 0.04, 0.07)
    inner = float(params.get("inner_r", outer * 0.82))
    height = take("height", 0.03, 0.06)
    thickness = params.get("thickness")
    segments = int(params.get("segments", 32))
    return make_bowl(outer, inner, height, thickness, segments)


def random_item_set(count: int, seed: int, kinds=("box", "box", "wedge", "lshape")) -> list[TriangleMesh]:
    """Deterministic mixed item set for stress tests (box-heavy by default)."""
    rng = np.random.default_rng(seed)
    items = []
    for k in range(count):
        kind = kinds[int(rng.integers(0, len(kinds)))]
        items.append(generate_test_items(kind, None, seed=int(rng.integers(0, 2**31 - 1))))
    return items
