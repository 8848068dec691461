"""Mesh collision primitives: batched triangle-triangle intersection,
point-in-mesh parity tests, and penetration depth estimation.

Triangle pairs are intersected with a vectorized Moller-style test that also
produces the intersection segment. Exactly coplanar overlapping pairs report
no segment; callers that care about face-on-face contact detect it through
the crossings of the surrounding geometry.
"""
from __future__ import annotations

import numpy as np

from .geometry import TriangleMesh

_EPS = 1e-12
# fixed irregular ray direction avoids axis-aligned edge degeneracies
_PARITY_DIR = np.array([0.5773502691896258, 0.2672612419124244, 0.8017837257372732])
_PARITY_DIR.flags.writeable = False


def _plane(corners: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    d = np.einsum("ij,ij->i", n, corners[:, 0])
    return n, d


def _line_interval(corners, dists, proj, eps):
    """Per-pair [lo, hi] params of the plane-crossing segment, plus endpoints.

    ``dists`` are signed distances of the triangle's vertices to the other
    plane, ``proj`` their projections onto the intersection line direction.
    Invalid (non-crossing) pairs return lo > hi.
    """
    k = corners.shape[0]
    cand_s = np.full((k, 6), np.nan)
    cand_p = np.full((k, 6, 3), np.nan)
    for e, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        da, db = dists[:, a], dists[:, b]
        crossing = da * db < 0
        denom = np.where(crossing, da - db, 1.0)
        t = np.where(crossing, da / denom, np.nan)
        cand_s[:, e] = np.where(crossing, proj[:, a] + t * (proj[:, b] - proj[:, a]), np.nan)
        pt = corners[:, a] + t[:, None] * (corners[:, b] - corners[:, a])
        cand_p[:, e] = np.where(crossing[:, None], pt, np.nan)
    for v in range(3):
        on_plane = np.abs(dists[:, v]) <= eps
        cand_s[:, 3 + v] = np.where(on_plane, proj[:, v], np.nan)
        cand_p[:, 3 + v] = np.where(on_plane[:, None], corners[:, v], np.nan)
    valid = np.isfinite(cand_s)
    any_valid = valid.any(axis=1)
    lo_idx = np.nanargmin(np.where(any_valid[:, None], cand_s, 0.0), axis=1)
    hi_idx = np.nanargmax(np.where(any_valid[:, None], cand_s, 0.0), axis=1)
    rows = np.arange(k)
    lo = np.where(any_valid, cand_s[rows, lo_idx], 1.0)
    hi = np.where(any_valid, cand_s[rows, hi_idx], -1.0)
    return lo, hi, cand_p[rows, lo_idx], cand_p[rows, hi_idx]


def triangle_pairs_intersect(
    corners_a: np.ndarray,
    corners_b: np.ndarray,
    eps: float = 1e-12,
    include_grazing: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched triangle-triangle intersection.

    Inputs are matched (k, 3, 3) corner arrays. Returns (hit mask, midpoints)
    where midpoints[i] is the center of the intersection segment for hits.
    With ``include_grazing`` a triangle lying in the other's plane along an
    edge still produces a segment (used for contact extraction on inflated
    geometry); otherwise only transversal crossings count.
    """
    k = corners_a.shape[0]
    hit = np.zeros(k, dtype=bool)
    mid = np.full((k, 3), np.nan)
    if k == 0:
        return hit, mid
    n_b, d_b = _plane(corners_b)
    dist_a = np.einsum("kij,kj->ki", corners_a, n_b) - d_b[:, None]
    scale_b = np.linalg.norm(n_b, axis=1) + _EPS
    tol_a = (eps * scale_b)[:, None]
    n_a, d_a = _plane(corners_a)
    dist_b = np.einsum("kij,kj->ki", corners_b, n_a) - d_a[:, None]
    scale_a = np.linalg.norm(n_a, axis=1) + _EPS
    tol_b = (eps * scale_a)[:, None]

    if include_grazing:
        sep_a = (dist_a > tol_a).all(axis=1) | (dist_a < -tol_a).all(axis=1)
        sep_b = (dist_b > tol_b).all(axis=1) | (dist_b < -tol_b).all(axis=1)
    else:
        # touching from one side (distances >= 0 with some exactly 0) is
        # contact, not crossing, so the closed half-space separates
        sep_a = (dist_a >= -tol_a).all(axis=1) | (dist_a <= tol_a).all(axis=1)
        sep_b = (dist_b >= -tol_b).all(axis=1) | (dist_b <= tol_b).all(axis=1)
    active = ~(sep_a | sep_b)
    if not active.any():
        return hit, mid

    direction = np.cross(n_a, n_b)
    norm = np.linalg.norm(direction, axis=1)
    ok_dir = norm > _EPS
    active &= ok_dir
    proj_a = np.einsum("kij,kj->ki", corners_a, direction)
    proj_b = np.einsum("kij,kj->ki", corners_b, direction)
    lo_a, hi_a, pa_lo, pa_hi = _line_interval(corners_a, dist_a, proj_a, eps * scale_b)
    lo_b, hi_b, _, _ = _line_interval(corners_b, dist_b, proj_b, eps * scale_a)
    lo = np.maximum(lo_a, lo_b)
    hi = np.minimum(hi_a, hi_b)
    span_tol = _EPS * (1.0 + np.abs(lo) + np.abs(hi))
    overlap = active & (hi - lo > span_tol)
    hit[:] = overlap
    if overlap.any():
        seg = hi_a - lo_a
        seg = np.where(np.abs(seg) > _EPS, seg, 1.0)
        f_lo = np.clip((lo - lo_a) / seg, 0.0, 1.0)
        f_hi = np.clip((hi - lo_a) / seg, 0.0, 1.0)
        p_lo = pa_lo + f_lo[:, None] * (pa_hi - pa_lo)
        p_hi = pa_lo + f_hi[:, None] * (pa_hi - pa_lo)
        mid = 0.5 * (p_lo + p_hi)
    return hit, mid


def _tri_aabbs(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    c = mesh.triangle_corners()
    return c.min(axis=1), c.max(axis=1)


def candidate_pairs(mesh_a: TriangleMesh, mesh_b: TriangleMesh, tol: float = 1e-9):
    """Triangle index pairs whose AABBs overlap (broadcast prefilter)."""
    lo_a, hi_a = _tri_aabbs(mesh_a)
    lo_b, hi_b = _tri_aabbs(mesh_b)
    overlap = (
        (lo_a[:, None, :] <= hi_b[None, :, :] + tol)
        & (lo_b[None, :, :] <= hi_a[:, None, :] + tol)
    ).all(axis=2)
    ia, ib = np.nonzero(overlap)
    return ia, ib


def mesh_intersection_midpoints(
    mesh_a: TriangleMesh, mesh_b: TriangleMesh, include_grazing: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intersection segment midpoints between two meshes.

    Returns (midpoints (k,3), triangle indices in a, triangle indices in b).
    """
    if not mesh_a.aabb().overlaps(mesh_b.aabb(), tol=1e-9):
        return np.empty((0, 3)), np.empty(0, np.int64), np.empty(0, np.int64)
    ia, ib = candidate_pairs(mesh_a, mesh_b)
    if ia.size == 0:
        return np.empty((0, 3)), np.empty(0, np.int64), np.empty(0, np.int64)
    hit, mid = triangle_pairs_intersect(
        mesh_a.triangle_corners()[ia],
        mesh_b.triangle_corners()[ib],
        include_grazing=include_grazing,
    )
    return mid[hit], ia[hit], ib[hit]


def meshes_intersect(mesh_a: TriangleMesh, mesh_b: TriangleMesh) -> bool:
    """True when the surfaces cross (coplanar touching does not count)."""
    if not mesh_a.aabb().overlaps(mesh_b.aabb(), tol=1e-9):
        return False
    ia, ib = candidate_pairs(mesh_a, mesh_b)
    if ia.size == 0:
        return False
    ca = mesh_a.triangle_corners()
    cb = mesh_b.triangle_corners()
    for start in range(0, ia.size, 4096):
        sl = slice(start, start + 4096)
        hit, _ = triangle_pairs_intersect(ca[ia[sl]], cb[ib[sl]])
        if hit.any():
            return True
    return False


def points_in_mesh(points: np.ndarray, mesh: TriangleMesh) -> np.ndarray:
    """Parity-based containment test for watertight meshes."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    corners = mesh.triangle_corners()
    v0 = corners[:, 0]
    e1 = corners[:, 1] - v0
    e2 = corners[:, 2] - v0
    d = _PARITY_DIR
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > _EPS
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    inside = np.zeros(points.shape[0], dtype=bool)
    for i, p in enumerate(points):
        tvec = p - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1)
        v = np.einsum("ij,j->i", qvec, d) * inv_det
        t = np.einsum("ij,ij->i", qvec, e2) * inv_det
        hits = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 1e-9)
        inside[i] = bool(hits.sum() % 2)
    return inside


def point_mesh_distance(points: np.ndarray, mesh: TriangleMesh) -> np.ndarray:
    """Unsigned distance from each point to the mesh surface."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    corners = mesh.triangle_corners()
    out = np.empty(points.shape[0])
    for i, p in enumerate(points):
        out[i] = float(np.sqrt(_point_tri_sqdist(p, corners).min()))
    return out


def _point_tri_sqdist(p: np.ndarray, corners: np.ndarray) -> np.ndarray:
    # Ericson-style closest point on triangle, vectorized over triangles.
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom_abc = va + vb + vc
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        w_bc = np.where((d4 - d3) + (d5 - d6) != 0, (d4 - d3) / ((d4 - d3) + (d5 - d6)), 0.0)
        v_in = np.where(denom_abc != 0, vb / np.where(denom_abc != 0, denom_abc, 1.0), 0.0)
        w_in = np.where(denom_abc != 0, vc / np.where(denom_abc != 0, denom_abc, 1.0), 0.0)
    candidates = [
        a,
        b,
        c,
        a + np.clip(v_ab, 0, 1)[:, None] * ab,
        a + np.clip(w_ac, 0, 1)[:, None] * ac,
        b + np.clip(w_bc, 0, 1)[:, None] * (c - b),
        a + v_in[:, None] * ab + w_in[:, None] * ac,
    ]
    valid_face = (vb >= 0) & (vc >= 0) & (va >= 0) & (denom_abc != 0)
    best = np.full(corners.shape[0], np.inf)
    for idx, q in enumerate(candidates):
        dist = ((p - q) ** 2).sum(axis=1)
        if idx == 6:
            dist = np.where(valid_face, dist, np.inf)
        best = np.minimum(best, dist)
    return best


def _witness_samples(mesh: TriangleMesh) -> np.ndarray:
    """Points whose containment in another mesh proves volume overlap.

    Surface points (vertices, face centroids) always qualify. Deeper probes
    (midway to the vertex mean, and the mean itself) only qualify when they
    actually lie inside this mesh, which for non-convex shapes (bowls) they
    may not.
    """
    verts = mesh.vertices
    com = verts.mean(axis=0)
    surface = np.vstack([verts, mesh.triangle_corners().mean(axis=1)])
    probes = np.vstack([0.5 * (verts + com), com[None, :]])
    keep = points_in_mesh(probes, mesh)
    if keep.any():
        deep = point_mesh_distance(probes[keep], mesh) > 1e-7
        probes = probes[keep][deep]
    else:
        probes = probes[:0]
    return np.vstack([surface, probes])


def volumes_overlap(mesh_a: TriangleMesh, mesh_b: TriangleMesh) -> bool:
    """True when the enclosed volumes interpenetrate (touching excluded).

    Detected through transversal surface crossings plus containment tests of
    witness sample points, so full-engulfment and flush-slab overlaps
    register as well.
    """
    box_a, box_b = mesh_a.aabb(), mesh_b.aabb()
    if not box_a.overlaps(box_b):
        return False
    overlap = np.minimum(box_a.hi, box_b.hi) - np.maximum(box_a.lo, box_b.lo)
    if float(np.clip(overlap, 0.0, None).min()) <= 0.0:
        return False
    if meshes_intersect(mesh_a, mesh_b):
        return True
    # Samples exactly on the other surface (resting contact) must not count:
    # require parity-inside AND a real distance from the surface.
    for samples, other in ((_witness_samples(mesh_a), mesh_b), (_witness_samples(mesh_b), mesh_a)):
        inside = points_in_mesh(samples, other)
        if inside.any() and (point_mesh_distance(samples[inside], other) > 1e-7).any():
            return True
    return False


def penetration_depth(mesh_a: TriangleMesh, mesh_b: TriangleMesh) -> float:
    """Approximate interpenetration depth between two placed meshes.

    0 when the meshes do not interpenetrate. When they do, the returned depth
    is the smallest axis-aligned overlap extent, a separation-distance
    estimate that is exact for boxes and conservative for convex shapes.
    """
    box_a, box_b = mesh_a.aabb(), mesh_b.aabb()
    if not box_a.overlaps(box_b):
        return 0.0
    overlap = np.minimum(box_a.hi, box_b.hi) - np.maximum(box_a.lo, box_b.lo)
    overlap_depth = float(np.clip(overlap, 0.0, None).min())
    if overlap_depth <= 0.0:
        return 0.0
    if volumes_overlap(mesh_a, mesh_b):
        return overlap_depth
    return 0.0
