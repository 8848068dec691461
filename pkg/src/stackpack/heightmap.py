"""Heightmap algebra: construction by triangle rasterization, lowest
collision-free height queries, and placement updates.

Heightmaps are uniform 2D grids of heights over a floor plane. Cell (i, j)
covers the square [origin + i*res, origin + (i+1)*res] x [same in y]; all
heights are meters. Object maps come in pairs: a top-down map (0 on empty
cells) and a bottom-up map (+inf on empty cells), both measured from the
object's lowest point.

Rasterization is conservative: a cell records the min/max of the surface over
the cell's whole square, not just the ray through its center. That keeps the
lowest-height query an upper bound on the true contact height, so placements
it produces never penetrate existing geometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import MeshValidationError
from .geometry import RigidTransform, TriangleMesh, rotate_mesh

_EPS = 1e-12
EMPTY_CELL_EPS = 1e-9


@dataclass(frozen=True)
class HeightMap:
    """Immutable grid of heights; ``data`` has shape (nx, ny), x along axis 0."""

    origin: np.ndarray
    resolution: float
    data: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(2)
        data = np.asarray(self.data, dtype=np.float64)
        if self.resolution <= 0 or not math.isfinite(self.resolution):
            raise MeshValidationError("heightmap resolution must be positive")
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise MeshValidationError("heightmap grid must be 2D and non-empty")
        if np.isnan(data).any() or (data < -1e-9).any():
            raise MeshValidationError("heightmap entries must lie in [0, +inf]")
        data = np.where((data < 0) & np.isfinite(data), 0.0, data)
        data.flags.writeable = False
        origin.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    def cell_area(self) -> float:
        return self.resolution * self.resolution


def grid_cells(length: float, resolution: float) -> int:
    """Number of cells needed to span ``length`` at ``resolution``."""
    return max(1, int(math.ceil(length / resolution - 1e-9)))


_CHUNK_CELLS = 4_000_000


def rasterize_height_bounds(
    mesh: TriangleMesh,
    origin: np.ndarray,
    resolution: float,
    shape: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell (min, max) of the mesh surface over each cell square.

    Cells never touched by any triangle's XY projection read +inf in the min
    grid and -inf in the max grid. The extremes are exact: for each triangle
    and cell they are taken over triangle vertices inside the cell, triangle
    edges clipped to the cell, and cell corners inside the triangle.
    """
    nx, ny = shape
    zmin = np.full((nx, ny), np.inf)
    zmax = np.full((nx, ny), -np.inf)
    corners = mesh.triangle_corners()  # (m, 3, 3)
    _rasterize_chunked(corners, origin, resolution, zmin, zmax)
    return zmin, zmax


def _rasterize_chunked(corners, origin, resolution, zmin, zmax):
    # Padding every triangle to the widest cell footprint can blow up memory
    # when footprints are uneven; split into batches of bounded padded size.
    res = float(resolution)
    widths = (
        np.maximum(np.ceil((corners[:, :, 0].max(axis=1) - corners[:, :, 0].min(axis=1)) / res), 1)
        * np.maximum(np.ceil((corners[:, :, 1].max(axis=1) - corners[:, :, 1].min(axis=1)) / res), 1)
        + 4
    )
    start = 0
    m = corners.shape[0]
    while start < m:
        stop = start + 1
        peak = widths[start]
        while stop < m:
            peak = max(peak, widths[stop])
            if peak * (stop - start + 1) > _CHUNK_CELLS:
                break
            stop += 1
        _rasterize_batch(corners[start:stop], origin, res, zmin, zmax)
        start = stop


def _rasterize_batch(corners, origin, res, zmin, zmax):
    nx, ny = zmin.shape
    ox, oy = float(origin[0]), float(origin[1])
    xy = corners[:, :, :2]
    tri_lo = xy.min(axis=1)
    tri_hi = xy.max(axis=1)
    i0 = np.clip(np.floor((tri_lo[:, 0] - ox) / res + _EPS).astype(np.int64), 0, nx - 1)
    i1 = np.clip(np.floor((tri_hi[:, 0] - ox) / res - _EPS).astype(np.int64), 0, nx - 1)
    j0 = np.clip(np.floor((tri_lo[:, 1] - oy) / res + _EPS).astype(np.int64), 0, ny - 1)
    j1 = np.clip(np.floor((tri_hi[:, 1] - oy) / res - _EPS).astype(np.int64), 0, ny - 1)
    i1 = np.maximum(i1, i0)
    j1 = np.maximum(j1, j0)

    spans_i = i1 - i0 + 1
    spans_j = j1 - j0 + 1
    counts = spans_i * spans_j
    if counts.max(initial=0) == 0:
        return

    # Pad every triangle's covered-cell list to the same width so the whole
    # mesh rasterizes in one vectorized pass.
    width = int(counts.max())
    k = np.arange(width)
    valid = k[None, :] < counts[:, None]  # (m, width)
    ki = k[None, :] // spans_j[:, None]
    kj = k[None, :] % spans_j[:, None]
    ci = np.minimum(i0[:, None] + ki, i1[:, None])
    cj = np.minimum(j0[:, None] + kj, j1[:, None])
    cx0 = ox + ci * res
    cy0 = oy + cj * res
    cx1 = cx0 + res
    cy1 = cy0 + res

    cand_z = []
    cand_ok = []

    # Triangle vertices lying inside a cell.
    for v in range(3):
        px = corners[:, v, 0][:, None]
        py = corners[:, v, 1][:, None]
        pz = corners[:, v, 2][:, None]
        inside = (
            (px >= cx0 - _EPS) & (px <= cx1 + _EPS) & (py >= cy0 - _EPS) & (py <= cy1 + _EPS)
        )
        cand_z.append(np.broadcast_to(pz, inside.shape))
        cand_ok.append(inside)

    # Triangle edges clipped to the cell square (slab intersection in t).
    for a, b in ((0, 1), (1, 2), (2, 0)):
        ax = corners[:, a, 0][:, None]
        ay = corners[:, a, 1][:, None]
        az = corners[:, a, 2][:, None]
        dx = corners[:, b, 0][:, None] - ax
        dy = corners[:, b, 1][:, None] - ay
        dz = corners[:, b, 2][:, None] - az
        with np.errstate(divide="ignore", invalid="ignore"):
            tx_a = (cx0 - ax) / dx
            tx_b = (cx1 - ax) / dx
            ty_a = (cy0 - ay) / dy
            ty_b = (cy1 - ay) / dy
        deg_x = np.abs(dx) < _EPS
        in_x = (ax >= cx0 - _EPS) & (ax <= cx1 + _EPS)
        lo_x = np.where(deg_x, np.where(in_x, 0.0, 2.0), np.minimum(tx_a, tx_b))
        hi_x = np.where(deg_x, np.where(in_x, 1.0, -2.0), np.maximum(tx_a, tx_b))
        deg_y = np.abs(dy) < _EPS
        in_y = (ay >= cy0 - _EPS) & (ay <= cy1 + _EPS)
        lo_y = np.where(deg_y, np.where(in_y, 0.0, 2.0), np.minimum(ty_a, ty_b))
        hi_y = np.where(deg_y, np.where(in_y, 1.0, -2.0), np.maximum(ty_a, ty_b))
        t_lo = np.maximum(np.maximum(lo_x, lo_y), 0.0)
        t_hi = np.minimum(np.minimum(hi_x, hi_y), 1.0)
        ok = t_lo <= t_hi + _EPS
        cand_z.append(az + t_lo * dz)
        cand_ok.append(ok)
        cand_z.append(az + t_hi * dz)
        cand_ok.append(ok)

    # Cell corners inside the triangle projection (skipped for vertical
    # triangles, whose extremes already lie on clipped edges).
    e1 = xy[:, 1] - xy[:, 0]
    e2 = xy[:, 2] - xy[:, 0]
    det = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])[:, None]
    nondeg = np.abs(det) > _EPS * _EPS
    v0 = corners[:, 0, :]
    z1 = (corners[:, 1, 2] - corners[:, 0, 2])[:, None]
    z2 = (corners[:, 2, 2] - corners[:, 0, 2])[:, None]
    for qx, qy in ((cx0, cy0), (cx1, cy0), (cx0, cy1), (cx1, cy1)):
        rx = qx - v0[:, 0][:, None]
        ry = qy - v0[:, 1][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (rx * e2[:, 1][:, None] - ry * e2[:, 0][:, None]) / det
            w = (ry * e1[:, 0][:, None] - rx * e1[:, 1][:, None]) / det
        u = np.where(nondeg, u, -1.0)
        w = np.where(nondeg, w, -1.0)
        inside = nondeg & (u >= -1e-9) & (w >= -1e-9) & (u + w <= 1.0 + 1e-9)
        cand_z.append(v0[:, 2][:, None] + u * z1 + w * z2)
        cand_ok.append(inside)

    z_stack = np.stack(cand_z, axis=-1)  # (m, width, ncand)
    ok_stack = np.stack(cand_ok, axis=-1) & valid[:, :, None]
    z_lo = np.where(ok_stack, z_stack, np.inf).min(axis=-1)
    z_hi = np.where(ok_stack, z_stack, -np.inf).max(axis=-1)
    touched = ok_stack.any(axis=-1)

    flat_idx = (ci * ny + cj)[touched]
    np.minimum.at(zmin.reshape(-1), flat_idx, z_lo[touched])
    np.maximum.at(zmax.reshape(-1), flat_idx, z_hi[touched])


def object_heightmaps(rotated: TriangleMesh, resolution: float) -> tuple[HeightMap, HeightMap]:
    """Top-down and bottom-up maps of an already-rotated mesh.

    Both are measured relative to the mesh's lowest point and anchored at the
    XY minimum of its bounding box. Empty cells read 0 in the top map and
    +inf in the bottom map.
    """
    box = rotated.aabb()
    nx = grid_cells(float(box.extent[0]), resolution)
    ny = grid_cells(float(box.extent[1]), resolution)
    zmin, zmax = rasterize_height_bounds(rotated, box.lo[:2], resolution, (nx, ny))
    z0 = float(box.lo[2])
    covered = np.isfinite(zmin)
    top = np.where(covered, np.maximum(zmax - z0, 0.0), 0.0)
    bottom = np.where(covered, np.maximum(zmin - z0, 0.0), np.inf)
    origin = box.lo[:2]
    return (
        HeightMap(origin, resolution, top),
        HeightMap(origin, resolution, bottom),
    )


def raycast_heightmaps(
    mesh: TriangleMesh,
    rotation: RigidTransform | tuple[float, float, float],
    resolution: float,
) -> tuple[HeightMap, HeightMap]:
    """Object top/bottom heightmaps at the given orientation (translation ignored)."""
    if resolution <= 0:
        raise MeshValidationError("resolution must be positive")
    if isinstance(rotation, RigidTransform):
        roll, pitch, yaw = rotation.rpy
    else:
        roll, pitch, yaw = rotation
    return object_heightmaps(rotate_mesh(mesh, roll, pitch, yaw), resolution)


def empty_container_heightmap(length: float, width: float, resolution: float) -> HeightMap:
    shape = (grid_cells(length, resolution), grid_cells(width, resolution))
    return HeightMap(np.zeros(2), resolution, np.zeros(shape))


def container_heightmap(container, placed, resolution: float) -> HeightMap:
    """Top-down map of the container floor plus already-placed geometry.

    ``placed`` is a sequence of (mesh, transform) pairs in container
    coordinates (floor corner at the origin).
    """
    from .geometry import transform_mesh  # local import keeps module deps one-way

    hm = empty_container_heightmap(container.length, container.width, resolution)
    data = hm.data.copy()
    for mesh, transform in placed:
        world = transform_mesh(mesh, transform)
        _, zmax = rasterize_height_bounds(world, hm.origin, resolution, data.shape)
        covered = np.isfinite(zmax)
        np.maximum(data, np.where(covered, zmax, 0.0), out=data)
    return HeightMap(hm.origin, resolution, data)


def _check_window(container_map: HeightMap, object_map: HeightMap, x: int, y: int):
    w, h = object_map.shape
    nx, ny = container_map.shape
    if x < 0 or y < 0 or x + w > nx or y + h > ny:
        raise IndexError(
            f"object window ({x},{y})+({w},{h}) outside container grid ({nx},{ny})"
        )
    if abs(container_map.resolution - object_map.resolution) > 1e-12:
        raise MeshValidationError("container and object heightmap resolutions differ")
    return w, h


def lowest_z(container_map: HeightMap, bottom_map: HeightMap, x: int, y: int) -> float:
    """Lowest collision-free height for the object window anchored at cell (x, y).

    Cells where the bottom map is +inf (holes) never bind. The result is
    clamped at 0 (the container floor).
    """
    w, h = _check_window(container_map, bottom_map, x, y)
    window = container_map.data[x : x + w, y : y + h]
    bottom = bottom_map.data
    finite = np.isfinite(bottom)
    if not finite.any():
        return 0.0
    z = float((window[finite] - bottom[finite]).max())
    return max(z, 0.0)


def lowest_z_grid(
    container_map: HeightMap, bottom_map: HeightMap, step_cells: int = 1
) -> np.ndarray:
    """Vectorized lowest-height query at every anchor cell on a stride.

    Returns an array over anchors (x, y) = (step*i, step*j) covering all
    positions where the object window fits, matching ``lowest_z`` exactly.
    """
    w, h = bottom_map.shape
    nx, ny = container_map.shape
    if w > nx or h > ny:
        return np.empty((0, 0))
    finite = np.isfinite(bottom_map.data)
    neg_bottom = np.where(finite, -bottom_map.data, -np.inf)
    windows = sliding_window_view(container_map.data, (w, h))[::step_cells, ::step_cells]
    out = np.empty(windows.shape[:2])
    # materializing (windows + neg_bottom) whole can be huge; go row block-wise
    rows_per_block = max(1, _CHUNK_CELLS // max(1, windows.shape[1] * w * h))
    for r in range(0, windows.shape[0], rows_per_block):
        block = windows[r : r + rows_per_block] + neg_bottom
        out[r : r + rows_per_block] = block.max(axis=(2, 3))
    if not finite.any():
        out[:] = 0.0
    return np.maximum(out, 0.0)


def update_heightmap(
    container_map: HeightMap,
    top_map: HeightMap,
    x: int,
    y: int,
    z: float,
    occupied: np.ndarray | None = None,
) -> HeightMap:
    """Raise the container map by an object placed at cell (x, y), height z.

    Cells carrying no object geometry leave the container map untouched.
    Occupancy defaults to ``top > 0``; callers with the paired bottom map
    should pass its finite mask so flat-bottomed rims at height 0 still count
    as geometry.
    """
    if z < -1e-9:
        raise MeshValidationError("placement height must be non-negative")
    w, h = _check_window(container_map, top_map, x, y)
    if occupied is None:
        occupied = top_map.data > EMPTY_CELL_EPS
    data = container_map.data.copy()
    window = data[x : x + w, y : y + h]
    window[occupied] = np.maximum(top_map.data[occupied] + z, window[occupied])
    return HeightMap(container_map.origin, container_map.resolution, data)


def write_pgm(hm: HeightMap, path: str | Path, meters_per_level: float | None = None) -> None:
    """Export as ASCII PGM (P2). Infinite cells saturate at the max gray level."""
    maxval = 65535
    finite = hm.data[np.isfinite(hm.data)]
    peak = float(finite.max()) if finite.size else 0.0
    if meters_per_level is None:
        meters_per_level = peak / maxval if peak > 0 else 1.0 / maxval
    levels = np.where(
        np.isfinite(hm.data),
        np.clip(np.round(hm.data / meters_per_level), 0, maxval),
        maxval,
    ).astype(np.int64)
    nx, ny = hm.shape
    with open(path, "w") as fh:
        fh.write("P2\n")
        fh.write(f"# meters-per-gray-level: {meters_per_level:.17g}\n")
        fh.write(f"# origin: {hm.origin[0]:.17g} {hm.origin[1]:.17g}\n")
        fh.write(f"# resolution: {hm.resolution:.17g}\n")
        fh.write(f"{nx} {ny}\n{maxval}\n")
        # rows run from max y down so +Y points up in image viewers
        for j in range(ny - 1, -1, -1):
            fh.write(" ".join(str(int(levels[i, j])) for i in range(nx)))
            fh.write("\n")


def read_pgm(path: str | Path) -> tuple[HeightMap, float]:
    """Parse a PGM written by :func:`write_pgm`; returns (map, meters_per_level)."""
    mpl = None
    origin = np.zeros(2)
    resolution = 1.0
    tokens: list[str] = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("meters-per-gray-level:"):
                    mpl = float(body.split(":", 1)[1])
                elif body.startswith("origin:"):
                    origin = np.array([float(v) for v in body.split(":", 1)[1].split()])
                elif body.startswith("resolution:"):
                    resolution = float(body.split(":", 1)[1])
                continue
            tokens.extend(line.split())
    if mpl is None or tokens[0] != "P2":
        raise MeshValidationError(f"{path}: not a stackpack PGM export")
    nx, ny, _maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.array([int(t) for t in tokens[4 : 4 + nx * ny]], dtype=np.float64)
    grid = vals.reshape(ny, nx)[::-1].T * mpl
    return HeightMap(origin, resolution, grid), mpl
