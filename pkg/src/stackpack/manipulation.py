"""Top-down gripper feasibility: grasp generation at the object's top surface
and clearance checking of the gripper footprint against the pile.

The gripper is modeled as its rectangular footprint extruded upward without
bound above the grasp plane; anything protruding above the pile matters only
through this column. Robot-specific tests (reachability, joint limits) plug
in through an external predicate that defaults to passing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .containers import Container
from .errors import MeshValidationError, NoGraspError
from .geometry import RigidTransform, TriangleMesh, transform_mesh
from .heightmap import HeightMap, raycast_heightmaps

DEFAULT_GRIPPER_LENGTH = 0.30
DEFAULT_GRIPPER_WIDTH = 0.02
DEFAULT_YAW_STEPS = 8


@dataclass(frozen=True)
class GripperModel:
    """Rectangular footprint (length x width, meters) of a vacuum gripper."""

    length: float = DEFAULT_GRIPPER_LENGTH
    width: float = DEFAULT_GRIPPER_WIDTH
    body_height: float | None = None  # None: unbounded above the grasp plane

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise MeshValidationError("gripper dimensions must be positive")
        if self.body_height is not None and self.body_height <= 0:
            raise MeshValidationError("gripper body height must be positive")


@dataclass(frozen=True)
class GraspCandidate:
    """End-effector pose relative to the rotated object, approach along -Z.

    ``local_point`` is measured from the rotated object's AABB minimum
    corner; ``yaw`` is the gripper's rotation about Z. Candidates order by
    how little the footprint overhangs the object.
    """

    yaw: float
    local_point: tuple[float, float, float]
    overhang_area: float


def _rect_mask(centers_x, centers_y, cx, cy, yaw, half_len, half_wid):
    rel_x = centers_x - cx
    rel_y = centers_y - cy
    c, s = math.cos(yaw), math.sin(yaw)
    u = c * rel_x + s * rel_y
    v = -s * rel_x + c * rel_y
    return (np.abs(u) <= half_len + 1e-12) & (np.abs(v) <= half_wid + 1e-12)


def grasp_candidates_from_maps(
    top_map: HeightMap,
    bottom_map: HeightMap,
    gripper: GripperModel,
    yaw_steps: int = DEFAULT_YAW_STEPS,
    contact_tol: float | None = None,
) -> list[GraspCandidate]:
    """Grasps at the top-surface centroid, one per gripper yaw.

    The top surface is the set of covered cells within ``contact_tol``
    (default one cell) of the object's peak height.
    """
    if yaw_steps < 1:
        raise MeshValidationError("yaw_steps must be at least 1")
    if contact_tol is None:
        contact_tol = top_map.resolution
    covered = np.isfinite(bottom_map.data)
    if not covered.any():
        raise NoGraspError("object exposes no top surface cells")
    peak = float(top_map.data[covered].max())
    top_cells = covered & (top_map.data >= peak - contact_tol)
    res = top_map.resolution
    ii, jj = np.nonzero(top_cells)
    centers_x = (ii + 0.5) * res
    centers_y = (jj + 0.5) * res
    gx = float(centers_x.mean())
    gy = float(centers_y.mean())

    nx, ny = top_map.shape
    grid_x = (np.arange(nx)[:, None] + 0.5) * res
    grid_y = (np.arange(ny)[None, :] + 0.5) * res
    cell_area = res * res
    rect_area = gripper.length * gripper.width
    half_len, half_wid = gripper.length / 2.0, gripper.width / 2.0

    out = []
    for k in range(yaw_steps):
        yaw = 2.0 * math.pi * k / yaw_steps
        rect = _rect_mask(grid_x, grid_y, gx, gy, yaw, half_len, half_wid)
        in_grid_area = float(rect.sum()) * cell_area
        over_cells = float((rect & ~covered).sum()) * cell_area
        outside = max(rect_area - in_grid_area, 0.0)
        out.append(
            GraspCandidate(
                yaw=yaw,
                local_point=(gx, gy, peak),
                overhang_area=over_cells + outside,
            )
        )
    out.sort(key=lambda g: (g.overhang_area, g.yaw))
    return out


def grasp_candidates(
    mesh: TriangleMesh,
    transform: RigidTransform,
    gripper: GripperModel,
    yaw_steps: int = DEFAULT_YAW_STEPS,
    resolution: float = 0.002,
    contact_tol: float | None = None,
) -> list[GraspCandidate]:
    """Grasps for an object at its destination orientation."""
    top_map, bottom_map = raycast_heightmaps(mesh, transform.rpy, resolution)
    return grasp_candidates_from_maps(top_map, bottom_map, gripper, yaw_steps, contact_tol)


ExternalCheck = Callable[[GraspCandidate, RigidTransform], bool]


def is_manip_feasible(
    transform: RigidTransform,
    mesh: TriangleMesh,
    container_map: HeightMap,
    gripper: GripperModel,
    grasps: list[GraspCandidate],
    container: Container,
    external_check: ExternalCheck | None = None,
    tol: float = 1e-9,
) -> bool:
    """True when some grasp descends onto the placed object without collision.

    Terrain under the gripper rectangle must stay at or below the grasp plane
    of the final pose; footprint parts beyond the container walls require the
    grasp plane to clear the rim. Terrain under the object itself is already
    cleared by the lowest-height placement query.
    """
    world = transform_mesh(mesh, transform)
    lo = world.vertices.min(axis=0)
    res = container_map.resolution
    nx, ny = container_map.shape
    half_len, half_wid = gripper.length / 2.0, gripper.width / 2.0
    half_diag = math.hypot(half_len, half_wid)

    for grasp in grasps:
        gx = lo[0] + grasp.local_point[0]
        gy = lo[1] + grasp.local_point[1]
        plane_z = lo[2] + grasp.local_point[2]

        beyond_walls = (
            gx - half_diag < -tol
            or gy - half_diag < -tol
            or gx + half_diag > container.length + tol
            or gy + half_diag > container.width + tol
        )
        if beyond_walls:
            # recheck precisely: corners of the yawed rectangle
            c, s = math.cos(grasp.yaw), math.sin(grasp.yaw)
            corners = []
            for su, sv in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                u, v = su * half_len, sv * half_wid
                corners.append((gx + c * u - s * v, gy + s * u + c * v))
            beyond_walls = any(
                px < -tol or py < -tol or px > container.length + tol or py > container.width + tol
                for px, py in corners
            )
        if beyond_walls and plane_z < container.height - tol:
            continue  # the gripper would crash into a wall on the way down

        i0 = max(0, int(math.floor((gx - half_diag) / res)))
        i1 = min(nx - 1, int(math.floor((gx + half_diag) / res)))
        j0 = max(0, int(math.floor((gy - half_diag) / res)))
        j1 = min(ny - 1, int(math.floor((gy + half_diag) / res)))
        blocked = False
        if i1 >= i0 and j1 >= j0:
            sub = container_map.data[i0 : i1 + 1, j0 : j1 + 1]
            cx = (np.arange(i0, i1 + 1)[:, None] + 0.5) * res
            cy = (np.arange(j0, j1 + 1)[None, :] + 0.5) * res
            rect = _rect_mask(cx, cy, gx, gy, grasp.yaw, half_len, half_wid)
            inside_dims = (cx <= container.length + tol) & (cy <= container.width + tol)
            cells = rect & inside_dims
            if cells.any() and float(sub[cells].max()) > plane_z + max(tol, 1e-9):
                blocked = True
        if blocked:
            continue
        if external_check is not None and not external_check(
            grasp, RigidTransform(yaw=grasp.yaw, xyz=(gx, gy, plane_z))
        ):
            continue
        return True
    return False
