"""Static equilibrium checking for piles of placed objects.

Contacts are found by scaling each body slightly about its center of mass and
intersecting the inflated surfaces; nearby contacts merge on a voxel grid.
The pile is stable when a set of contact forces exists satisfying per-body
force and torque balance with every force inside a pyramidal friction cone,
which is a pure linear feasibility problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collide import mesh_intersection_midpoints
from .containers import Container, container_slabs
from .errors import IndeterminateStabilityError, MeshValidationError
from .geometry import (
    RigidTransform,
    TriangleMesh,
    center_of_mass,
    mesh_volume,
    scale_mesh_about,
    transform_mesh,
)
from .lp import LinearProgram, LpStatus, solve_feasibility

GRAVITY = 9.81
DEFAULT_DENSITY = 500.0  # kg/m^3, uniform unless a mass is supplied
DEFAULT_SCALE = 1.03
DEFAULT_CLUSTER_GRID = 0.01
DEFAULT_CONE_SIDES = 4
CONTAINER_BODY = 0


@dataclass(frozen=True)
class Contact:
    """Point contact between two bodies; the normal points from a into b."""

    point: np.ndarray
    normal: np.ndarray
    mu: float
    body_a: int
    body_b: int

    def __post_init__(self):
        p = np.asarray(self.point, dtype=np.float64).reshape(3)
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise MeshValidationError("contact normal must be unit length")
        if self.mu < 0:
            raise MeshValidationError("friction coefficient must be non-negative")
        if self.body_a == self.body_b:
            raise MeshValidationError("contact must join two distinct bodies")
        p.flags.writeable = False
        n.flags.writeable = False
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class BodyState:
    id: int
    mass: float
    com: np.ndarray

    def __post_init__(self):
        if self.mass <= 0:
            raise MeshValidationError("body mass must be positive")
        com = np.asarray(self.com, dtype=np.float64).reshape(3)
        com.flags.writeable = False
        object.__setattr__(self, "com", com)


@dataclass(frozen=True)
class EquilibriumProblem:
    bodies: tuple[BodyState, ...]
    contacts: tuple[Contact, ...]
    cone_sides: int = DEFAULT_CONE_SIDES

    def __post_init__(self):
        if self.cone_sides < 3:
            raise MeshValidationError("friction pyramid needs at least 3 sides")
        ids = {b.id for b in self.bodies} | {CONTAINER_BODY}
        for c in self.contacts:
            if c.body_a not in ids or c.body_b not in ids:
                raise MeshValidationError(f"contact references unknown body ({c.body_a},{c.body_b})")


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    contacts: tuple[Contact, ...]
    forces: np.ndarray | None = None
    lp_iterations: int = 0


def _orient(normal: np.ndarray, point: np.ndarray, com_a: np.ndarray, com_b: np.ndarray) -> np.ndarray:
    d = float(normal @ (com_b - point))
    if abs(d) > 1e-12:
        return normal if d > 0 else -normal
    d = float(normal @ (point - com_a))
    return normal if d >= 0 else -normal


def _face_normals(mesh: TriangleMesh) -> np.ndarray:
    c = mesh.triangle_corners()
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    lengths = np.linalg.norm(n, axis=1)
    lengths[lengths < 1e-15] = 1.0
    return n / lengths[:, None]


def cluster_contacts(contacts: list[Contact], grid: float) -> list[Contact]:
    """Merge contacts of the same body pair within one voxel of size ``grid``."""
    if grid <= 0:
        raise MeshValidationError("cluster grid must be positive")
    buckets: dict[tuple, list[Contact]] = {}
    for c in contacts:
        voxel = tuple(int(math.floor(v / grid)) for v in c.point)
        buckets.setdefault((c.body_a, c.body_b, voxel), []).append(c)
    merged = []
    for key in sorted(buckets):
        group = buckets[key]
        pts = np.array([c.point for c in group])
        normals = np.array([c.normal for c in group])
        mean_n = normals.sum(axis=0)
        norm = np.linalg.norm(mean_n)
        normal = mean_n / norm if norm > 1e-9 else group[0].normal
        merged.append(
            Contact(
                point=pts.mean(axis=0),
                normal=normal,
                mu=float(np.mean([c.mu for c in group])),
                body_a=group[0].body_a,
                body_b=group[0].body_b,
            )
        )
    return merged


def detect_contacts(
    arrangement: list[tuple[TriangleMesh, RigidTransform]],
    container: Container,
    mu: float = 0.7,
    scale: float = DEFAULT_SCALE,
    cluster_grid: float = DEFAULT_CLUSTER_GRID,
    fixed_geometry: list[TriangleMesh] = (),
) -> list[Contact]:
    """Contact set for an arrangement inside the container.

    Bodies are numbered 1..N in arrangement order; the container (walls,
    floor, and any additional fixed geometry) is body 0. Each body is scaled
    by ``scale`` about its COM; crossings of the inflated surfaces become
    contact points that are then voxel-clustered.
    """
    if scale <= 1.0:
        raise MeshValidationError("contact scale factor must exceed 1")
    world = [transform_mesh(mesh, tf) for mesh, tf in arrangement]
    coms = [tf.apply(center_of_mass(mesh)) for mesh, tf in arrangement]
    scaled = [scale_mesh_about(m, scale, com) for m, com in zip(world, coms)]
    slabs = container_slabs(container, None)
    # Slab entries: (mesh, friction, canonical inward normal). The floor and
    # fixed terrain share the global friction; the four side walls carry the
    # container's own coefficient. Slab contacts always use the slab's inner
    # face normal, so a wall never reads as vertical support.
    environment: list[tuple] = [(slabs[0], mu, np.array([0.0, 0.0, 1.0]))]
    wall_normals = [
        np.array([1.0, 0.0, 0.0]),
        np.array([-1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([0.0, -1.0, 0.0]),
    ]
    for slab, n in zip(slabs[1:], wall_normals):
        environment.append((slab, container.mu_wall, n))
    environment += [(g, mu, None) for g in fixed_geometry]
    env_com = np.array([container.length / 2, container.width / 2, -container.height])

    contacts: list[Contact] = []

    def add_pair(mesh_a, mesh_b, id_a, id_b, com_a, com_b, normals_a, normals_b, mu_pair, forced):
        mids, tris_a, tris_b = mesh_intersection_midpoints(mesh_a, mesh_b, include_grazing=True)
        for mid, ta, tb in zip(mids, tris_a, tris_b):
            if forced is not None:
                normal = forced.copy()
            else:
                na = normals_a[ta]
                nb = normals_b[tb]
                if max(abs(na[2]), abs(nb[2])) < 0.1:
                    # two near-vertical faces crossing is a corner graze;
                    # letting it carry friction would clamp bodies in place
                    continue
                # of the two crossing faces, the one most opposed to gravity
                # is the supporting surface; ties go to the earlier body
                normal = na if abs(na[2]) >= abs(nb[2]) - 1e-9 else nb
                normal = _orient(normal.copy(), mid, com_a, com_b)
            contacts.append(Contact(point=mid, normal=normal, mu=mu_pair, body_a=id_a, body_b=id_b))

    item_normals = [_face_normals(m) for m in scaled]
    for env_mesh, env_mu, forced in environment:
        env_n = _face_normals(env_mesh)
        for j, mesh_j in enumerate(scaled):
            add_pair(
                env_mesh, mesh_j, CONTAINER_BODY, j + 1, env_com, coms[j],
                env_n, item_normals[j], env_mu, forced,
            )
    for i in range(len(scaled)):
        for j in range(i + 1, len(scaled)):
            add_pair(
                scaled[i], scaled[j], i + 1, j + 1, coms[i], coms[j],
                item_normals[i], item_normals[j], mu, None,
            )
    return cluster_contacts(contacts, cluster_grid)


def _tangent_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axes = np.eye(3)
    e = axes[int(np.argmin(np.abs(normal)))]
    t1 = e - (e @ normal) * normal
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return t1, t2


def friction_pyramid_edges(normal: np.ndarray, mu: float, sides: int) -> np.ndarray:
    """Edge rays of the pyramidal friction cone around ``normal``.

    The pyramid is {f : f.d_m <= mu (f.n)} for ``sides`` tangent directions
    d_m (for four sides exactly |f.t1| <= mu f.n and |f.t2| <= mu f.n); its
    conic hull is spanned by rays at the facet bisectors with tangential
    radius mu / cos(pi/sides). Frictionless contacts degenerate to the
    normal ray alone.
    """
    if mu <= 0:
        return normal[None, :].copy()
    t1, t2 = _tangent_frame(normal)
    r = mu / math.cos(math.pi / sides)
    ang = (2.0 * np.arange(sides) + 1.0) * math.pi / sides
    return normal[None, :] + r * (np.cos(ang)[:, None] * t1 + np.sin(ang)[:, None] * t2)


def build_equilibrium_lp(problem: EquilibriumProblem) -> tuple[LinearProgram, list[np.ndarray]]:
    """Assemble the balance system over cone-edge force coefficients.

    Each contact force is a nonnegative combination of its friction pyramid
    edges, so cone membership is the variable domain and the LP holds only
    force/torque balance equalities (6 per body; the container is exempt).
    Returns the program plus the per-contact edge matrices used to
    reconstruct forces from a solution.
    """
    contacts = problem.contacts
    bodies = problem.bodies
    edge_sets = [friction_pyramid_edges(c.normal, c.mu, problem.cone_sides) for c in contacts]
    n = int(sum(e.shape[0] for e in edge_sets))
    body_rows = {b.id: r for r, b in enumerate(bodies)}
    a_eq = np.zeros((6 * len(bodies), max(n, 1)))
    b_eq = np.zeros(6 * len(bodies))
    for r, body in enumerate(bodies):
        b_eq[6 * r + 2] = body.mass * GRAVITY  # contact forces balance weight

    col = 0
    for c, edges in zip(contacts, edge_sets):
        width = edges.shape[0]
        cols = slice(col, col + width)
        for sign, body_id in ((-1.0, c.body_a), (1.0, c.body_b)):
            r = body_rows.get(body_id)
            if r is None:
                continue  # container side carries no balance rows
            a_eq[6 * r : 6 * r + 3, cols] += sign * edges.T
            lever = bodies[r].com - c.point
            # torque of the applied force about the body's COM: (c - cm) x f
            torque = -sign * np.cross(lever[None, :], edges)
            a_eq[6 * r + 3 : 6 * r + 6, cols] += torque.T
        col += width
    lp = LinearProgram(max(n, 1), a_eq, b_eq, np.zeros((0, max(n, 1))), np.zeros(0), nonneg=True)
    return lp, edge_sets


def check_stability(
    arrangement: list[tuple[TriangleMesh, RigidTransform]],
    container: Container,
    mu: float = 0.7,
    scale: float = DEFAULT_SCALE,
    cluster_grid: float = DEFAULT_CLUSTER_GRID,
    cone_sides: int = DEFAULT_CONE_SIDES,
    masses: list[float] | None = None,
    density: float = DEFAULT_DENSITY,
    fixed_geometry: list[TriangleMesh] = (),
    contacts: list[Contact] | None = None,
) -> StabilityReport:
    """Full stability verdict with the contact set and a force certificate."""
    if not arrangement:
        return StabilityReport(stable=True, contacts=())
    if contacts is None:
        contacts = detect_contacts(
            arrangement, container, mu=mu, scale=scale, cluster_grid=cluster_grid,
            fixed_geometry=fixed_geometry,
        )
    bodies = []
    for i, (mesh, tf) in enumerate(arrangement):
        if masses is not None and masses[i] is not None:
            mass = float(masses[i])
        else:
            mass = density * max(mesh_volume(mesh), 1e-9)
        bodies.append(BodyState(id=i + 1, mass=mass, com=tf.apply(center_of_mass(mesh))))

    touched = {c.body_a for c in contacts} | {c.body_b for c in contacts}
    if any(b.id not in touched for b in bodies):
        return StabilityReport(stable=False, contacts=tuple(contacts))

    problem = EquilibriumProblem(tuple(bodies), tuple(contacts), cone_sides)
    lp, edge_sets = build_equilibrium_lp(problem)
    result = solve_feasibility(lp)
    if result.status is LpStatus.INDETERMINATE:
        raise IndeterminateStabilityError(
            f"equilibrium LP did not converge ({len(contacts)} contacts, "
            f"{len(bodies)} bodies, phase1={result.phase1_objective:.3e})"
        )
    forces = None
    if result.feasible and contacts:
        forces = np.zeros((len(contacts), 3))
        col = 0
        for k, edges in enumerate(edge_sets):
            width = edges.shape[0]
            forces[k] = result.x[col : col + width] @ edges
            col += width
    return StabilityReport(
        stable=result.feasible,
        contacts=tuple(contacts),
        forces=forces,
        lp_iterations=result.iterations,
    )


def is_stable(
    arrangement: list[tuple[TriangleMesh, RigidTransform]],
    container: Container,
    mu: float = 0.7,
    scale: float = DEFAULT_SCALE,
    cluster_grid: float = DEFAULT_CLUSTER_GRID,
    cone_sides: int = DEFAULT_CONE_SIDES,
    masses: list[float] | None = None,
    density: float = DEFAULT_DENSITY,
    fixed_geometry: list[TriangleMesh] = (),
) -> bool:
    """True when a valid set of contact forces balances every placed body."""
    return check_stability(
        arrangement, container, mu=mu, scale=scale, cluster_grid=cluster_grid,
        cone_sides=cone_sides, masses=masses, density=density, fixed_geometry=fixed_geometry,
    ).stable
