"""Constructive packing pipeline.

Items are sequenced by decreasing bounding-box volume and placed one at a
time, never revisiting earlier placements. For each item a grid search over
resting orientations, yaw, and the XY lattice finds the lowest collision-free
height per pose via heightmaps; candidates are scored by the configured
heuristic and checked against stability and gripper feasibility in rank
order. Items that fail get a second chance once the bin state has changed,
then a sweep over perturbed roll/pitch (the slow 5-DOF stage).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .containers import Container
from .errors import IndeterminateStabilityError, MeshValidationError, NoGraspError
from .geometry import RigidTransform, TriangleMesh, rotate_mesh
from .heightmap import (
    HeightMap,
    empty_container_heightmap,
    lowest_z_grid,
    object_heightmaps,
    update_heightmap,
)
from .heuristics import (
    HEURISTICS,
    PlacementCandidate,
    rank_candidates,
    score_dblf,
    score_hm,
    score_mta,
)
from .manipulation import (
    DEFAULT_YAW_STEPS,
    GripperModel,
    grasp_candidates_from_maps,
    is_manip_feasible,
)
from .orientation import StableOrientation, planar_stable_orientations
from .stability import (
    DEFAULT_CLUSTER_GRID,
    DEFAULT_CONE_SIDES,
    DEFAULT_DENSITY,
    DEFAULT_SCALE,
    is_stable,
)

FALLBACK_NONE = "none"
FALLBACK_RESEQUENCED = "resequenced"
FALLBACK_5D = "5d"
MODES = ("prioritized", "always5d")
_ANGLE_DEDUP = 1e-6


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the placement search; defaults match the reference setup."""

    resolution: float = 0.002
    xy_step: float = 0.01
    delta_r: float = math.pi / 4
    top_n_orientations: int = 4
    candidate_cap: int | None = 100
    heuristic: str = "hm"
    heuristic_c: float = 1.0
    stability: bool = True
    manipulation: bool = True
    mu: float = 0.7
    scale_factor: float = DEFAULT_SCALE
    cluster_grid: float = DEFAULT_CLUSTER_GRID
    cone_sides: int = DEFAULT_CONE_SIDES
    density: float = DEFAULT_DENSITY
    gripper_length: float = 0.30
    gripper_width: float = 0.02
    grasp_yaw_steps: int = DEFAULT_YAW_STEPS
    full_yaw_range: bool = False  # yaw sweeps [0, 2pi) instead of [0, pi)
    mode: str = "prioritized"

    def __post_init__(self):
        if self.resolution <= 0 or self.xy_step <= 0 or self.delta_r <= 0:
            raise MeshValidationError("resolution, xy_step and delta_r must be positive")
        if self.top_n_orientations < 1:
            raise MeshValidationError("top_n_orientations must be at least 1")
        if self.candidate_cap is not None and self.candidate_cap < 1:
            raise MeshValidationError("candidate_cap must be at least 1")
        if self.heuristic not in HEURISTICS:
            raise MeshValidationError(f"unknown heuristic {self.heuristic!r}")
        if self.mode not in MODES:
            raise MeshValidationError(f"unknown search mode {self.mode!r}")

    @property
    def step_cells(self) -> int:
        """XY stride in heightmap cells (the step snaps to the cell lattice)."""
        return max(1, int(round(self.xy_step / self.resolution)))

    def yaw_values(self) -> list[float]:
        limit = 2.0 * math.pi if self.full_yaw_range else math.pi
        count = max(1, int(round(limit / self.delta_r)))
        return [k * self.delta_r for k in range(count) if k * self.delta_r < limit - 1e-12]

    def gripper(self) -> GripperModel:
        return GripperModel(self.gripper_length, self.gripper_width)


@dataclass(frozen=True)
class StepDiagnostics:
    candidates_generated: int = 0
    candidates_checked: int = 0
    orientations_searched: int = 0


@dataclass(frozen=True)
class PlanStep:
    item: int
    transform: RigidTransform
    score: float
    fallback: str = FALLBACK_NONE
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)


@dataclass(frozen=True)
class PackFailure:
    item: int
    reason: str
    unattempted: tuple[int, ...] = ()


@dataclass(frozen=True)
class PackingPlan:
    container: Container
    config: SearchConfig
    steps: tuple[PlanStep, ...]
    solved: bool
    failure: PackFailure | None = None

    @property
    def sequence(self) -> tuple[int, ...]:
        return tuple(s.item for s in self.steps)

    @property
    def transforms(self) -> tuple[RigidTransform, ...]:
        return tuple(s.transform for s in self.steps)


def sequence_items(
    meshes: list[TriangleMesh], user_sequence: list[int] | None = None
) -> list[int]:
    """Non-increasing bounding-box volume order; a user sequence wins as-is."""
    if not meshes:
        raise MeshValidationError("cannot sequence an empty item set")
    if user_sequence is not None:
        if sorted(user_sequence) != list(range(len(meshes))):
            raise MeshValidationError("user sequence must be a permutation of the items")
        return list(user_sequence)
    volumes = [m.aabb().volume for m in meshes]
    return sorted(range(len(meshes)), key=lambda i: (-volumes[i], i))


class _OrientationCache:
    """Memoizes per-orientation rasterization of an item mesh."""

    def __init__(self, mesh: TriangleMesh, resolution: float):
        self.mesh = mesh
        self.resolution = resolution
        self._store: dict[tuple[int, int, int], tuple] = {}

    def get(self, roll: float, pitch: float, yaw: float):
        key = (round(roll * 1e9), round(pitch * 1e9), round(yaw * 1e9))
        hit = self._store.get(key)
        if hit is None:
            rotated = rotate_mesh(self.mesh, roll, pitch, yaw)
            top, bottom = object_heightmaps(rotated, self.resolution)
            box = rotated.aabb()
            occupied = np.isfinite(bottom.data)
            hit = (top, bottom, occupied, box)
            self._store[key] = hit
        return hit


def grid_search_3d(
    mesh: TriangleMesh,
    container: Container,
    orientations: list[tuple[float, float]],
    container_map: HeightMap,
    config: SearchConfig,
    cache: _OrientationCache | None = None,
) -> tuple[list[PlacementCandidate], dict[int, tuple]]:
    """Enumerate legal placements over (roll, pitch) x yaw x XY lattice.

    Every candidate's height is the lowest collision-free value at its anchor
    and the whole object fits inside the container. Returns the candidates in
    deterministic (orientation, x, y) order plus the per-orientation maps
    keyed by orientation index (used by scoring, updates, and grasping).
    """
    if cache is None:
        cache = _OrientationCache(mesh, config.resolution)
    yaws = config.yaw_values()
    res = config.resolution
    nx, ny = container_map.shape
    step = config.step_cells
    candidates: list[PlacementCandidate] = []
    maps: dict[int, tuple] = {}
    for io, (roll, pitch) in enumerate(orientations):
        for iy, yaw in enumerate(yaws):
            oi = io * len(yaws) + iy
            top, bottom, occupied, box = cache.get(roll, pitch, yaw)
            maps[oi] = (top, bottom, occupied, box, (roll, pitch, yaw))
            w, h = top.shape
            if w > nx or h > ny:
                continue
            extent = box.extent
            height = float(extent[2])
            if height > container.height + 1e-6:
                continue
            z_grid = lowest_z_grid(container_map, bottom, step)
            for ai in range(z_grid.shape[0]):
                x_cell = ai * step
                x_pos = x_cell * res
                if x_pos + extent[0] > container.length + 1e-6:
                    break
                for aj in range(z_grid.shape[1]):
                    y_cell = aj * step
                    y_pos = y_cell * res
                    if y_pos + extent[1] > container.width + 1e-6:
                        break
                    z = float(z_grid[ai, aj])
                    if z + height > container.height + 1e-6:
                        continue
                    transform = RigidTransform(
                        roll,
                        pitch,
                        yaw,
                        (
                            x_pos - float(box.lo[0]),
                            y_pos - float(box.lo[1]),
                            z - float(box.lo[2]),
                        ),
                    )
                    candidates.append(
                        PlacementCandidate(
                            transform=transform,
                            cell=(x_cell, y_cell),
                            position=(x_pos, y_pos, z),
                            orientation_index=oi,
                            height=height,
                        )
                    )
    return candidates, maps


def _score_all(
    candidates: list[PlacementCandidate],
    maps: dict[int, tuple],
    container_map: HeightMap,
    config: SearchConfig,
) -> list[float]:
    base_sum = float(container_map.data.sum())
    scores = []
    for cand in candidates:
        top, bottom, occupied, _box, _ang = maps[cand.orientation_index]
        if config.heuristic == "dblf":
            scores.append(score_dblf(cand.position, config.heuristic_c))
        elif config.heuristic == "hm":
            scores.append(
                score_hm(container_map, top, cand, config.heuristic_c, occupied, base_sum)
            )
        else:
            scores.append(score_mta(container_map, bottom, cand))
    return scores


@dataclass
class PackState:
    """Mutable bin state threaded through the pipeline."""

    container: Container
    config: SearchConfig
    placed: list[tuple[int, TriangleMesh, RigidTransform]] = field(default_factory=list)
    container_map: HeightMap | None = None
    masses: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.container_map is None:
            self.container_map = empty_container_heightmap(
                self.container.length, self.container.width, self.config.resolution
            )

    def arrangement(self) -> list[tuple[TriangleMesh, RigidTransform]]:
        return [(m, t) for _i, m, t in self.placed]

    def mass_list(self) -> list[float | None]:
        return [self.masses.get(i) for i, _m, _t in self.placed]

    def place(self, item: int, mesh: TriangleMesh, cand: PlacementCandidate, maps: dict):
        top, _bottom, occupied, _box, _ang = maps[cand.orientation_index]
        self.placed.append((item, mesh, cand.transform))
        self.container_map = update_heightmap(
            self.container_map, top, cand.cell[0], cand.cell[1], cand.z, occupied
        )


def pack_one_item(
    mesh: TriangleMesh,
    container: Container,
    orientations: list[tuple[float, float]],
    state: PackState,
    config: SearchConfig,
    cache: _OrientationCache | None = None,
    external_check=None,
    mass: float | None = None,
) -> tuple[PlacementCandidate | None, dict, StepDiagnostics, float]:
    """Best feasible placement for one item against the current bin state.

    Candidates are scored, ranked, and the top ``candidate_cap`` are checked
    (stability first, then grasping) until one passes. Indeterminate
    stability verdicts count as failures, which is the conservative side.
    """
    candidates, maps = grid_search_3d(
        mesh, container, orientations, state.container_map, config, cache
    )
    scores = _score_all(candidates, maps, state.container_map, config)
    ranked = rank_candidates(candidates, scores)
    score_of = dict(zip(map(id, candidates), scores))
    cap = len(ranked) if config.candidate_cap is None else config.candidate_cap
    checked = 0
    gripper = config.gripper()
    for cand in ranked[:cap]:
        checked += 1
        if config.stability:
            trial = state.arrangement() + [(mesh, cand.transform)]
            masses = state.mass_list() + [mass]
            try:
                ok = is_stable(
                    trial,
                    container,
                    mu=config.mu,
                    scale=config.scale_factor,
                    cluster_grid=config.cluster_grid,
                    cone_sides=config.cone_sides,
                    masses=masses,
                    density=config.density,
                )
            except IndeterminateStabilityError:
                ok = False
            if not ok:
                continue
        if config.manipulation:
            top, bottom, _occ, _box, _ang = maps[cand.orientation_index]
            try:
                grasps = grasp_candidates_from_maps(
                    top, bottom, gripper, config.grasp_yaw_steps
                )
            except NoGraspError:
                continue
            if not is_manip_feasible(
                cand.transform,
                mesh,
                state.container_map,
                gripper,
                grasps,
                container,
                external_check,
            ):
                continue
        diag = StepDiagnostics(
            candidates_generated=len(candidates),
            candidates_checked=checked,
            orientations_searched=len(maps),
        )
        return cand, maps, diag, score_of[id(cand)]
    diag = StepDiagnostics(
        candidates_generated=len(candidates),
        candidates_checked=checked,
        orientations_searched=len(maps),
    )
    return None, maps, diag, math.nan


def _normalize_angle(a: float) -> float:
    return a % (2.0 * math.pi)


def _perturbed(base: list[tuple[float, float]], t_r: float, t_p: float, seen: set) -> list:
    out = []
    for roll, pitch in base:
        r = _normalize_angle(roll + t_r)
        p = _normalize_angle(pitch + t_p)
        key = (round(r / _ANGLE_DEDUP), round(p / _ANGLE_DEDUP))
        if key in seen:
            continue
        seen.add(key)
        out.append((r, p))
    return out


def _orientation_pairs(stable: list[StableOrientation]) -> list[tuple[float, float]]:
    return [(o.roll, o.pitch) for o in stable]


def pack_all(
    meshes: list[TriangleMesh],
    container: Container,
    config: SearchConfig | None = None,
    sequence: list[int] | None = None,
    masses: list[float | None] | None = None,
    external_check=None,
) -> PackingPlan:
    """Pack an item set, retrying failed items after the bin changes and then
    sweeping perturbed roll/pitch sets (the 5-DOF fallback).

    Returns a plan with ``solved=False`` plus the partial sequence when some
    item cannot be placed by any stage.
    """
    config = config or SearchConfig()
    order = sequence_items(meshes, sequence)
    orientation_sets: list[list[tuple[float, float]]] = []
    for mesh in meshes:
        stable = planar_stable_orientations(mesh, config.top_n_orientations)
        pairs = _orientation_pairs(stable)
        if not pairs:
            pairs = [(0.0, 0.0)]  # degenerate: fall back to the as-given pose
        if config.mode == "always5d":
            seen: set = set()
            full = []
            steps = _fallback_steps(config)
            for t_r in steps:
                for t_p in steps:
                    full.extend(_perturbed(pairs, t_r, t_p, seen))
            pairs = full
        orientation_sets.append(pairs)

    state = PackState(container=container, config=config)
    if masses is not None:
        state.masses = {i: m for i, m in enumerate(masses) if m is not None}
    caches = {i: _OrientationCache(m, config.resolution) for i, m in enumerate(meshes)}
    steps: list[PlanStep] = []
    unpacked: list[int] = []

    for item in order:
        cand, maps, diag, score = pack_one_item(
            meshes[item],
            container,
            orientation_sets[item],
            state,
            config,
            caches[item],
            external_check,
            state.masses.get(item),
        )
        if cand is None:
            unpacked.append(item)
            continue
        state.place(item, meshes[item], cand, maps)
        steps.append(
            PlanStep(item=item, transform=cand.transform, score=score, diagnostics=diag)
        )

    if config.mode == "prioritized":
        for pos, item in enumerate(unpacked):
            placed = _fallback_pack(
                item, meshes, orientation_sets[item], state, config, caches[item],
                external_check, steps,
            )
            if not placed:
                return PackingPlan(
                    container=container,
                    config=config,
                    steps=tuple(steps),
                    solved=False,
                    failure=PackFailure(
                        item=item,
                        reason="no placement found in any perturbed orientation",
                        unattempted=tuple(unpacked[pos + 1 :]),
                    ),
                )
    elif unpacked:
        item = unpacked[0]
        return PackingPlan(
            container=container,
            config=config,
            steps=tuple(steps),
            solved=False,
            failure=PackFailure(
                item=item,
                reason="no placement found in the full orientation sweep",
                unattempted=tuple(unpacked[1:]),
            ),
        )

    return PackingPlan(container=container, config=config, steps=tuple(steps), solved=True)


def _fallback_steps(config: SearchConfig) -> list[float]:
    count = max(1, int(round(2.0 * math.pi / config.delta_r)))
    return [k * config.delta_r for k in range(count) if k * config.delta_r < 2.0 * math.pi - 1e-12]


def _fallback_pack(
    item: int,
    meshes: list[TriangleMesh],
    base: list[tuple[float, float]],
    state: PackState,
    config: SearchConfig,
    cache: _OrientationCache,
    external_check,
    steps: list[PlanStep],
) -> bool:
    seen: set = set()
    for t_r in _fallback_steps(config):
        for t_p in _fallback_steps(config):
            pairs = _perturbed(base, t_r, t_p, seen)
            if not pairs:
                continue
            cand, maps, diag, score = pack_one_item(
                meshes[item], state.container, pairs, state, config, cache,
                external_check, state.masses.get(item),
            )
            if cand is None:
                continue
            fallback = FALLBACK_RESEQUENCED if (t_r == 0.0 and t_p == 0.0) else FALLBACK_5D
            state.place(item, meshes[item], cand, maps)
            steps.append(
                PlanStep(
                    item=item,
                    transform=cand.transform,
                    score=score,
                    fallback=fallback,
                    diagnostics=diag,
                )
            )
            return True
    return False
