"""Independent step-wise plan validation.

Replays a plan placement by placement and checks each intermediate
arrangement directly on the meshes: interpenetration (triangle-level, not
heightmaps), containment, static stability, and gripper feasibility. This is
the ground-truth gate the planner's plans must pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collide import penetration_depth
from .containers import Container
from .errors import IndeterminateStabilityError, NoGraspError
from .geometry import RigidTransform, TriangleMesh, transform_mesh
from .heightmap import container_heightmap
from .manipulation import grasp_candidates, is_manip_feasible
from .planner import PackingPlan, SearchConfig
from .stability import is_stable

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_SKIPPED = "skipped"
VERDICT_INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class StepRecord:
    step: int
    item: int
    penetration: float
    containment_margin: float
    non_overlap: str
    containment: str
    stability: str
    manipulation: str

    @property
    def ok(self) -> bool:
        return all(
            v in (VERDICT_PASS, VERDICT_SKIPPED)
            for v in (self.non_overlap, self.containment, self.stability, self.manipulation)
        )


@dataclass(frozen=True)
class ValidationReport:
    records: tuple[StepRecord, ...]
    passed: bool
    first_failure: int | None = None  # step index of the first violated record


def containment_margin(mesh: TriangleMesh, container: Container) -> float:
    """Smallest signed distance from any vertex to the container bounds."""
    v = mesh.vertices
    margins = [
        v[:, 0].min() - 0.0,
        container.length - v[:, 0].max(),
        v[:, 1].min() - 0.0,
        container.width - v[:, 1].max(),
        v[:, 2].min() - 0.0,
        container.height - v[:, 2].max(),
    ]
    return float(min(margins))


def validate_plan(
    plan: PackingPlan,
    meshes: list[TriangleMesh],
    container: Container | None = None,
    config: SearchConfig | None = None,
    masses: list[float | None] | None = None,
) -> ValidationReport:
    """Replay a plan and check every intermediate arrangement.

    The per-step penetration tolerance is the heightmap resolution (the
    planner's stated approximation bound); containment allows 1e-6 m. The
    report records every step even after the first failure.
    """
    container = container or plan.container
    config = config or plan.config
    records: list[StepRecord] = []
    placed: list[tuple[TriangleMesh, RigidTransform]] = []
    placed_world: list[TriangleMesh] = []
    first_failure = None
    gripper = config.gripper()

    for k, step in enumerate(plan.steps):
        mesh = meshes[step.item]
        world = transform_mesh(mesh, step.transform)

        pen = 0.0
        for other in placed_world:
            pen = max(pen, penetration_depth(world, other))
        non_overlap = VERDICT_PASS if pen <= config.resolution + 1e-9 else VERDICT_FAIL

        margin = containment_margin(world, container)
        containment = VERDICT_PASS if margin >= -1e-6 else VERDICT_FAIL

        stability = VERDICT_SKIPPED
        if config.stability:
            trial = placed + [(mesh, step.transform)]
            trial_masses = None
            if masses is not None:
                trial_masses = [masses[s.item] for s in plan.steps[: k + 1]]
            try:
                ok = is_stable(
                    trial,
                    container,
                    mu=config.mu,
                    scale=config.scale_factor,
                    cluster_grid=config.cluster_grid,
                    cone_sides=config.cone_sides,
                    masses=trial_masses,
                    density=config.density,
                )
                stability = VERDICT_PASS if ok else VERDICT_FAIL
            except IndeterminateStabilityError:
                stability = VERDICT_INDETERMINATE

        manipulation = VERDICT_SKIPPED
        if config.manipulation:
            # terrain before this step, rebuilt from scratch (independent of
            # the planner's incremental map)
            height_map = container_heightmap(container, placed, config.resolution)
            try:
                grasps = grasp_candidates(
                    mesh, step.transform, gripper, config.grasp_yaw_steps, config.resolution
                )
                ok = is_manip_feasible(
                    step.transform, mesh, height_map, gripper, grasps, container
                )
                manipulation = VERDICT_PASS if ok else VERDICT_FAIL
            except NoGraspError:
                manipulation = VERDICT_FAIL

        record = StepRecord(
            step=k,
            item=step.item,
            penetration=pen,
            containment_margin=margin,
            non_overlap=non_overlap,
            containment=containment,
            stability=stability,
            manipulation=manipulation,
        )
        records.append(record)
        if not record.ok and first_failure is None:
            first_failure = k
        placed.append((mesh, step.transform))
        placed_world.append(world)

    return ValidationReport(
        records=tuple(records),
        passed=first_failure is None,
        first_failure=first_failure,
    )
