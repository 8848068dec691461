"""Plan document serialization.

Plans serialize to a stable JSON schema with floats printed at 17
significant digits, which round-trips float64 exactly and keeps repeated
runs byte-identical.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path

from .containers import Container
from .errors import MeshValidationError
from .geometry import RigidTransform
from .planner import (
    PackFailure,
    PackingPlan,
    PlanStep,
    SearchConfig,
    StepDiagnostics,
)

SCHEMA_VERSION = 1


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return '"nan"'
        if math.isinf(value):
            return '"inf"' if value > 0 else '"-inf"'
        return f"{value:.17g}"
    if isinstance(value, int):
        return str(value)
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in value.items())
        return "{" + ", ".join(items) + "}"
    raise MeshValidationError(f"cannot serialize value of type {type(value)!r}")


def dumps_document(doc: dict) -> str:
    """Deterministic JSON text (insertion order, 17 significant digits)."""
    return _fmt(doc) + "\n"


def _transform_doc(t: RigidTransform) -> dict:
    return {"rpy": [t.roll, t.pitch, t.yaw], "xyz": list(t.xyz)}


def _transform_from(doc: dict) -> RigidTransform:
    rpy = doc["rpy"]
    return RigidTransform(float(rpy[0]), float(rpy[1]), float(rpy[2]), tuple(doc["xyz"]))


def plan_to_document(plan: PackingPlan, mesh_paths: list[str] | None = None) -> dict:
    """Schema: container, config, steps (item/mesh/transform/score/fallback)."""
    steps = []
    for s in plan.steps:
        entry = {
            "item": s.item,
            "mesh": None if mesh_paths is None else mesh_paths[s.item],
            "transform": _transform_doc(s.transform),
            "score": s.score,
            "fallback": s.fallback,
            "diagnostics": asdict(s.diagnostics),
        }
        steps.append(entry)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "container": {
            "dims": [plan.container.length, plan.container.width, plan.container.height],
            "mu_wall": plan.container.mu_wall,
        },
        "config": asdict(plan.config),
        "solved": plan.solved,
        "steps": steps,
    }
    if plan.failure is not None:
        doc["failure"] = {
            "item": plan.failure.item,
            "reason": plan.failure.reason,
            "unattempted": list(plan.failure.unattempted),
        }
    return doc


def plan_from_document(doc: dict) -> tuple[PackingPlan, list[str | None]]:
    """Rebuild a plan plus the per-step mesh paths recorded in the document."""
    dims = doc["container"]["dims"]
    container = Container(
        float(dims[0]), float(dims[1]), float(dims[2]),
        float(doc["container"].get("mu_wall", 0.7)),
    )
    cfg_doc = dict(doc["config"])
    config = SearchConfig(**cfg_doc)
    steps = []
    paths: list[str | None] = []
    for s in doc["steps"]:
        diag = s.get("diagnostics") or {}
        steps.append(
            PlanStep(
                item=int(s["item"]),
                transform=_transform_from(s["transform"]),
                score=float(s["score"]),
                fallback=s.get("fallback", "none"),
                diagnostics=StepDiagnostics(**diag),
            )
        )
        paths.append(s.get("mesh"))
    failure = None
    if "failure" in doc:
        failure = PackFailure(
            item=int(doc["failure"]["item"]),
            reason=doc["failure"]["reason"],
            unattempted=tuple(doc["failure"].get("unattempted", ())),
        )
    plan = PackingPlan(
        container=container,
        config=config,
        steps=tuple(steps),
        solved=bool(doc["solved"]),
        failure=failure,
    )
    return plan, paths


def save_plan(plan: PackingPlan, path: str | Path, mesh_paths: list[str] | None = None) -> None:
    Path(path).write_text(dumps_document(plan_to_document(plan, mesh_paths)))


def load_plan(path: str | Path) -> tuple[PackingPlan, list[str | None]]:
    return plan_from_document(json.loads(Path(path).read_text()))
