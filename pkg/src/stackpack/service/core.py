"""Service layer: the operations behind both the HTTP endpoints and the CLI.

Items resolve either from mesh files or from procedural generator URIs of
the form ``proc:kind?seed=S&lx=0.1`` so that plans stay reproducible without
shipping mesh assets.
"""
from __future__ import annotations

import tempfile
import urllib.parse
from pathlib import Path

from ..errors import MeshValidationError, StackpackError
from ..exportscene import export_scene
from ..geometry import TriangleMesh, mesh_volume
from ..meshio import load_mesh, save_obj
from ..plans import dumps_document, plan_from_document, plan_to_document
from ..planner import pack_all
from ..procgen import generate_test_items
from ..validator import validate_plan
from .models import (
    ContainerAttempt,
    ExportFile,
    ExportRequest,
    ExportResponse,
    GenItemsRequest,
    GenItemsResponse,
    ItemSpec,
    MeshStats,
    PackRequest,
    PackResponse,
    StepRecordModel,
    ValidateRequest,
    ValidateResponse,
)


def proc_uri(kind: str, params: dict | None, seed: int) -> str:
    query = {"seed": str(seed)}
    for k in sorted(params or {}):
        query[k] = f"{float((params or {})[k]):.17g}"
    return f"proc:{kind}?{urllib.parse.urlencode(query)}"


def mesh_from_uri(uri: str) -> TriangleMesh:
    """Load a mesh from a file path or a ``proc:`` generator URI."""
    if uri.startswith("proc:"):
        rest = uri[len("proc:") :]
        kind, _, query = rest.partition("?")
        fields = dict(urllib.parse.parse_qsl(query))
        seed = int(fields.pop("seed", "0"))
        params = {k: float(v) for k, v in fields.items()}
        return generate_test_items(kind, params or None, seed=seed)
    return load_mesh(uri)


def resolve_items(
    specs: list[ItemSpec], default_seed: int = 0
) -> tuple[list[TriangleMesh], list[str], list[float | None]]:
    """Expand item specs (counts included) into meshes, URIs, and masses."""
    meshes: list[TriangleMesh] = []
    uris: list[str] = []
    masses: list[float | None] = []
    serial = 0
    for spec in specs:
        for _ in range(spec.count):
            if spec.mesh is not None:
                uri = spec.mesh
                mesh = load_mesh(spec.mesh)
            elif spec.kind is not None:
                seed = spec.seed if spec.seed is not None else default_seed + serial
                uri = proc_uri(spec.kind, spec.params, seed)
                mesh = mesh_from_uri(uri)
            else:
                raise MeshValidationError("item spec needs either a mesh path or a kind")
            meshes.append(mesh)
            uris.append(uri)
            masses.append(spec.mass)
            serial += 1
    return meshes, uris, masses


def pack(request: PackRequest) -> PackResponse:
    """Pack against the container list, smallest volume first."""
    meshes, uris, masses = resolve_items(request.items, request.seed)
    config = request.config.to_domain()
    order = sorted(range(len(request.containers)), key=lambda i: (request.containers[i].volume, i))
    attempts = []
    for idx in order:
        container = request.containers[idx].to_domain()
        plan = pack_all(meshes, container, config, request.sequence, masses)
        if plan.solved:
            attempts.append(ContainerAttempt(container_index=idx, solved=True))
            return PackResponse(
                solved=True,
                container_index=idx,
                plan=plan_to_document(plan, uris),
                attempts=attempts,
                message=f"packed {len(plan.steps)} items into container {idx}",
            )
        reason = plan.failure.reason if plan.failure else "unsolved"
        item = plan.failure.item if plan.failure else None
        attempts.append(
            ContainerAttempt(
                container_index=idx,
                solved=False,
                reason=f"item {item}: {reason}" if item is not None else reason,
            )
        )
    return PackResponse(
        solved=False,
        attempts=attempts,
        message="no container admits a full plan",
    )


def _meshes_for_plan(paths: list[str | None], items: list[ItemSpec] | None, seed: int = 0):
    if items is not None:
        meshes, uris, masses = resolve_items(items, seed)
        return meshes, masses
    meshes_by_item: dict[int, TriangleMesh] = {}
    if any(p is None for p in paths):
        raise MeshValidationError("plan document lacks mesh uris; pass item specs instead")
    return [mesh_from_uri(p) for p in paths], [None] * len(paths)


def validate(request: ValidateRequest) -> ValidateResponse:
    plan, paths = plan_from_document(request.plan)
    # paths are per step; rebuild the per-item table
    item_count = max((s.item for s in plan.steps), default=-1) + 1
    per_item: list[str | None] = [None] * item_count
    for step, path in zip(plan.steps, paths):
        if path is not None:
            per_item[step.item] = path
    if request.items is not None:
        meshes, _uris, masses = resolve_items(request.items)
    else:
        if any(p is None for p in per_item):
            raise MeshValidationError("plan document lacks mesh uris; pass item specs instead")
        meshes = [mesh_from_uri(p) for p in per_item]
        masses = [None] * len(meshes)
    report = validate_plan(plan, meshes, masses=masses)
    return ValidateResponse(
        passed=report.passed,
        first_failure=report.first_failure,
        records=[StepRecordModel(**vars(r)) for r in report.records],
    )


def gen_items(request: GenItemsRequest) -> GenItemsResponse:
    mesh = generate_test_items(request.kind, request.params, seed=request.seed)
    uri = proc_uri(request.kind, request.params, request.seed)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "item.obj"
        save_obj(path, [("item", mesh)])
        text = path.read_text()
    box = mesh.aabb()
    return GenItemsResponse(
        uri=uri,
        obj_text=text,
        stats=MeshStats(
            vertices=mesh.num_vertices,
            triangles=mesh.num_triangles,
            volume=mesh_volume(mesh),
            aabb_extent=tuple(float(v) for v in box.extent),
        ),
    )


def export(request: ExportRequest) -> ExportResponse:
    plan, paths = plan_from_document(request.plan)
    item_count = max((s.item for s in plan.steps), default=-1) + 1
    per_item: list[str | None] = [None] * item_count
    for step, path in zip(plan.steps, paths):
        if path is not None:
            per_item[step.item] = path
    if request.items is not None:
        meshes, _uris, _masses = resolve_items(request.items)
    else:
        if any(p is None for p in per_item):
            raise MeshValidationError("plan document lacks mesh uris; pass item specs instead")
        meshes = [mesh_from_uri(p) for p in per_item]
    with tempfile.TemporaryDirectory() as tmp:
        written = export_scene(plan, meshes, out_dir=tmp, prefix=request.prefix)
        files = [ExportFile(name=p.name, content=p.read_text()) for p in written]
    return ExportResponse(files=files)


def plan_document_text(response: PackResponse) -> str:
    if response.plan is None:
        raise StackpackError("no plan to serialize")
    return dumps_document(response.plan)
