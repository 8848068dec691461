"""Scene export: per-step OBJ snapshots of the filling container plus the
final heightmap as a PGM image."""
from __future__ import annotations

from pathlib import Path

from .containers import Container, container_shell
from .errors import StackpackError
from .geometry import TriangleMesh, transform_mesh
from .heightmap import container_heightmap, write_pgm
from .planner import PackingPlan
from .validator import SearchConfig


def export_scene(
    plan: PackingPlan,
    meshes: list[TriangleMesh],
    container: Container | None = None,
    out_dir: str | Path = ".",
    prefix: str = "scene",
) -> list[Path]:
    """Write one OBJ per plan step (shell plus items placed so far) and the
    final terrain PGM. An empty plan exports just the container shell.

    Returns the created file paths in write order.
    """
    container = container or plan.container
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StackpackError(f"cannot create export directory {out_dir}: {exc}") from exc
    shell = container_shell(container)
    written: list[Path] = []

    def write_obj(path: Path, upto: int):
        parts = [("container", shell)]
        for k in range(upto):
            step = plan.steps[k]
            parts.append((f"step{k + 1:03d}_item{step.item}", transform_mesh(meshes[step.item], step.transform)))
        from .meshio import save_obj

        try:
            save_obj(path, parts)
        except OSError as exc:
            raise StackpackError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    if not plan.steps:
        write_obj(out_dir / f"{prefix}_container.obj", 0)
    for k in range(1, len(plan.steps) + 1):
        write_obj(out_dir / f"{prefix}_step{k:03d}.obj", k)

    placed = [(meshes[s.item], s.transform) for s in plan.steps]
    resolution = plan.config.resolution if isinstance(plan.config, SearchConfig) else 0.002
    final_map = container_heightmap(container, placed, resolution)
    pgm_path = out_dir / f"{prefix}_final.pgm"
    try:
        write_pgm(final_map, pgm_path)
    except OSError as exc:
        raise StackpackError(f"cannot write {pgm_path}: {exc}") from exc
    written.append(pgm_path)
    return written
