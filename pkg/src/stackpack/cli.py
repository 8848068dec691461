"""Command-line front end.

A thin client over the service layer: commands build the same request models
the HTTP API accepts and either call the service in-process (default) or
POST to a running server via ``--server``.

Exit codes: 0 success, 2 no solution found, 1 input or runtime error.
"""
from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from .errors import StackpackError
from .service import core
from .service.models import (
    ContainerModel,
    ExportRequest,
    GenItemsRequest,
    ItemSpec,
    PackRequest,
    SearchConfigModel,
    ValidateRequest,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_SOLUTION = 2


class ServiceClient:
    """Dispatches requests in-process or to a remote server."""

    def __init__(self, server: str | None = None):
        self.server = server.rstrip("/") if server else None

    def _post(self, endpoint: str, payload, response_model):
        import httpx

        resp = httpx.post(f"{self.server}{endpoint}", json=payload.model_dump(), timeout=600.0)
        if resp.status_code != 200:
            raise StackpackError(f"server error {resp.status_code}: {resp.text}")
        return response_model.model_validate(resp.json())

    def pack(self, request: PackRequest):
        if self.server:
            from .service.models import PackResponse

            return self._post("/pack", request, PackResponse)
        return core.pack(request)

    def validate(self, request: ValidateRequest):
        if self.server:
            from .service.models import ValidateResponse

            return self._post("/validate", request, ValidateResponse)
        return core.validate(request)

    def gen_items(self, request: GenItemsRequest):
        if self.server:
            from .service.models import GenItemsResponse

            return self._post("/gen-items", request, GenItemsResponse)
        return core.gen_items(request)

    def export(self, request: ExportRequest):
        if self.server:
            from .service.models import ExportResponse

            return self._post("/export", request, ExportResponse)
        return core.export(request)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("STACKPACK_THREADS", "1")))
    except ValueError:
        return 1


def _parse_containers(text: str) -> list[ContainerModel]:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    out = []
    for entry in data:
        if isinstance(entry, list):
            out.append(ContainerModel(dims=tuple(entry)))
        else:
            out.append(ContainerModel(**entry))
    return out


def _item_specs(meshes: tuple[str, ...], items_json: str | None) -> list[ItemSpec]:
    specs = [ItemSpec(mesh=m) for m in meshes]
    if items_json:
        text = items_json
        if text.startswith("@"):
            text = Path(text[1:]).read_text()
        for entry in json.loads(text):
            specs.append(ItemSpec(**entry))
    return specs


def _config_from_flags(**kw) -> SearchConfigModel:
    mapped = {
        "resolution": kw["resolution"],
        "xy_step": kw["xy_step"],
        "delta_r": kw["delta_r"],
        "top_n_orientations": kw["top_n_orientations"],
        "candidate_cap": kw["candidate_cap"],
        "heuristic": kw["heuristic"],
        "heuristic_c": kw["heuristic_c"],
        "mu": kw["mu"],
        "scale_factor": kw["scale_factor"],
        "stability": not kw["no_stability"],
        "manipulation": not kw["no_manip"],
        "gripper_length": kw["gripper_length"],
        "gripper_width": kw["gripper_width"],
        "mode": kw["mode"],
        "full_yaw_range": kw["full_yaw_range"],
    }
    return SearchConfigModel(**mapped)


_config_options = [
    click.option("--heuristic", type=click.Choice(["hm", "dblf", "mta"]), default="hm", show_default=True),
    click.option("--resolution", type=float, default=0.002, show_default=True, help="heightmap cell size (m)"),
    click.option("--xy-step", type=float, default=0.01, show_default=True, help="XY search stride (m)"),
    click.option("--delta-r", type=float, default=math.pi / 4, show_default=True, help="yaw/perturbation step (rad)"),
    click.option("--top-n-orientations", type=int, default=4, show_default=True),
    click.option("--candidate-cap", type=int, default=100, show_default=True),
    click.option("--heuristic-c", type=float, default=1.0, show_default=True),
    click.option("--mu", type=float, default=0.7, show_default=True, help="friction coefficient"),
    click.option("--scale-factor", type=float, default=1.03, show_default=True, help="contact detection inflation"),
    click.option("--no-stability", is_flag=True, help="skip the equilibrium check"),
    click.option("--no-manip", is_flag=True, help="skip the gripper feasibility check"),
    click.option("--gripper-length", type=float, default=0.30, show_default=True),
    click.option("--gripper-width", type=float, default=0.02, show_default=True),
    click.option("--mode", type=click.Choice(["prioritized", "always5d"]), default="prioritized", show_default=True),
    click.option("--full-yaw-range", is_flag=True, help="sweep yaw over [0, 2pi) instead of [0, pi)"),
]


def _apply(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f

    return deco


@click.group()
@click.option("--server", default=None, envvar="STACKPACK_SERVER", help="base URL of a running stackpack server; default runs in-process")
@click.pass_context
def cli(ctx, server):
    """Constructive 3D packing planner and plan validator."""
    ctx.obj = ServiceClient(server)


@cli.command()
@click.argument("meshes", nargs=-1, type=click.Path())
@click.option("--items", "items_json", default=None, help="JSON list of item specs (or @file)")
@click.option("--containers", required=True, help='JSON like [{"dims":[L,W,H]}] or [[L,W,H],...] (or @file)')
@click.option("--sequence", default=None, help="comma-separated packing order (item indices)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="write the plan JSON here")
@_apply(_config_options)
@click.pass_obj
def pack(client, meshes, items_json, containers, sequence, seed, out, **flags):
    """Plan a packing for the given items (mesh files and/or item specs)."""
    specs = _item_specs(meshes, items_json)
    if not specs:
        raise click.UsageError("no items given")
    request = PackRequest(
        items=specs,
        containers=_parse_containers(containers),
        config=_config_from_flags(**flags),
        seed=seed,
        sequence=[int(v) for v in sequence.split(",")] if sequence else None,
    )
    response = client.pack(request)
    click.echo(response.message)
    for att in response.attempts:
        status = "solved" if att.solved else f"failed ({att.reason})"
        click.echo(f"  container {att.container_index}: {status}")
    if response.solved and response.plan is not None:
        text = core.plan_document_text(response)
        if out:
            Path(out).write_text(text)
            click.echo(f"plan written to {out}")
        else:
            click.echo(text, nl=False)
    sys.exit(EXIT_OK if response.solved else EXIT_NO_SOLUTION)


@cli.command()
@click.argument("plans", nargs=-1, required=True, type=click.Path())
@click.option("--items", "items_json", default=None, help="item specs overriding the plan's mesh uris")
@click.option("--out", type=click.Path(), default=None, help="write the report JSON here (single plan only)")
@click.pass_obj
def validate(client, plans, items_json, out):
    """Replay plans and check every step; parallel over plans (STACKPACK_THREADS)."""
    items = None
    if items_json:
        items = _item_specs((), items_json)

    def run(path):
        doc = json.loads(Path(path).read_text())
        return path, client.validate(ValidateRequest(plan=doc, items=items))

    results = []
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        for path, report in pool.map(run, plans):
            results.append((path, report))
    all_passed = True
    for path, report in results:
        click.echo(f"{path}: {'PASS' if report.passed else 'FAIL'}")
        for rec in report.records:
            click.echo(
                f"  step {rec.step} item {rec.item}: overlap={rec.non_overlap} "
                f"containment={rec.containment} stability={rec.stability} "
                f"manipulation={rec.manipulation} pen={rec.penetration:.6f}"
            )
        all_passed &= report.passed
    if out and len(results) == 1:
        Path(out).write_text(results[0][1].model_dump_json(indent=2) + "\n")
    sys.exit(EXIT_OK if all_passed else EXIT_NO_SOLUTION)


@cli.command("gen-items")
@click.option("--kind", type=click.Choice(["box", "lshape", "bowl", "wedge"]), required=True)
@click.option("--params", default=None, help='JSON dict of dimensions, e.g. {"lx":0.1}')
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="output OBJ path")
@click.pass_obj
def gen_items(client, kind, params, seed, out):
    """Generate a deterministic procedural test item as an OBJ file."""
    request = GenItemsRequest(kind=kind, params=json.loads(params) if params else None, seed=seed)
    response = client.gen_items(request)
    Path(out).write_text(response.obj_text)
    click.echo(
        f"{response.uri}: {response.stats.vertices} vertices, "
        f"{response.stats.triangles} triangles -> {out}"
    )
    sys.exit(EXIT_OK)


@cli.command()
@click.argument("plan", type=click.Path())
@click.option("--items", "items_json", default=None, help="item specs overriding the plan's mesh uris")
@click.option("--out", type=click.Path(), default=".", show_default=True, help="output directory")
@click.option("--prefix", default="scene", show_default=True)
@click.pass_obj
def export(client, plan, items_json, out, prefix):
    """Write per-step OBJ scenes and the final heightmap PGM for a plan."""
    doc = json.loads(Path(plan).read_text())
    items = _item_specs((), items_json) if items_json else None
    response = client.export(ExportRequest(plan=doc, items=items, prefix=prefix))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for f in response.files:
        (out_dir / f.name).write_text(f.content)
        click.echo(f"wrote {out_dir / f.name}")
    sys.exit(EXIT_OK)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


def main():
    try:
        cli(standalone_mode=False)
    except SystemExit as exc:
        raise exc
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_ERROR)
    except (StackpackError, OSError, json.JSONDecodeError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
