"""Pydantic request/response models shared by the HTTP API and the CLI."""
from __future__ import annotations

import math
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator

from ..containers import Container
from ..planner import SearchConfig


class ContainerModel(BaseModel):
    dims: tuple[float, float, float]
    mu_wall: float = 0.7

    @field_validator("dims")
    @classmethod
    def _positive(cls, v):
        if min(v) <= 0:
            raise ValueError("container dimensions must be positive")
        return v

    def to_domain(self) -> Container:
        return Container(self.dims[0], self.dims[1], self.dims[2], self.mu_wall)

    @property
    def volume(self) -> float:
        return self.dims[0] * self.dims[1] * self.dims[2]


class SearchConfigModel(BaseModel):
    resolution: float = 0.002
    xy_step: float = 0.01
    delta_r: float = math.pi / 4
    top_n_orientations: int = 4
    candidate_cap: Optional[int] = 100
    heuristic: str = "hm"
    heuristic_c: float = 1.0
    stability: bool = True
    manipulation: bool = True
    mu: float = 0.7
    scale_factor: float = 1.03
    cluster_grid: float = 0.01
    cone_sides: int = 4
    density: float = 500.0
    gripper_length: float = 0.30
    gripper_width: float = 0.02
    grasp_yaw_steps: int = 8
    full_yaw_range: bool = False
    mode: str = "prioritized"

    def to_domain(self) -> SearchConfig:
        return SearchConfig(**self.model_dump())

    @classmethod
    def from_domain(cls, config: SearchConfig) -> "SearchConfigModel":
        from dataclasses import asdict

        return cls(**asdict(config))


class ItemSpec(BaseModel):
    """One item entry: a mesh file, or a procedural kind with parameters."""

    mesh: Optional[str] = None
    kind: Optional[str] = None
    params: Optional[dict[str, float]] = None
    mass: Optional[float] = Field(default=None, gt=0)
    count: int = Field(default=1, ge=1)
    seed: Optional[int] = None

    @field_validator("kind")
    @classmethod
    def _kind_known(cls, v):
        from ..procgen import KINDS

        if v is not None and v not in KINDS:
            raise ValueError(f"unknown procedural kind {v!r}")
        return v


class PackRequest(BaseModel):
    items: list[ItemSpec] = Field(min_length=1)
    containers: list[ContainerModel] = Field(min_length=1)
    config: SearchConfigModel = Field(default_factory=SearchConfigModel)
    seed: int = 0
    sequence: Optional[list[int]] = None


class ContainerAttempt(BaseModel):
    container_index: int
    solved: bool
    reason: Optional[str] = None


class PackResponse(BaseModel):
    solved: bool
    container_index: Optional[int] = None
    plan: Optional[dict[str, Any]] = None
    attempts: list[ContainerAttempt] = Field(default_factory=list)
    message: str = ""


class ValidateRequest(BaseModel):
    plan: dict[str, Any]
    items: Optional[list[ItemSpec]] = None  # overrides the mesh uris in the plan


class StepRecordModel(BaseModel):
    step: int
    item: int
    penetration: float
    containment_margin: float
    non_overlap: str
    containment: str
    stability: str
    manipulation: str


class ValidateResponse(BaseModel):
    passed: bool
    first_failure: Optional[int] = None
    records: list[StepRecordModel]


class GenItemsRequest(BaseModel):
    kind: str
    params: Optional[dict[str, float]] = None
    seed: int = 0


class MeshStats(BaseModel):
    vertices: int
    triangles: int
    volume: float
    aabb_extent: tuple[float, float, float]


class GenItemsResponse(BaseModel):
    uri: str
    obj_text: str
    stats: MeshStats


class ExportRequest(BaseModel):
    plan: dict[str, Any]
    items: Optional[list[ItemSpec]] = None
    prefix: str = "scene"


class ExportFile(BaseModel):
    name: str
    content: str


class ExportResponse(BaseModel):
    files: list[ExportFile]
