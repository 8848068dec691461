"""FastAPI application exposing the packing planner as a local service."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import StackpackError
from . import core
from .models import (
    ExportRequest,
    ExportResponse,
    GenItemsRequest,
    GenItemsResponse,
    PackRequest,
    PackResponse,
    ValidateRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="stackpack",
        description="Constructive 3D irregular-shape packing with stability "
        "and gripper-feasibility constraints.",
        version="0.1.0",
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/pack", response_model=PackResponse)
    def pack(request: PackRequest) -> PackResponse:
        try:
            return core.pack(request)
        except StackpackError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/validate", response_model=ValidateResponse)
    def validate(request: ValidateRequest) -> ValidateResponse:
        try:
            return core.validate(request)
        except StackpackError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/gen-items", response_model=GenItemsResponse)
    def gen_items(request: GenItemsRequest) -> GenItemsResponse:
        try:
            return core.gen_items(request)
        except StackpackError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/export", response_model=ExportResponse)
    def export(request: ExportRequest) -> ExportResponse:
        try:
            return core.export(request)
        except StackpackError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app


app = create_app()
