from __future__ import annotations

from typing import Any

from fastapi import APIRouter, HTTPException, Query
from pydantic import BaseModel, Field

from ..errors import StochOrderError
from ..services.data_store import iter_presets
from ..services.oracle import DEFAULT_RELATIONS
from ..services.reports import compare, parse_orders, threshold_table, to_jsonable
from ..services.spec_parser import parse_dist_spec

router = APIRouter(prefix="/api", tags=["api"])


class CompareRequest(BaseModel):
    x: str
    y: str
    orders: list[str] = Field(default_factory=lambda: list(DEFAULT_RELATIONS))
    tol: float | None = None
    grid_points: int | None = None
    tail_tol: float | None = None


@router.post("/compare")
def compare_endpoint(payload: CompareRequest) -> dict[str, Any]:
    """Same document as ``stochorder compare``; ``exit_code`` is part of the body."""
    try:
        report = compare(
            parse_dist_spec(payload.x),
            parse_dist_spec(payload.y),
            orders=parse_orders(payload.orders),
            tol=payload.tol,
            grid_points=payload.grid_points,
            tail_tol=payload.tail_tol,
        )
    except StochOrderError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return to_jsonable(report.to_dict())


@router.get("/threshold")
def threshold_endpoint(spec: str = Query(..., description="gconv, nbconv or pbin expression")) -> dict[str, Any]:
    try:
        document = threshold_table(parse_dist_spec(spec))
    except StochOrderError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return to_jsonable(document)


@router.get("/presets")
async def list_presets() -> dict[str, Any]:
    return {"presets": list(iter_presets())}
