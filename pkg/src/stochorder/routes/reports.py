from __future__ import annotations

from pathlib import Path
from typing import Any

from fastapi import APIRouter, HTTPException, Query, Request
from fastapi.responses import HTMLResponse
from fastapi.templating import Jinja2Templates

from ..errors import StochOrderError
from ..services.reports import ComparisonReport, compare, format_cell, parse_orders
from ..services.spec_parser import parse_dist_spec

router = APIRouter(prefix="/reports", tags=["reports"])

_templates_dir = Path(__file__).resolve().parent.parent / "templates"
templates = Jinja2Templates(directory=str(_templates_dir))


@router.get("/compare", response_class=HTMLResponse)
def compare_report(
    request: Request,
    x: str = Query(...),
    y: str = Query(...),
    orders: str | None = Query(default=None),
) -> HTMLResponse:
    """Render a comparison of X and Y as an HTML table."""
    try:
        report = compare(parse_dist_spec(x), parse_dist_spec(y), orders=parse_orders(orders))
    except StochOrderError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    context = build_report_context(report)
    context.update({"request": request})
    return templates.TemplateResponse(request, "compare_report.html", context)


def build_report_context(report: ComparisonReport) -> dict[str, Any]:
    closed_form = report.closed_form
    return {
        "x_label": report.x.canonical(),
        "y_label": report.y.canonical(),
        "rows": _format_rows(report.rows()),
        "grid": report.grid,
        "closed_form": closed_form.name if closed_form else None,
        "thresholds": _format_rows(closed_form.thresholds if closed_form else []),
        "exit_code": report.exit_code,
        "discrepancy": report.discrepancy,
    }


def _format_rows(rows: list[dict[str, object]]) -> list[dict[str, str]]:
    return [{key: format_cell(value) for key, value in row.items()} for row in rows]
