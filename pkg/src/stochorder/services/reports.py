"""Comparison reports shared by the CLI and the HTTP routes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .. import __version__
from ..config import Settings, get_settings
from ..errors import SpecParseError
from .criteria import (
    CriterionResult,
    DirichletOrder,
    binomial_mixture_criteria,
    dirichlet_negative_moment,
    dirichlet_negative_moment_mc,
    family_mixture_criteria,
    gamma_convolution_criteria,
    gamma_convolution_thresholds,
    negbin_convolution_criteria,
    negbin_convolution_thresholds,
    poisson_binomial_criteria,
    poisson_binomial_thresholds,
)
from .distributions import DiscreteDistribution, Distribution, FiniteMixingMeasure, GammaConvolutionSpec, MixtureFamily, density
from .oracle import DEFAULT_RELATIONS, RELATIONS, CheckGrid, OrderVerdict, check_order, default_grid, quantile_grid
from .spec_parser import DistSpec, build, format_param

logger = logging.getLogger(__name__)

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_USAGE = 2
EXIT_DISCREPANCY = 3

THRESHOLD_KINDS = ("gconv", "nbconv", "pbin")

_SHAPE_RTOL = 1e-12


@dataclass(frozen=True)
class ClosedForm:
    """The closed-form rule that applies to an ordered pair of specs."""

    name: str
    result: CriterionResult
    thresholds: list[dict[str, object]] = field(default_factory=list)


@dataclass(frozen=True)
class OrderOutcome:
    relation: str
    oracle: OrderVerdict
    criterion: bool | None = None
    sides: tuple[float, float] | None = None

    @property
    def discrepancy(self) -> bool:
        return self.criterion is not None and self.criterion != self.oracle.holds

    def to_dict(self) -> dict[str, object]:
        payload: dict[str, object] = {
            "criterion": self.criterion,
            "oracle": self.oracle.to_dict(),
            "discrepancy": self.discrepancy,
        }
        if self.sides is not None:
            payload["lhs"], payload["rhs"] = self.sides
        return payload


@dataclass(frozen=True)
class ComparisonReport:
    x: DistSpec
    y: DistSpec
    orders: tuple[str, ...]
    outcomes: tuple[OrderOutcome, ...]
    grid: dict[str, object]
    tolerance: float
    closed_form: ClosedForm | None = None
    quantile_grid: dict[str, object] | None = None

    @property
    def discrepancy(self) -> bool:
        return any(outcome.discrepancy for outcome in self.outcomes)

    @property
    def all_hold(self) -> bool:
        return all(outcome.oracle.holds for outcome in self.outcomes)

    @property
    def exit_code(self) -> int:
        if self.discrepancy:
            return EXIT_DISCREPANCY
        return EXIT_HOLDS if self.all_hold else EXIT_FAILS

    def to_dict(self) -> dict[str, object]:
        document: dict[str, object] = {
            "tool": "stochorder",
            "version": __version__,
            "input": {"x": self.x.canonical(), "y": self.y.canonical(), "orders": list(self.orders)},
            "tolerance": self.tolerance,
            "grid": self.grid,
        }
        if self.quantile_grid is not None:
            document["quantile_grid"] = self.quantile_grid
        document["closed_form"] = None if self.closed_form is None else {
            "name": self.closed_form.name,
            "thresholds": self.closed_form.thresholds,
        }
        document["orders"] = {outcome.relation: outcome.to_dict() for outcome in self.outcomes}
        document["all_hold"] = self.all_hold
        document["discrepancy"] = self.discrepancy
        document["exit_code"] = self.exit_code
        return document

    def rows(self) -> list[dict[str, object]]:
        return [
            {
                "order": outcome.relation,
                "criterion": outcome.criterion,
                "oracle": outcome.oracle.holds,
                "marginal": outcome.oracle.marginal,
                "witness": outcome.oracle.witness,
                "violation": outcome.oracle.violation,
                "discrepancy": outcome.discrepancy,
            }
            for outcome in self.outcomes
        ]


def parse_orders(text: str | Sequence[str] | None) -> tuple[str, ...]:
    if text is None:
        return DEFAULT_RELATIONS
    items = text.split(",") if isinstance(text, str) else list(text)
    orders = tuple(item.strip().lower() for item in items if item.strip())
    unknown = [order for order in orders if order not in RELATIONS]
    if unknown or not orders:
        raise SpecParseError(f"unknown order(s) {', '.join(unknown) or '(none)'}; expected a subset of {', '.join(RELATIONS)}")
    return tuple(dict.fromkeys(orders))


def closed_form_for(x: DistSpec, y: DistSpec) -> ClosedForm | None:
    """Pick the closed-form rule for X against Y, if one applies."""
    if x.is_kernel and y.kind == "mix" and y.family == x.kernel_family():
        return ClosedForm("expfam_mixture", family_mixture_criteria(y.family, x.kernel_parameter, y.mixing_measure()))
    if x.is_kernel and y.is_kernel and x.kind == y.kind and x.kernel_family() == y.kernel_family():
        if x.kind == "gamma":
            spec = GammaConvolutionSpec((y.params[0],), (y.params[1],))
            return ClosedForm("gamma_convolution", gamma_convolution_criteria(spec, x.params[1]), gamma_convolution_thresholds(spec).rows())
        point = FiniteMixingMeasure.point(y.kernel_parameter)
        return ClosedForm("expfam_mixture", family_mixture_criteria(x.kernel_family(), x.kernel_parameter, point))
    if x.kind == "mix" and y.kind == "binomial" and x.family == MixtureFamily("binomial", y.params[0]):
        return ClosedForm("binomial_mixture_reverse", binomial_mixture_criteria(int(y.params[0]), y.params[1], x.mixing_measure(), reverse=True))
    if x.kind == "gamma" and y.kind == "gconv":
        spec = y.gamma_convolution()
        if _same_shape(x.params[0], spec.alpha_plus):
            thresholds = gamma_convolution_thresholds(spec)
            return ClosedForm("gamma_convolution", gamma_convolution_criteria(spec, x.params[1]), thresholds.rows())
    if x.kind == "negbin" and y.kind == "nbconv":
        spec = y.negbin_convolution()
        if _same_shape(x.params[0], spec.k_plus):
            thresholds = negbin_convolution_thresholds(spec)
            return ClosedForm("negbin_convolution", negbin_convolution_criteria(spec, x.params[1]), thresholds.rows())
    if x.kind == "pbin" and y.kind == "binomial" and len(x.params) == int(y.params[0]):
        spec = x.poisson_binomial()
        return ClosedForm("poisson_binomial", poisson_binomial_criteria(spec, y.params[1]), poisson_binomial_thresholds(spec).up.rows())
    if x.kind == "binomial" and y.kind == "pbin" and len(y.params) == int(x.params[0]):
        spec = y.poisson_binomial()
        return ClosedForm(
            "poisson_binomial_reverse",
            poisson_binomial_criteria(spec, x.params[1], reverse=True),
            poisson_binomial_thresholds(spec).down.rows(),
        )
    return None


def compare(
    x: DistSpec,
    y: DistSpec,
    orders: Sequence[str] = DEFAULT_RELATIONS,
    tol: float | None = None,
    grid_points: int | None = None,
    tail_tol: float | None = None,
    grid_values: Sequence[float] | None = None,
    settings: Settings | None = None,
) -> ComparisonReport:
    """Run every requested oracle check and the matching closed-form criteria.

    ``grid_values`` replaces the default check grid for every order except ``disp``.
    """
    settings = settings or get_settings()
    tol = settings.order_tol if tol is None else tol
    X = build(x, tail_tol=tail_tol)
    Y = build(y, tail_tol=tail_tol)
    closed_form = closed_form_for(x, y)
    verdicts = closed_form.result.verdicts() if closed_form else {}

    grid = resolve_grid(X, Y, grid_values, grid_points, settings)
    disp_grid: CheckGrid | None = None
    outcomes = []
    for relation in orders:
        if relation == "disp":
            disp_grid = disp_grid or quantile_grid(grid_points)
            verdict = check_order("disp", X, Y, grid=disp_grid, tol=tol, settings=settings)
        else:
            verdict = check_order(relation, X, Y, grid=grid, tol=tol, settings=settings)
        sides = closed_form.result.sides(relation) if closed_form else None
        outcomes.append(OrderOutcome(relation, verdict, verdicts.get(relation), sides))
        if outcomes[-1].discrepancy:
            logger.warning("%s: closed form says %s, oracle says %s for %s vs %s", relation, verdicts.get(relation), verdict.holds, x.canonical(), y.canonical())

    return ComparisonReport(
        x=x,
        y=y,
        orders=tuple(orders),
        outcomes=tuple(outcomes),
        grid=grid.describe(),
        tolerance=tol,
        closed_form=closed_form,
        quantile_grid=disp_grid.describe() if disp_grid is not None else None,
    )


def resolve_grid(
    X: Distribution,
    Y: Distribution,
    grid_values: Sequence[float] | None = None,
    grid_points: int | None = None,
    settings: Settings | None = None,
) -> CheckGrid:
    if grid_values is not None:
        return CheckGrid(np.asarray(grid_values, dtype=float), kind=X.kind)
    return default_grid(X, Y, points=grid_points, settings=settings)


def threshold_table(spec: DistSpec, monte_carlo: int | None = None, seed: int | None = None) -> dict[str, object]:
    """Thresholds for a convolution or Poisson-binomial spec."""
    if spec.kind not in THRESHOLD_KINDS:
        raise SpecParseError(f"threshold needs one of {', '.join(THRESHOLD_KINDS)}, got {spec.kind}")
    document: dict[str, object] = {"tool": "stochorder", "version": __version__, "input": spec.canonical()}
    if spec.kind == "gconv":
        conv = spec.gamma_convolution()
        document["compared_with"] = f"gamma({format_param(conv.alpha_plus)},beta)"
        document["thresholds"] = gamma_convolution_thresholds(conv).rows()
        document["dirichlet_negative_moments"] = {
            order.value: dirichlet_negative_moment(conv, order) for order in DirichletOrder
        }
        if monte_carlo:
            estimates = {}
            for order in DirichletOrder:
                estimate = dirichlet_negative_moment_mc(conv, order, draws=monte_carlo, seed=seed)
                estimates[order.value] = {
                    "mean": estimate.mean,
                    "standard_error": estimate.standard_error,
                    "draws": estimate.draws,
                    "seed": estimate.seed,
                    "within_4_se": estimate.agrees_with(dirichlet_negative_moment(conv, order)),
                }
            document["monte_carlo"] = estimates
    elif spec.kind == "nbconv":
        conv = spec.negbin_convolution()
        document["compared_with"] = f"negbin({format_param(conv.k_plus)},p)"
        document["thresholds"] = negbin_convolution_thresholds(conv).rows()
    else:
        document["compared_with"] = f"binomial({len(spec.params)},p)"
        document["thresholds"] = poisson_binomial_thresholds(spec.poisson_binomial()).rows()
    return document


def curve_columns(X: Distribution, Y: Distribution) -> list[str]:
    kind = "pmf" if isinstance(X, DiscreteDistribution) else "pdf"
    return [
        "x",
        f"{kind}_X",
        f"{kind}_Y",
        "cdf_X",
        "cdf_Y",
        "survival_X",
        "survival_Y",
        "hazard_X",
        "hazard_Y",
        "log_ratio",
    ]


def curve_rows(X: Distribution, Y: Distribution, grid: CheckGrid) -> list[list[float]]:
    """Definition-level quantities of both distributions on ``grid``, one row per point."""
    xs = grid.points
    columns: list[np.ndarray] = [np.asarray(xs, dtype=float)]
    densities = [np.asarray(density(dist, xs), dtype=float) for dist in (X, Y)]
    columns += densities
    columns += [np.asarray(X.cdf(xs), dtype=float), np.asarray(Y.cdf(xs), dtype=float)]
    survivals = [np.asarray(X.survival(xs), dtype=float), np.asarray(Y.survival(xs), dtype=float)]
    columns += survivals
    for dist, values, survival in zip((X, Y), densities, survivals):
        denominator = np.asarray(dist.at_least(xs), dtype=float) if isinstance(dist, DiscreteDistribution) else survival
        columns.append(_safe_ratio(values, denominator))
    with np.errstate(divide="ignore", invalid="ignore"):
        columns.append(np.log(densities[0]) - np.log(densities[1]))
    return [list(map(float, row)) for row in zip(*columns)]


def clean_number(value: float, digits: int | None = None) -> float | str:
    """Round to the report precision; non-finite values become strings."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    digits = get_settings().significant_digits if digits is None else digits
    return float(f"{value:.{digits}g}")


def to_jsonable(payload: Any, digits: int | None = None) -> Any:
    if payload is None or isinstance(payload, (bool, str)):
        return payload
    if isinstance(payload, (int, np.integer)):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        return clean_number(float(payload), digits)
    if isinstance(payload, dict):
        return {str(key): to_jsonable(value, digits) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [to_jsonable(item, digits) for item in payload]
    raise TypeError(f"cannot serialise {type(payload).__name__}")


def format_cell(value: object, digits: int | None = None) -> str:
    if isinstance(value, float):
        cleaned = clean_number(value, digits)
        return cleaned if isinstance(cleaned, str) else f"{cleaned:.{digits or get_settings().significant_digits}g}"
    if value is None:
        return ""
    return str(value).lower() if isinstance(value, bool) else str(value)


def _safe_ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    out = np.full(numerator.shape, np.nan)
    ok = denominator > 1e-300
    out[ok] = numerator[ok] / denominator[ok]
    return out


def _same_shape(a: float, b: float) -> bool:
    return abs(a - b) <= _SHAPE_RTOL * max(abs(a), abs(b))

