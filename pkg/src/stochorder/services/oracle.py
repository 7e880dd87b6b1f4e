"""Definition-level checkers for the stochastic orders.

Every checker evaluates the defining inequality of its order on a grid and reports the
smallest grid point where it fails by more than ``tol``. Comparisons that involve a
truncated pmf table or an evaluator error bound only fail when the failure is certain,
i.e. it survives the worst case inside the bounds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit, logit

from ..config import Settings, get_settings
from ..errors import GridError, SupportError, require
from .distributions import ContinuousDistribution, DiscreteDistribution, Distribution

logger = logging.getLogger(__name__)

RELATIONS: tuple[str, ...] = ("st", "hr", "rh", "lr", "lc", "disp", "star")
DEFAULT_RELATIONS: tuple[str, ...] = ("st", "hr", "rh", "lr")
CONTINUOUS_ONLY: frozenset[str] = frozenset({"disp", "star"})

_GRID_KINDS = ("discrete", "continuous", "quantile")
_DENOMINATOR_FLOOR = 1e-300


@dataclass(frozen=True)
class CheckGrid:
    """Strictly increasing evaluation points.

    ``discrete`` grids hold integers ``0..x_hi``, ``continuous`` grids hold points in
    (0, inf) and ``quantile`` grids hold probabilities in (0, 1) for the dispersive check.
    """

    points: NDArray[np.float64]
    kind: str = "continuous"

    def __post_init__(self) -> None:
        require(self.kind in _GRID_KINDS, f"unknown grid kind {self.kind!r}", GridError)
        pts = np.array(self.points, dtype=float, ndmin=1, copy=True)
        require(pts.ndim == 1 and pts.size >= 1, "grid must be a nonempty 1-D sequence", GridError)
        require(bool(np.all(np.isfinite(pts))), "grid points must be finite", GridError)
        require(bool(np.all(np.diff(pts) > 0)), "grid points must be strictly increasing", GridError)
        if self.kind == "discrete":
            require(bool(np.all(np.floor(pts) == pts)) and pts[0] >= 0, "discrete grids hold integers >= 0", GridError)
            pts = pts.astype(np.int64)
        elif self.kind == "continuous":
            require(pts[0] > 0, "continuous grids live in (0, inf)", GridError)
        else:
            require(pts[0] > 0 and pts[-1] < 1, "quantile grids hold probabilities in (0, 1)", GridError)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.size)

    def describe(self) -> dict[str, object]:
        return {
            "kind": self.kind,
            "points": self.size,
            "lo": float(self.points[0]),
            "hi": float(self.points[-1]),
        }


@dataclass(frozen=True)
class OrderVerdict:
    relation: str
    holds: bool
    tolerance: float
    points_checked: int
    witness: float | None = None
    witness_points: tuple[float, ...] = ()
    violation: float = 0.0
    points_skipped: int = 0
    marginal: bool = False

    def __post_init__(self) -> None:
        require(self.relation in RELATIONS, f"unknown relation {self.relation!r}")
        require(self.points_checked >= 1, "a verdict needs at least one checked point")
        require(self.tolerance > 0, "tolerance must be positive")
        if not self.holds:
            require(self.witness is not None and len(self.witness_points) >= 1, "failing verdicts carry a witness")

    def to_dict(self) -> dict[str, object]:
        return {
            "relation": self.relation,
            "holds": self.holds,
            "marginal": self.marginal,
            "witness": self.witness,
            "witness_points": list(self.witness_points),
            "violation": self.violation,
            "tolerance": self.tolerance,
            "points_checked": self.points_checked,
            "points_skipped": self.points_skipped,
        }


@dataclass(frozen=True)
class _Units:
    """Checked units (points, pairs or triples) with their signed violations."""

    points: NDArray[np.float64]
    violation: NDArray[np.float64]
    degenerate: int = 0
    unresolved: int = 0
    anchor: int = field(default=0)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def geometric_grid(lo: float, hi: float, points: int) -> CheckGrid:
    require(0 < lo < hi < np.inf, f"need 0 < lo < hi < inf, got lo={lo!r}, hi={hi!r}", GridError)
    require(points >= 2, "a geometric grid needs at least 2 points", GridError)
    return CheckGrid(np.geomspace(lo, hi, int(points)), kind="continuous")


def discrete_grid(x_hi: int) -> CheckGrid:
    require(x_hi >= 0, "x_hi must be >= 0", GridError)
    return CheckGrid(np.arange(int(x_hi) + 1), kind="discrete")


def quantile_grid(points: int | None = None, quantile: float | None = None) -> CheckGrid:
    """Probabilities evenly spaced on the logit scale between ``quantile`` and ``1 - quantile``."""
    settings = get_settings()
    points = settings.grid_points if points is None else int(points)
    quantile = settings.grid_quantile if quantile is None else quantile
    require(points >= 2, "a quantile grid needs at least 2 points", GridError)
    require(0 < quantile < 0.5, "quantile must lie in (0, 0.5)", GridError)
    z = np.linspace(logit(quantile), logit(1.0 - quantile), points)
    return CheckGrid(expit(z), kind="quantile")


def default_grid(
    X: Distribution,
    Y: Distribution,
    points: int | None = None,
    settings: Settings | None = None,
) -> CheckGrid:
    """Grid covering both distributions.

    Discrete: ``0..x_hi`` with ``x_hi`` the first point where the combined survival mass is at
    most ``oracle_tail_mass`` (clipped to the longer table). Continuous: geometric points
    between the smaller ``grid_quantile`` quantile and the larger upper quantile.
    """
    settings = settings or get_settings()
    _require_same_kind(X, Y)
    if isinstance(X, DiscreteDistribution):
        assert isinstance(Y, DiscreteDistribution)
        length = max(X.upper, Y.upper) + 1
        xs = np.arange(length)
        combined = X.survival_bounds(xs)[1] + Y.survival_bounds(xs)[1]
        hits = np.flatnonzero(combined <= settings.oracle_tail_mass)
        x_hi = int(hits[0]) if hits.size else length - 1
        return discrete_grid(x_hi)

    assert isinstance(X, ContinuousDistribution) and isinstance(Y, ContinuousDistribution)
    points = settings.grid_points if points is None else int(points)
    q = settings.grid_quantile
    lo = min(float(X.quantile(q)), float(Y.quantile(q)))
    hi = max(float(X.isf(q)), float(Y.isf(q)))
    grid = geometric_grid(lo, hi, points)
    logger.debug("continuous grid for %s vs %s: [%.6g, %.6g] with %d points", X.label, Y.label, lo, hi, points)
    return grid


# ---------------------------------------------------------------------------
# Public checkers
# ---------------------------------------------------------------------------


def check_st(X: Distribution, Y: Distribution, grid: CheckGrid | None = None, tol: float | None = None) -> OrderVerdict:
    """X <=st Y: survival of X never exceeds survival of Y."""
    return check_order("st", X, Y, grid=grid, tol=tol)


def check_hr(X: Distribution, Y: Distribution, grid: CheckGrid | None = None, tol: float | None = None) -> OrderVerdict:
    """X <=hr Y: hazard of X dominates hazard of Y (log scale)."""
    return check_order("hr", X, Y, grid=grid, tol=tol)


def check_rh(X: Distribution, Y: Distribution, grid: CheckGrid | None = None, tol: float | None = None) -> OrderVerdict:
    """X <=rh Y: reversed hazard of X never exceeds that of Y (log scale)."""
    return check_order("rh", X, Y, grid=grid, tol=tol)


def check_lr(X: Distribution, Y: Distribution, grid: CheckGrid | None = None, tol: float | None = None) -> OrderVerdict:
    """X <=lr Y: ln f_X - ln f_Y is nonincreasing, with a/0 = inf for a > 0."""
    return check_order("lr", X, Y, grid=grid, tol=tol)


def check_lc(X: Distribution, Y: Distribution, grid: CheckGrid | None = None, tol: float | None = None) -> OrderVerdict:
    """X <=lc Y: nested supports and ln(f_X / f_Y) concave on the support of X.

    Discrete pairs use second differences. Continuous pairs compare the chord through the
    outer points of each grid triple with the middle value. The chord gap equals the second
    divided difference times ``(x2 - x1) * (x3 - x2)``, so a triple fails only when the
    divided difference exceeds ``tol / ((x2 - x1) * (x3 - x2))``; the tolerance applies on
    the scale of ``l`` itself, where evaluator noise lives.
    """
    return check_order("lc", X, Y, grid=grid, tol=tol)


def check_star(X: Distribution, Y: Distribution, grid: CheckGrid | None = None, tol: float | None = None) -> OrderVerdict:
    """X <=* Y: G^{-1}(F(x)) / x is nondecreasing (log scale)."""
    return check_order("star", X, Y, grid=grid, tol=tol)


def check_disp(
    X: Distribution,
    Y: Distribution,
    quantile_grid: CheckGrid | None = None,
    tol: float | None = None,
) -> OrderVerdict:
    """X <=disp Y over consecutive quantile spacings; witnesses are probability levels."""
    return check_order("disp", X, Y, grid=quantile_grid, tol=tol)


def check_order(
    relation: str,
    X: Distribution,
    Y: Distribution,
    grid: CheckGrid | None = None,
    tol: float | None = None,
    grid_points: int | None = None,
    settings: Settings | None = None,
) -> OrderVerdict:
    settings = settings or get_settings()
    tol = settings.order_tol if tol is None else float(tol)
    require(relation in RELATIONS, f"unknown relation {relation!r}; expected one of {', '.join(RELATIONS)}")
    require(tol > 0, "tol must be positive")
    _require_same_kind(X, Y)
    if relation in CONTINUOUS_ONLY:
        require(
            isinstance(X, ContinuousDistribution),
            f"the {relation} order is only defined here for continuous distributions",
            SupportError,
        )
    if relation == "lc":
        _require_nested_supports(X, Y)

    if grid is None:
        grid = quantile_grid(grid_points) if relation == "disp" else default_grid(X, Y, points=grid_points, settings=settings)
    expected_kind = "quantile" if relation == "disp" else X.kind
    require(grid.kind == expected_kind, f"{relation} needs a {expected_kind} grid, got {grid.kind}", GridError)

    units = _build_units(relation, X, Y, grid.points)
    verdict = _finish(relation, units, tol, settings)
    logger.debug(
        "%s: %s vs %s -> holds=%s (checked %d, skipped %d)",
        relation,
        X.label,
        Y.label,
        verdict.holds,
        verdict.points_checked,
        verdict.points_skipped,
    )
    if verdict.marginal:
        logger.info("%s: %s vs %s holds only within tolerance", relation, X.label, Y.label)
    return verdict


def recheck(verdict: OrderVerdict, X: Distribution, Y: Distribution) -> float:
    """Re-evaluate the defining inequality at the verdict's witness and return the violation."""
    require(len(verdict.witness_points) >= 1, "verdict carries no witness to re-evaluate")
    units = _build_units(verdict.relation, X, Y, np.array(verdict.witness_points, dtype=float))
    require(units.violation.size >= 1, "witness points no longer form a checkable unit", GridError)
    return float(units.violation[0])


# ---------------------------------------------------------------------------
# Unit builders
# ---------------------------------------------------------------------------


def _build_units(relation: str, X: Distribution, Y: Distribution, points: ArrayLike) -> _Units:
    if relation == "disp":
        return _disp_units(X, Y, np.asarray(points, dtype=float))  # type: ignore[arg-type]
    if isinstance(X, DiscreteDistribution):
        xs = np.asarray(points, dtype=float).astype(np.int64)
        return _DISCRETE_BUILDERS[relation](X, Y, xs)  # type: ignore[arg-type]
    return _CONTINUOUS_BUILDERS[relation](X, Y, np.asarray(points, dtype=float))  # type: ignore[arg-type]


def _st_units(X: Distribution, Y: Distribution, xs: NDArray) -> _Units:
    lower_x, _ = X.survival_bounds(xs)
    _, upper_y = Y.survival_bounds(xs)
    return _Units(xs[:, None].astype(float), np.asarray(lower_x - upper_y, dtype=float))


def _hr_units_discrete(X: DiscreteDistribution, Y: DiscreteDistribution, xs: NDArray[np.int64]) -> _Units:
    resolved = X.resolved(xs) & Y.resolved(xs)
    at_least_x = np.asarray(X.at_least(xs))
    at_least_y = np.asarray(Y.at_least(xs))
    with np.errstate(divide="ignore", invalid="ignore"):
        # upper bound of ln h_X and lower bound of ln h_Y
        log_hx = np.asarray(X.log_pmf(xs)) - np.log(at_least_x)
        log_hy = np.asarray(Y.log_pmf(xs)) - np.log(at_least_y + Y.tail_mass_bound)
        violation = log_hy - log_hx
    degenerate = resolved & (((at_least_x > 0) & (at_least_x <= _DENOMINATOR_FLOOR)) | ((at_least_y > 0) & (at_least_y <= _DENOMINATOR_FLOOR)))
    usable = resolved & ~degenerate & ~np.isnan(violation)
    return _Units(
        xs[usable, None].astype(float),
        violation[usable],
        degenerate=int(degenerate.sum()),
        unresolved=int((~resolved).sum()),
    )


def _rh_units_discrete(X: DiscreteDistribution, Y: DiscreteDistribution, xs: NDArray[np.int64]) -> _Units:
    resolved = X.resolved(xs) & Y.resolved(xs)
    cdf_x = np.asarray(X.cdf(xs))
    cdf_y = np.asarray(Y.cdf(xs))
    with np.errstate(divide="ignore", invalid="ignore"):
        violation = (np.asarray(X.log_pmf(xs)) - np.log(cdf_x)) - (np.asarray(Y.log_pmf(xs)) - np.log(cdf_y))
    degenerate = resolved & ((cdf_x <= _DENOMINATOR_FLOOR) | (cdf_y <= _DENOMINATOR_FLOOR))
    usable = resolved & ~degenerate & ~np.isnan(violation)
    return _Units(
        xs[usable, None].astype(float),
        violation[usable],
        degenerate=int(degenerate.sum()),
        unresolved=int((~resolved).sum()),
    )


def _lr_units_discrete(X: DiscreteDistribution, Y: DiscreteDistribution, xs: NDArray[np.int64]) -> _Units:
    resolved = X.resolved(xs) & Y.resolved(xs)
    log_fx = np.asarray(X.log_pmf(xs))
    log_fy = np.asarray(Y.log_pmf(xs))
    on_union = resolved & (np.isfinite(log_fx) | np.isfinite(log_fy))
    kept = xs[on_union]
    ratio = log_fx[on_union] - log_fy[on_union]
    violation = _increments(ratio)
    pairs = np.column_stack([kept[:-1], kept[1:]]).astype(float)
    return _Units(pairs, violation, unresolved=int((~resolved).sum()))


def _lc_units_discrete(X: DiscreteDistribution, Y: DiscreteDistribution, xs: NDArray[np.int64]) -> _Units:
    resolved = X.resolved(xs) & Y.resolved(xs)
    log_fx = np.asarray(X.log_pmf(xs))
    inside = resolved & np.isfinite(log_fx)
    if xs.size < 3:
        return _Units(np.empty((0, 3)), np.empty(0), unresolved=int((~resolved).sum()), anchor=1)
    with np.errstate(invalid="ignore"):
        ratio = log_fx - np.asarray(Y.log_pmf(xs))
    interior = inside[:-2] & inside[1:-1] & inside[2:] & (xs[2:] - xs[:-2] == 2)
    second = ratio[2:] - 2.0 * ratio[1:-1] + ratio[:-2]
    triples = np.column_stack([xs[:-2], xs[1:-1], xs[2:]]).astype(float)
    return _Units(triples[interior], second[interior], unresolved=int((~resolved).sum()), anchor=1)


def _hr_units_continuous(X: ContinuousDistribution, Y: ContinuousDistribution, xs: NDArray[np.float64]) -> _Units:
    survival_x = np.asarray(X.survival(xs))
    survival_y = np.asarray(Y.survival(xs))
    lower_x, _ = X.survival_bounds(xs)
    _, upper_y = Y.survival_bounds(xs)
    degenerate = (survival_x <= _DENOMINATOR_FLOOR) | (survival_y <= _DENOMINATOR_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        violation = (np.asarray(Y.log_pdf(xs)) - np.log(upper_y)) - (np.asarray(X.log_pdf(xs)) - np.log(lower_x))
    usable = ~degenerate & ~np.isnan(violation)
    return _Units(xs[usable, None], violation[usable], degenerate=int(degenerate.sum()))


def _rh_units_continuous(X: ContinuousDistribution, Y: ContinuousDistribution, xs: NDArray[np.float64]) -> _Units:
    cdf_x = np.asarray(X.cdf(xs))
    cdf_y = np.asarray(Y.cdf(xs))
    upper_x = np.minimum(cdf_x + X.eval_error.bound(cdf_x), 1.0)
    lower_y = np.maximum(cdf_y - Y.eval_error.bound(cdf_y), 0.0)
    degenerate = (cdf_x <= _DENOMINATOR_FLOOR) | (cdf_y <= _DENOMINATOR_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        violation = (np.asarray(X.log_pdf(xs)) - np.log(upper_x)) - (np.asarray(Y.log_pdf(xs)) - np.log(lower_y))
    usable = ~degenerate & ~np.isnan(violation)
    return _Units(xs[usable, None], violation[usable], degenerate=int(degenerate.sum()))


def _lr_units_continuous(X: ContinuousDistribution, Y: ContinuousDistribution, xs: NDArray[np.float64]) -> _Units:
    ratio = np.asarray(X.log_pdf(xs)) - np.asarray(Y.log_pdf(xs))
    pairs = np.column_stack([xs[:-1], xs[1:]])
    return _Units(pairs, _increments(ratio))


def _lc_units_continuous(X: ContinuousDistribution, Y: ContinuousDistribution, xs: NDArray[np.float64]) -> _Units:
    if xs.size < 3:
        return _Units(np.empty((0, 3)), np.empty(0), anchor=1)
    ratio = np.asarray(X.log_pdf(xs)) - np.asarray(Y.log_pdf(xs))
    x1, x2, x3 = xs[:-2], xs[1:-1], xs[2:]
    l1, l2, l3 = ratio[:-2], ratio[1:-1], ratio[2:]
    chord = (l1 * (x3 - x2) + l3 * (x2 - x1)) / (x3 - x1)
    return _Units(np.column_stack([x1, x2, x3]), chord - l2, anchor=1)


def _star_units(X: ContinuousDistribution, Y: ContinuousDistribution, xs: NDArray[np.float64]) -> _Units:
    cdf_x = np.asarray(X.cdf(xs))
    survival_x = np.asarray(X.survival(xs))
    usable = (cdf_x > 0) & (survival_x > 0)
    kept = xs[usable]
    cdf_kept = cdf_x[usable]
    lower = cdf_kept <= 0.5
    image = np.empty(kept.shape)
    if lower.any():
        image[lower] = np.asarray(Y.quantile(cdf_kept[lower]))
    if (~lower).any():
        image[~lower] = np.asarray(Y.isf(survival_x[usable][~lower]))
    log_ratio = np.log(image) - np.log(kept)
    pairs = np.column_stack([kept[:-1], kept[1:]])
    # nondecreasing: a drop between consecutive points is the violation
    violation = log_ratio[:-1] - log_ratio[1:]
    return _Units(pairs, violation, degenerate=int((~usable).sum()))


def _disp_units(X: ContinuousDistribution, Y: ContinuousDistribution, probs: NDArray[np.float64]) -> _Units:
    spacings_x = np.diff(np.asarray(X.quantile(probs), dtype=float).reshape(-1))
    spacings_y = np.diff(np.asarray(Y.quantile(probs), dtype=float).reshape(-1))
    pairs = np.column_stack([probs[:-1], probs[1:]])
    return _Units(pairs, spacings_x - spacings_y)


_DISCRETE_BUILDERS: dict[str, Callable[..., _Units]] = {
    "st": _st_units,
    "hr": _hr_units_discrete,
    "rh": _rh_units_discrete,
    "lr": _lr_units_discrete,
    "lc": _lc_units_discrete,
}

_CONTINUOUS_BUILDERS: dict[str, Callable[..., _Units]] = {
    "st": _st_units,
    "hr": _hr_units_continuous,
    "rh": _rh_units_continuous,
    "lr": _lr_units_continuous,
    "lc": _lc_units_continuous,
    "star": _star_units,
}


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _increments(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Consecutive increments where equal infinities count as no change."""
    if values.size < 2:
        return np.empty(0)
    before, after = values[:-1], values[1:]
    with np.errstate(invalid="ignore"):
        steps = after - before
    return np.where(np.isinf(before) & (before == after), 0.0, steps)


def _finish(relation: str, units: _Units, tol: float, settings: Settings) -> OrderVerdict:
    checked = int(units.violation.size)
    require(checked >= 1, f"{relation}: no grid point could be evaluated", GridError)
    total = checked + units.degenerate
    require(
        units.degenerate <= settings.skip_fraction * total,
        f"{relation}: {units.degenerate} of {total} grid points have vanishing denominators",
        GridError,
    )
    failing = np.flatnonzero(units.violation > tol)
    skipped = units.degenerate + units.unresolved
    if failing.size == 0:
        return OrderVerdict(
            relation=relation,
            holds=True,
            tolerance=tol,
            points_checked=checked,
            violation=float(np.max(units.violation)),
            points_skipped=skipped,
            marginal=bool(np.any(units.violation > 0)),
        )
    first = int(failing[0])
    witness_points = tuple(float(v) for v in units.points[first])
    return OrderVerdict(
        relation=relation,
        holds=False,
        tolerance=tol,
        points_checked=checked,
        witness=witness_points[units.anchor],
        witness_points=witness_points,
        violation=float(units.violation[first]),
        points_skipped=skipped,
    )


def _require_same_kind(X: Distribution, Y: Distribution) -> None:
    require(
        X.kind == Y.kind,
        f"cannot compare a {X.kind} distribution with a {Y.kind} one",
        SupportError,
    )


def _require_nested_supports(X: Distribution, Y: Distribution) -> None:
    if not isinstance(X, DiscreteDistribution):
        return
    assert isinstance(Y, DiscreteDistribution)
    if Y.finite_support:
        require(
            X.finite_support and X.upper <= Y.upper,
            f"support of {X.label} is not contained in the support of {Y.label}",
            SupportError,
        )
