"""Distribution kernels and the distribution objects the oracle compares.

Parameterisations: gamma uses a scale ``beta`` (density proportional to
``x**(alpha-1) * exp(-x / beta)``); the negative binomial counts failures before the
``k``-th success with success probability ``p``.

Discrete distributions live on ``{0, 1, ...}``. Infinite supports are truncated once a
rigorous bound on the remaining mass drops below the requested tail tolerance; the bound is
kept on the object as ``tail_mass_bound``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import get_settings
from ..errors import ConvergenceError, QuantileBracketError, SupportError, TailToleranceError, require
from .specfn import EvalError, incomplete_gamma_pair, log_gamma, log_sum_exp

logger = logging.getLogger(__name__)

FAMILIES = ("poisson", "binomial", "negbin", "gamma")

_DENOMINATOR_FLOOR = 1e-300
_MAX_BRACKET_STEPS = 2100
_MAX_BISECTIONS = 400
_QUANTILE_RTOL = 1e-12
_SERIES_CELLS = 1 << 20
_SCALED_FLOOR = 1e-280
_EPS = float(np.finfo(float).eps)


def _label_number(value: float) -> str:
    return f"{value:.12g}"


# ---------------------------------------------------------------------------
# Distribution objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteDistribution:
    """pmf table on ``{0, ..., upper}`` plus a bound on the mass beyond the table.

    ``log_pmf_table`` is authoritative when given: entries whose pmf underflows to 0 keep
    a finite log value, so large-parameter laws still have support starting at 0.
    """

    pmf_table: NDArray[np.float64]
    tail_mass_bound: float = 0.0
    label: str = ""
    support_min: int = 0
    log_pmf_table: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)

    kind: ClassVar[str] = "discrete"

    _cdf: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _at_least: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        table = np.array(self.pmf_table, dtype=float, ndmin=1, copy=True)
        require(table.ndim == 1 and table.size >= 1, "pmf table must be a nonempty 1-D sequence")
        require(self.support_min == 0, "discrete supports start at 0")
        require(bool(np.all(np.isfinite(table))) and bool(np.all(table >= 0)), "pmf entries must be finite and >= 0")
        tail = float(self.tail_mass_bound)
        require(math.isfinite(tail) and tail >= 0, "tail_mass_bound must be finite and >= 0")
        if self.log_pmf_table is None:
            with np.errstate(divide="ignore"):
                logs = np.log(table)
        else:
            logs = np.array(self.log_pmf_table, dtype=float, ndmin=1, copy=True)
            require(logs.shape == table.shape, "log pmf table must match the pmf table")
            require(not bool(np.any(np.isnan(logs))) and not bool(np.any(logs == np.inf)), "log pmf entries must be finite or -inf")

        positive = np.flatnonzero(np.isfinite(logs))
        require(positive.size > 0 and positive[0] == 0, "support must start at 0", SupportError)
        require(
            positive[-1] == positive.size - 1,
            "support must be a contiguous integer interval",
            SupportError,
        )
        if tail == 0.0:
            table = table[: positive[-1] + 1]
            logs = logs[: positive[-1] + 1]

        total = math.fsum(table)
        require(
            total <= 1.0 + 1e-12 and total + tail >= 1.0 - 1e-12,
            f"pmf table sums to {total!r} with tail bound {tail!r}; expected a probability table",
        )
        cdf = np.minimum(np.cumsum(table), 1.0)
        at_least = np.cumsum(table[::-1])[::-1]
        for array in (table, logs, cdf, at_least):
            array.flags.writeable = False
        object.__setattr__(self, "pmf_table", table)
        object.__setattr__(self, "log_pmf_table", logs)
        object.__setattr__(self, "tail_mass_bound", tail)
        object.__setattr__(self, "_cdf", cdf)
        object.__setattr__(self, "_at_least", at_least)

    @classmethod
    def from_log_table(cls, log_table: ArrayLike, tail_mass_bound: float = 0.0, label: str = "") -> "DiscreteDistribution":
        logs = np.asarray(log_table, dtype=float)
        return cls(np.exp(logs), tail_mass_bound=tail_mass_bound, label=label, log_pmf_table=logs)

    @property
    def upper(self) -> int:
        """Largest point held in the table."""
        return int(self.pmf_table.size - 1)

    @property
    def finite_support(self) -> bool:
        return self.tail_mass_bound == 0.0

    def resolved(self, x: ArrayLike) -> NDArray[np.bool_]:
        """Points whose pmf is known exactly (inside the table or beyond a finite support)."""
        xs = _as_points(x)
        if self.finite_support:
            return np.ones(xs.shape, dtype=bool)
        return xs <= self.upper

    def pmf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        xs = _as_points(x)
        return _unwrap(self._lookup(self.pmf_table, xs, below=0.0, above=0.0), x)

    def log_pmf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        xs = _as_points(x)
        return _unwrap(self._lookup(self.log_pmf_table, xs, below=-np.inf, above=-np.inf), x)

    def cdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        """P(X <= x)."""
        xs = _as_points(x)
        return _unwrap(self._lookup(self._cdf, xs, below=0.0, above=float(self._cdf[-1])), x)

    def at_least(self, x: ArrayLike) -> float | NDArray[np.float64]:
        """P(X >= x) from the table (the truncated tail is not added)."""
        xs = _as_points(x)
        return _unwrap(self._lookup(self._at_least, xs, below=float(self._at_least[0]), above=0.0), x)

    def survival(self, x: ArrayLike) -> float | NDArray[np.float64]:
        """P(X > x) from the table."""
        return _unwrap(np.asarray(self.at_least(_as_points(x) + 1), dtype=float), x)

    def survival_bounds(self, x: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Rigorous (lower, upper) bounds on P(X > x)."""
        lower = np.asarray(self.survival(x), dtype=float)
        return lower, np.minimum(lower + self.tail_mass_bound, 1.0)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf_table.size), self.pmf_table))

    @staticmethod
    def _lookup(values: NDArray[np.float64], xs: NDArray[np.int64], below: float, above: float) -> NDArray[np.float64]:
        out = np.full(xs.shape, above, dtype=float)
        out[xs < 0] = below
        inside = (xs >= 0) & (xs < values.size)
        out[inside] = values[xs[inside]]
        return out


@dataclass(frozen=True)
class ContinuousDistribution:
    """Density and distribution function evaluators on (0, inf)."""

    log_pdf_fn: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    cdf_fn: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    sf_fn: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    eval_error: EvalError
    label: str = ""
    scale_hint: float = 1.0
    support: tuple[float, float] = (0.0, math.inf)

    kind: ClassVar[str] = "continuous"

    def log_pdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        return _unwrap(self._on_support(x, self.log_pdf_fn, outside=-np.inf, at_infinity=-np.inf), x)

    def pdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        return _unwrap(np.exp(np.asarray(self.log_pdf(x), dtype=float)), x)

    def cdf(self, x: ArrayLike) -> float | NDArray[np.float64]:
        return _unwrap(self._on_support(x, self.cdf_fn, outside=0.0, at_infinity=1.0), x)

    def survival(self, x: ArrayLike) -> float | NDArray[np.float64]:
        return _unwrap(self._on_support(x, self.sf_fn, outside=1.0, at_infinity=0.0), x)

    def survival_bounds(self, x: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        value = np.asarray(self.survival(x), dtype=float)
        slack = self.eval_error.bound(value)
        return np.maximum(value - slack, 0.0), np.minimum(value + slack, 1.0)

    def quantile(self, p: ArrayLike) -> float | NDArray[np.float64]:
        """Inverse cdf by geometric bisection; upper-half probabilities invert the survival function."""
        probs = np.asarray(p, dtype=float)
        require(bool(np.all((probs > 0) & (probs < 1))), "quantile probabilities must lie in (0, 1)")
        flat = probs.ravel()
        out = np.empty(flat.shape)
        lower_half = flat <= 0.5
        if lower_half.any():
            targets = flat[lower_half]
            out[lower_half] = self._invert(lambda xs: self.cdf_fn(xs) < targets, targets.size)
        if (~lower_half).any():
            out[~lower_half] = self.isf(1.0 - flat[~lower_half])
        return _unwrap(out.reshape(probs.shape), p)

    def isf(self, q: ArrayLike) -> float | NDArray[np.float64]:
        """Inverse survival function: the x with P(X > x) = q."""
        tails = np.asarray(q, dtype=float)
        require(bool(np.all((tails > 0) & (tails < 1))), "tail probabilities must lie in (0, 1)")
        flat = tails.ravel()
        out = self._invert(lambda xs: self.sf_fn(xs) > flat, flat.size)
        return _unwrap(out.reshape(tails.shape), q)

    def _invert(self, below: Callable[[NDArray[np.float64]], NDArray[np.bool_]], size: int) -> NDArray[np.float64]:
        hi = np.full(size, float(self.scale_hint))
        for _ in range(_MAX_BRACKET_STEPS):
            grow = below(hi)
            if not grow.any():
                break
            hi[grow] *= 2.0
        else:
            raise QuantileBracketError(f"{self.label or 'distribution'}: no upper quantile bracket")

        lo = np.full(size, float(self.scale_hint))
        for _ in range(_MAX_BRACKET_STEPS):
            shrink = ~below(lo)
            if not shrink.any():
                break
            lo[shrink] *= 0.5
            if bool(np.any(lo == 0.0)):
                raise QuantileBracketError(f"{self.label or 'distribution'}: quantile underflows to 0")
        else:
            raise QuantileBracketError(f"{self.label or 'distribution'}: no lower quantile bracket")

        for _ in range(_MAX_BISECTIONS):
            if bool(np.all(hi - lo <= _QUANTILE_RTOL * hi)):
                break
            mid = lo * np.sqrt(hi / lo)
            # geometric midpoint stalls once the bracket is a few ulps wide
            mid = np.where((mid <= lo) | (mid >= hi), 0.5 * (lo + hi), mid)
            go_up = below(mid)
            lo = np.where(go_up, mid, lo)
            hi = np.where(go_up, hi, mid)
        return 0.5 * (lo + hi)

    @staticmethod
    def _on_support(
        x: ArrayLike,
        fn: Callable[[NDArray[np.float64]], NDArray[np.float64]],
        outside: float,
        at_infinity: float,
    ) -> NDArray[np.float64]:
        xs = np.asarray(x, dtype=float)
        require(not bool(np.any(np.isnan(xs))), "evaluation points must not be NaN")
        flat = xs.ravel()
        out = np.full(flat.shape, outside, dtype=float)
        out[np.isposinf(flat)] = at_infinity
        inside = (flat > 0) & np.isfinite(flat)
        if inside.any():
            out[inside] = fn(flat[inside])
        return out.reshape(xs.shape)


Distribution = Union[DiscreteDistribution, ContinuousDistribution]


# ---------------------------------------------------------------------------
# Parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoissonBinomialSpec:
    """Success probabilities of independent Bernoulli summands."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        require(len(probs) >= 1, "a Poisson-binomial needs at least one Bernoulli summand")
        for p in probs:
            _check_probability("p_i", p)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class FiniteMixingMeasure:
    """Atoms ``(t, w)`` of a finitely supported mixing distribution."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        require(len(atoms) >= 1, "a mixing measure needs at least one atom")
        for t, w in atoms:
            require(math.isfinite(t), f"atom parameter {t!r} is not finite")
            require(math.isfinite(w) and w > 0, f"atom weight {w!r} must be positive")
        total = math.fsum(w for _, w in atoms)
        require(abs(total - 1.0) <= 1e-12, f"atom weights sum to {total!r}, expected 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point(cls, t: float) -> "FiniteMixingMeasure":
        return cls(((t, 1.0),))

    @property
    def params(self) -> NDArray[np.float64]:
        return np.array([t for t, _ in self.atoms])

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.array([w for _, w in self.atoms])

    def integrate(self, fn: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> float:
        """Exact integral of ``fn`` against the measure."""
        return math.fsum(self.weights * np.asarray(fn(self.params), dtype=float))


@dataclass(frozen=True)
class GammaConvolutionSpec:
    """S = sum beta_i S_i with S_i ~ Gam(alpha_i, 1) independent."""

    shapes: tuple[float, ...]
    scales: tuple[float, ...]

    def __post_init__(self) -> None:
        shapes = tuple(float(a) for a in self.shapes)
        scales = tuple(float(b) for b in self.scales)
        require(len(shapes) >= 1 and len(shapes) == len(scales), "shapes and scales must be nonempty and of equal length")
        for value in shapes + scales:
            _check_positive("gamma convolution parameter", value)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "scales", scales)

    @property
    def n(self) -> int:
        return len(self.shapes)

    @property
    def alpha_plus(self) -> float:
        return math.fsum(self.shapes)


@dataclass(frozen=True)
class NegBinConvolutionSpec:
    """N = sum N_i with N_i ~ NB(k_i, p_i) independent."""

    sizes: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        sizes = tuple(float(k) for k in self.sizes)
        probs = tuple(float(p) for p in self.probs)
        require(len(sizes) >= 1 and len(sizes) == len(probs), "sizes and probs must be nonempty and of equal length")
        for k in sizes:
            _check_positive("k_i", k)
        for p in probs:
            _check_probability("p_i", p)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def k_plus(self) -> float:
        return math.fsum(self.sizes)


@dataclass(frozen=True)
class MixtureFamily:
    """A one-parameter kernel family; ``shape`` is n, k or alpha (unused for Poisson)."""

    name: str
    shape: float | None = None

    def __post_init__(self) -> None:
        require(self.name in FAMILIES, f"unknown family {self.name!r}; expected one of {', '.join(FAMILIES)}")
        if self.name == "poisson":
            require(self.shape is None, "the Poisson family takes no shape parameter")
        elif self.name == "binomial":
            require(self.shape is not None and float(self.shape).is_integer() and self.shape >= 1, "binomial needs an integer n >= 1")
            object.__setattr__(self, "shape", int(self.shape))
        else:
            require(self.shape is not None, f"{self.name} needs a shape parameter")
            _check_positive("shape", float(self.shape))
            object.__setattr__(self, "shape", float(self.shape))

    @property
    def discrete(self) -> bool:
        return self.name != "gamma"

    def parameter_ok(self, t: float) -> bool:
        if self.name in ("binomial", "negbin"):
            return 0.0 < t < 1.0
        return 0.0 < t < math.inf

    def check_parameter(self, t: float) -> None:
        require(self.parameter_ok(t), f"parameter {t!r} is outside the legal range of the {self.name} family")

    def component(self, t: float, tail_tol: float | None = None) -> Distribution:
        self.check_parameter(t)
        if self.name == "poisson":
            return poisson_distribution(t, tail_tol=tail_tol)
        if self.name == "binomial":
            return binomial_distribution(int(self.shape), t)
        if self.name == "negbin":
            return negbin_distribution(float(self.shape), t, tail_tol=tail_tol)
        return gamma_distribution(float(self.shape), t)

    def describe(self) -> str:
        if self.shape is None:
            return self.name
        return f"{self.name}({_label_number(self.shape)})"


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def poisson_pmf(lam: float, x: ArrayLike) -> float | NDArray[np.float64]:
    _check_positive("lambda", lam)
    xs = _check_counts(x)
    return _unwrap(np.exp(_log_poisson(lam, xs)), x)


def binomial_pmf(n: int, p: float, x: ArrayLike) -> float | NDArray[np.float64]:
    _check_trials(n)
    _check_probability("p", p)
    xs = _check_counts(x)
    require(bool(np.all(xs <= n)), f"binomial support is {{0, ..., {n}}}")
    return _unwrap(np.exp(_log_binomial(n, p, xs)), x)


def negbin_pmf(k: float, p: float, x: ArrayLike) -> float | NDArray[np.float64]:
    _check_positive("k", k)
    _check_probability("p", p)
    xs = _check_counts(x)
    return _unwrap(np.exp(_log_negbin(k, p, xs)), x)


def gamma_pdf(alpha: float, beta: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Gamma density; points x <= 0 get density 0."""
    _check_positive("alpha", alpha)
    _check_positive("beta", beta)
    xs = np.asarray(x, dtype=float)
    out = np.zeros(xs.shape)
    inside = xs > 0
    out[inside] = np.exp(_log_gamma_density(alpha, beta, xs[inside]))
    return _unwrap(out, x)


def gamma_cdf(alpha: float, beta: float, x: ArrayLike) -> float | NDArray[np.float64]:
    _check_positive("alpha", alpha)
    _check_positive("beta", beta)
    xs = np.maximum(np.asarray(x, dtype=float), 0.0)
    lower, _ = incomplete_gamma_pair(alpha, xs / beta)
    return _unwrap(lower, x)


def gamma_sf(alpha: float, beta: float, x: ArrayLike) -> float | NDArray[np.float64]:
    _check_positive("alpha", alpha)
    _check_positive("beta", beta)
    xs = np.maximum(np.asarray(x, dtype=float), 0.0)
    _, upper = incomplete_gamma_pair(alpha, xs / beta)
    return _unwrap(upper, x)


def _log_poisson(lam: float | NDArray[np.float64], xs: NDArray[np.int64]) -> NDArray[np.float64]:
    return xs * np.log(lam) - lam - np.asarray(log_gamma(xs + 1.0))


def _log_binomial(n: int, p: float | NDArray[np.float64], xs: NDArray[np.int64]) -> NDArray[np.float64]:
    coeff = log_gamma(n + 1.0) - np.asarray(log_gamma(xs + 1.0)) - np.asarray(log_gamma(n - xs + 1.0))
    return coeff + xs * np.log(p) + (n - xs) * np.log1p(-p)


def _log_negbin(k: float, p: float | NDArray[np.float64], xs: NDArray[np.int64]) -> NDArray[np.float64]:
    coeff = np.asarray(log_gamma(k + xs)) - log_gamma(k) - np.asarray(log_gamma(xs + 1.0))
    return coeff + k * np.log(p) + xs * np.log1p(-p)


def _log_gamma_density(alpha: float, beta: float | NDArray[np.float64], xs: NDArray[np.float64]) -> NDArray[np.float64]:
    return (alpha - 1.0) * np.log(xs) - xs / beta - log_gamma(alpha) - alpha * np.log(beta)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def poisson_distribution(lam: float, tail_tol: float | None = None) -> DiscreteDistribution:
    _check_positive("lambda", lam)
    log_table, bound = _truncated_table(
        lambda xs: _log_poisson(lam, xs),
        lambda xs: lam / (xs + 1.0),
        tail_tol,
        start=int(lam + 10.0 * math.sqrt(lam) + 16),
    )
    return DiscreteDistribution.from_log_table(log_table, tail_mass_bound=bound, label=f"poisson({_label_number(lam)})")


def binomial_distribution(n: int, p: float) -> DiscreteDistribution:
    _check_trials(n)
    _check_probability("p", p)
    log_table = _log_binomial(n, p, np.arange(n + 1))
    return DiscreteDistribution.from_log_table(log_table, label=f"binomial({n},{_label_number(p)})")


def negbin_distribution(
    k: float,
    p: float,
    tail_tol: float | None = None,
    table_size_cap: int | None = None,
) -> DiscreteDistribution:
    _check_positive("k", k)
    _check_probability("p", p)
    q = 1.0 - p
    if k >= 1.0:
        ratio_sup = lambda xs: (k + xs) * q / (xs + 1.0)  # noqa: E731 - decreasing in x
    else:
        ratio_sup = lambda xs: np.full(xs.shape, q)  # noqa: E731 - increases towards q
    mean = k * q / p
    log_table, bound = _truncated_table(
        lambda xs: _log_negbin(k, p, xs),
        ratio_sup,
        tail_tol,
        start=int(mean + 10.0 * math.sqrt(mean / p) + 16),
        cap=table_size_cap,
    )
    return DiscreteDistribution.from_log_table(log_table, tail_mass_bound=bound, label=f"negbin({_label_number(k)},{_label_number(p)})")


def gamma_distribution(alpha: float, beta: float) -> ContinuousDistribution:
    _check_positive("alpha", alpha)
    _check_positive("beta", beta)

    def cdf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return incomplete_gamma_pair(alpha, xs / beta)[0]

    def sf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return incomplete_gamma_pair(alpha, xs / beta)[1]

    return ContinuousDistribution(
        log_pdf_fn=lambda xs: _log_gamma_density(alpha, beta, xs),
        cdf_fn=cdf,
        sf_fn=sf,
        eval_error=EvalError(absolute_bound=1e-12, relative_bound=1e-12),
        label=f"gamma({_label_number(alpha)},{_label_number(beta)})",
        scale_hint=alpha * beta,
    )


def poisson_binomial_pmf(spec: PoissonBinomialSpec) -> DiscreteDistribution:
    """Law of a sum of independent Bernoulli(p_i), folded in one summand at a time."""
    log_table = np.zeros(1)
    for p in spec.probs:
        log_table = _log_convolve(log_table, np.array([math.log1p(-p), math.log(p)]))
    label = "pbin(" + ",".join(_label_number(p) for p in spec.probs) + ")"
    return DiscreteDistribution.from_log_table(log_table, label=label)


def discrete_convolution_pmf(
    components: Sequence[DiscreteDistribution],
    tail_tol: float | None = None,
    table_size_cap: int | None = None,
) -> DiscreteDistribution:
    """Law of the sum of independent discrete components.

    Every component must already be truncated to at most ``tail_tol / (2 * len(components))``;
    the missing mass of the result is bounded by the sum of the component bounds.
    """
    settings = get_settings()
    tail_tol = settings.tail_tol if tail_tol is None else tail_tol
    table_size_cap = settings.table_size_cap if table_size_cap is None else table_size_cap
    require(len(components) >= 1, "convolution needs at least one component")
    require(tail_tol > 0, "tail_tol must be positive")

    allowance = tail_tol / (2 * len(components))
    for component in components:
        require(
            component.tail_mass_bound <= allowance,
            f"component {component.label or '?'} has tail bound {component.tail_mass_bound:.3g} > {allowance:.3g}",
            TailToleranceError,
        )
    length = sum(component.pmf_table.size for component in components) - (len(components) - 1)
    require(
        length <= table_size_cap,
        f"convolution table would hold {length} entries (cap {table_size_cap})",
        TailToleranceError,
    )

    log_table = components[0].log_pmf_table
    for component in components[1:]:
        log_table = _log_convolve(log_table, component.log_pmf_table)
    bound = math.fsum(component.tail_mass_bound for component in components)
    label = " + ".join(component.label for component in components)
    logger.debug("convolved %d components into %d entries (tail bound %.3g)", len(components), log_table.size, bound)
    return DiscreteDistribution.from_log_table(log_table, tail_mass_bound=bound, label=label)


def negbin_convolution(spec: NegBinConvolutionSpec, tail_tol: float | None = None) -> DiscreteDistribution:
    tail_tol = get_settings().tail_tol if tail_tol is None else tail_tol
    per_component = tail_tol / (2 * spec.n)
    components = [negbin_distribution(k, p, tail_tol=per_component) for k, p in zip(spec.sizes, spec.probs)]
    dist = discrete_convolution_pmf(components, tail_tol=tail_tol)
    label = "nbconv(" + ", ".join(f"{_label_number(k)}:{_label_number(p)}" for k, p in zip(spec.sizes, spec.probs)) + ")"
    return DiscreteDistribution.from_log_table(dist.log_pmf_table, tail_mass_bound=dist.tail_mass_bound, label=label)


def gamma_convolution_pdf(
    spec: GammaConvolutionSpec,
    scale_ratio_cap: float | None = None,
    series_tol: float | None = None,
    max_terms: int | None = None,
) -> ContinuousDistribution:
    """Law of sum beta_i S_i as a gamma series about the smallest scale.

    f(x) = sum_m w_m gamma_pdf(alpha_+ + m, beta_min, x), where w is the pmf of
    K = sum K_i with K_i ~ NB(alpha_i, beta_min / beta_i) independent. The weights are
    tabulated until the tail bound on K drops below ``series_tol``; the table length is
    budgeted from the shapes and the scale ratio and may not exceed ``max_terms``.
    """
    beta_min, log_weights, residual = _convolution_weights(spec, scale_ratio_cap, series_tol, max_terms)
    shapes = spec.alpha_plus + np.arange(log_weights.size)
    weights = np.exp(log_weights)
    total = math.fsum(weights)
    with np.errstate(divide="ignore"):
        log_head = np.log(np.cumsum(weights))
        log_tail = np.log(np.cumsum(weights[::-1])[::-1])
    log_gamma_shapes = np.asarray(log_gamma(shapes), dtype=float)
    # ln Gamma(a_m + 1) normalises the steps P(a_m, y) - P(a_m + 1, y) = y^a_m e^{-y} / Gamma(a_m + 1)
    log_gamma_next = np.asarray(log_gamma(shapes + 1.0), dtype=float)
    top = shapes.size - 1

    def log_pdf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        ys = xs / beta_min
        return _log_gamma_series(log_weights, shapes - 1.0, log_gamma_shapes, ys) - math.log(beta_min)

    def cdf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        # sum_m w_m P(a_m, y) = total P(a_top, y) + sum_{j < top} step_j(y) sum_{m <= j} w_m
        ys = xs / beta_min
        value = total * incomplete_gamma_pair(shapes[top], ys)[0]
        if top:
            value = value + np.exp(_log_gamma_series(log_head[:top], shapes[:top], log_gamma_next[:top], ys))
        return np.minimum(value, 1.0)

    def sf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        # sum_m w_m Q(a_m, y) = total Q(a_0, y) + sum_{j < top} step_j(y) sum_{m > j} w_m
        ys = xs / beta_min
        value = total * incomplete_gamma_pair(shapes[0], ys)[1]
        if top:
            value = value + np.exp(_log_gamma_series(log_tail[1:], shapes[:top], log_gamma_next[:top], ys))
        return np.minimum(value + residual, 1.0)

    label = "gconv(" + ", ".join(f"{_label_number(a)}:{_label_number(b)}" for a, b in zip(spec.shapes, spec.scales)) + ")"
    return ContinuousDistribution(
        log_pdf_fn=log_pdf,
        cdf_fn=cdf,
        sf_fn=sf,
        eval_error=EvalError(absolute_bound=residual + 1e-12, relative_bound=1e-11 + shapes.size * _EPS),
        label=label,
        scale_hint=math.fsum(a * b for a, b in zip(spec.shapes, spec.scales)),
    )


def mixture_pmf_pdf(
    family: MixtureFamily,
    mu: FiniteMixingMeasure,
    tail_tol: float | None = None,
) -> Distribution:
    """Finite mixture sum_i w_i f(.; t_i) of a family kernel."""
    for t in mu.params:
        family.check_parameter(float(t))
    label = f"mix({family.describe()}; " + ", ".join(f"{_label_number(t)}:{_label_number(w)}" for t, w in mu.atoms) + ")"
    if family.discrete:
        return _discrete_mixture(family, mu, tail_tol, label)
    return _gamma_mixture(float(family.shape), mu, label)


def _discrete_mixture(
    family: MixtureFamily,
    mu: FiniteMixingMeasure,
    tail_tol: float | None,
    label: str,
) -> DiscreteDistribution:
    components = [family.component(float(t), tail_tol=tail_tol) for t in mu.params]
    length = max(component.pmf_table.size for component in components)
    terms = np.full((len(components), length), -np.inf)
    for row, (weight, component) in enumerate(zip(mu.weights, components)):
        terms[row, : component.pmf_table.size] = math.log(weight) + component.log_pmf_table
    bound = math.fsum(weight * component.tail_mass_bound for weight, component in zip(mu.weights, components))
    log_table = np.asarray(log_sum_exp(terms, axis=0))
    return DiscreteDistribution.from_log_table(log_table, tail_mass_bound=bound, label=label)


def _gamma_mixture(alpha: float, mu: FiniteMixingMeasure, label: str) -> ContinuousDistribution:
    scales = mu.params
    weights = mu.weights
    log_weights = np.log(weights)

    def log_pdf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        terms = log_weights[:, None] + _log_gamma_density(alpha, scales[:, None], xs[None, :])
        return np.asarray(log_sum_exp(terms, axis=0))

    def cdf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return weights @ incomplete_gamma_pair(alpha, xs[None, :] / scales[:, None])[0]

    def sf(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return weights @ incomplete_gamma_pair(alpha, xs[None, :] / scales[:, None])[1]

    return ContinuousDistribution(
        log_pdf_fn=log_pdf,
        cdf_fn=cdf,
        sf_fn=sf,
        eval_error=EvalError(absolute_bound=1e-12, relative_bound=1e-11),
        label=label,
        scale_hint=alpha * float(weights @ scales),
    )


def reflect(d: DiscreteDistribution) -> DiscreteDistribution:
    """Law of n - X for X on the finite support {0, ..., n}."""
    require(d.finite_support, "only finite supports can be reflected", SupportError)
    return DiscreteDistribution.from_log_table(d.log_pmf_table[::-1], label=f"{d.upper}-({d.label})")


# ---------------------------------------------------------------------------
# Hazard-type functionals
# ---------------------------------------------------------------------------


def survival(d: Distribution, x: ArrayLike) -> float | NDArray[np.float64]:
    """P(X > x) for both discrete and continuous distributions."""
    return d.survival(x)


def hazard(d: Distribution, x: ArrayLike) -> float | NDArray[np.float64]:
    """f(x) / P(X >= x) (discrete) or f(x) / P(X > x) (continuous)."""
    if isinstance(d, DiscreteDistribution):
        numerator, denominator = d.pmf(x), d.at_least(x)
    else:
        numerator, denominator = d.pdf(x), d.survival(x)
    return _ratio(numerator, denominator, "hazard", x)


def reversed_hazard(d: Distribution, x: ArrayLike) -> float | NDArray[np.float64]:
    """f(x) / F(x)."""
    numerator = d.pmf(x) if isinstance(d, DiscreteDistribution) else d.pdf(x)
    return _ratio(numerator, d.cdf(x), "reversed hazard", x)


def density(d: Distribution, x: ArrayLike) -> float | NDArray[np.float64]:
    return d.pmf(x) if isinstance(d, DiscreteDistribution) else d.pdf(x)


def _ratio(numerator: ArrayLike, denominator: ArrayLike, name: str, x: ArrayLike) -> float | NDArray[np.float64]:
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    require(bool(np.all(den > _DENOMINATOR_FLOOR)), f"{name} denominator vanishes at the requested point(s)")
    return _unwrap(num / den, x)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _truncated_table(
    log_pmf: Callable[[NDArray[np.int64]], NDArray[np.float64]],
    ratio_sup: Callable[[NDArray[np.int64]], NDArray[np.float64]],
    tail_tol: float | None,
    start: int,
    cap: int | None = None,
) -> tuple[NDArray[np.float64], float]:
    """Tabulate ln f until f(L) r / (1 - r) <= tail_tol, r bounding f(x+1)/f(x) for all x >= L."""
    settings = get_settings()
    tail_tol = settings.tail_tol if tail_tol is None else tail_tol
    require(tail_tol > 0, "tail_tol must be positive")
    cap = settings.table_size_cap if cap is None else cap
    log_tol = math.log(tail_tol)
    length = max(64, min(start, cap))
    while True:
        xs = np.arange(length)
        log_values = log_pmf(xs)
        ratios = ratio_sup(xs)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_bounds = np.where(ratios < 1.0, log_values + np.log(ratios) - np.log1p(-ratios), np.inf)
        hits = np.flatnonzero(log_bounds <= log_tol)
        if hits.size:
            cut = int(hits[0])
            bound = math.exp(float(log_bounds[cut]))
            logger.debug("truncated table at %d entries (tail bound %.3g)", cut + 1, bound)
            return log_values[: cut + 1], bound
        if length >= cap:
            raise TailToleranceError(f"tail tolerance {tail_tol:.3g} not reached within {cap} entries")
        length = min(2 * length, cap)


def _convolution_weights(
    spec: GammaConvolutionSpec,
    scale_ratio_cap: float | None,
    series_tol: float | None,
    max_terms: int | None,
) -> tuple[float, NDArray[np.float64], float]:
    """(beta_min, ln w, bound on the weight mass beyond the table)."""
    settings = get_settings()
    scale_ratio_cap = settings.scale_ratio_cap if scale_ratio_cap is None else scale_ratio_cap
    series_tol = settings.series_tol if series_tol is None else series_tol
    max_terms = settings.max_series_terms if max_terms is None else max_terms

    beta_min = min(spec.scales)
    ratio = max(spec.scales) / beta_min
    require(
        ratio <= scale_ratio_cap,
        f"scale ratio {ratio:.4g} exceeds the series convergence cap {scale_ratio_cap:.4g}",
        ConvergenceError,
    )
    # components sharing a scale pool their shapes: NB(a, p) + NB(b, p) = NB(a + b, p)
    pooled: dict[float, float] = {}
    for alpha, beta in zip(spec.shapes, spec.scales):
        if beta > beta_min:
            pooled[beta] = pooled.get(beta, 0.0) + alpha
    if not pooled:
        return beta_min, np.zeros(1), 0.0

    sizes = np.array(list(pooled.values()))
    probs = beta_min / np.array(list(pooled))
    budget = _series_budget(sizes, probs)
    require(
        budget <= max_terms,
        f"gamma convolution series needs about {budget} terms (cap {max_terms})",
        ConvergenceError,
    )
    per_component = series_tol / (2 * sizes.size)
    try:
        components = [
            negbin_distribution(float(k), float(p), tail_tol=per_component, table_size_cap=budget)
            for k, p in zip(sizes, probs)
        ]
        weights = discrete_convolution_pmf(components, tail_tol=series_tol, table_size_cap=budget)
    except TailToleranceError as exc:
        raise ConvergenceError(f"gamma convolution series did not converge: {exc}") from exc
    logger.debug("gamma convolution series: %d terms, residual %.3g", weights.pmf_table.size, weights.tail_mass_bound)
    return beta_min, weights.log_pmf_table, weights.tail_mass_bound


def _series_budget(sizes: NDArray[np.float64], probs: NDArray[np.float64]) -> int:
    """Generous length for the table of K = sum NB(k_i, p_i)."""
    odds = (1.0 - probs) / probs
    mean = float(np.sum(sizes * odds))
    spread = math.sqrt(float(np.sum(sizes * odds / probs)))
    return int(math.ceil(mean + 12.0 * spread + 40.0 / float(probs.min()))) + 64


def _log_gamma_series(
    log_coeffs: NDArray[np.float64],
    powers: NDArray[np.float64],
    log_norms: NDArray[np.float64],
    ys: NDArray[np.float64],
) -> NDArray[np.float64]:
    """ln sum_j exp(log_coeffs_j + powers_j ln y - y - log_norms_j), in row blocks."""
    log_y = np.log(ys)
    acc = np.full(ys.shape, -np.inf)
    rows = max(1, _SERIES_CELLS // max(ys.size, 1))
    for start in range(0, log_coeffs.size, rows):
        stop = start + rows
        terms = (log_coeffs[start:stop] - log_norms[start:stop])[:, None] + powers[start:stop, None] * log_y[None, :]
        acc = np.logaddexp(acc, np.asarray(log_sum_exp(terms, axis=0)))
    return acc - ys


def _log_convolve(log_a: NDArray[np.float64], log_b: NDArray[np.float64]) -> NDArray[np.float64]:
    """ln of the convolution of two pmf tables held as logs."""
    shift_a, shift_b = float(np.max(log_a)), float(np.max(log_b))
    scaled = np.convolve(np.exp(log_a - shift_a), np.exp(log_b - shift_b))
    with np.errstate(divide="ignore"):
        out = np.log(scaled) + (shift_a + shift_b)
    # entries far below the peak are summed term by term in log space
    for j in np.flatnonzero(scaled < _SCALED_FLOOR):
        lo, hi = max(0, j - log_b.size + 1), min(j, log_a.size - 1)
        out[j] = log_sum_exp(log_a[lo : hi + 1] + log_b[j - hi : j - lo + 1][::-1])
    return out


def _check_positive(name: str, value: float) -> None:
    require(isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0, f"{name} must be a finite positive number, got {value!r}")


def _check_probability(name: str, value: float) -> None:
    require(math.isfinite(value) and 0.0 < value < 1.0, f"{name} must lie strictly inside (0, 1), got {value!r}")


def _check_trials(n: int) -> None:
    require(float(n).is_integer() and n >= 1, f"n must be a positive integer, got {n!r}")


def _check_counts(x: ArrayLike) -> NDArray[np.int64]:
    xs = np.asarray(x)
    require(bool(np.all(np.isfinite(xs.astype(float)))), "counts must be finite")
    require(bool(np.all(np.floor(xs) == xs)) and bool(np.all(xs >= 0)), "counts must be nonnegative integers")
    return xs.astype(np.int64)


def _as_points(x: ArrayLike) -> NDArray[np.int64]:
    xs = np.asarray(x)
    require(bool(np.all(np.floor(xs) == xs)), "discrete distributions are evaluated at integers")
    return xs.astype(np.int64)


def _unwrap(values: NDArray[np.float64], like: ArrayLike) -> float | NDArray[np.float64]:
    if np.ndim(like) == 0:
        return float(np.asarray(values).reshape(()))
    return np.asarray(values)
