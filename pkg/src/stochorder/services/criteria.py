"""Closed-form decision rules for comparing a kernel with mixtures and convolutions.

Kernels are written as ``f(x; theta) = f0(x) exp(b(theta) x) h(theta)``:

    poisson   b = ln(lambda)         h = exp(-lambda)
    binomial  b = ln(p / (1 - p))    h = (1 - p)^n
    negbin    b = ln(1 - p)          h = p^k
    gamma     b = -1 / beta          h = beta^(-alpha)

For X ~ f(.; theta) and Y a mixture of the same family, X <=lc Y always holds, so the
four orders st, hr, rh and lr are decided by the behaviour of ln(f/g) at the left end point.
All mixing measures are finite, so every integral below is a finite sum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np
from numpy.typing import NDArray

from ..config import get_settings
from ..errors import ConvergenceError, require
from .distributions import (
    ContinuousDistribution,
    DiscreteDistribution,
    Distribution,
    FiniteMixingMeasure,
    GammaConvolutionSpec,
    MixtureFamily,
    NegBinConvolutionSpec,
    PoissonBinomialSpec,
)

logger = logging.getLogger(__name__)

AT_MOST = "at_most"
AT_LEAST = "at_least"

_LIMIT_POWERS = range(10, 41)


# ---------------------------------------------------------------------------
# Kernel registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialFamilyKernel:
    family: MixtureFamily
    b: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    h: Callable[[NDArray[np.float64]], NDArray[np.float64]]

    @property
    def name(self) -> str:
        return self.family.name

    @property
    def discrete(self) -> bool:
        return self.family.discrete

    def check_parameter(self, theta: float) -> None:
        self.family.check_parameter(theta)


def kernel_for(family: str | MixtureFamily, shape: float | None = None) -> ExponentialFamilyKernel:
    fam = family if isinstance(family, MixtureFamily) else MixtureFamily(family, shape)
    if fam.name == "poisson":
        return ExponentialFamilyKernel(fam, b=np.log, h=lambda t: np.exp(-t))
    if fam.name == "binomial":
        n = int(fam.shape)  # type: ignore[arg-type]
        return ExponentialFamilyKernel(fam, b=lambda t: np.log(t) - np.log1p(-t), h=lambda t: np.exp(n * np.log1p(-t)))
    if fam.name == "negbin":
        k = float(fam.shape)  # type: ignore[arg-type]
        return ExponentialFamilyKernel(fam, b=lambda t: np.log1p(-t), h=lambda t: np.power(t, k))
    alpha = float(fam.shape)  # type: ignore[arg-type]
    return ExponentialFamilyKernel(fam, b=lambda t: -1.0 / t, h=lambda t: np.power(t, -alpha))


# ---------------------------------------------------------------------------
# Result records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriterionResult:
    """Both sides of the st/hr and lr/rh inequalities, each read as ``lhs <= rhs``.

    ``st_orders``/``lr_orders`` name the orders each inequality decides; ``extra`` carries
    orders decided structurally (lc, disp, star).
    """

    st_lhs: float | None = None
    st_rhs: float | None = None
    lr_lhs: float | None = None
    lr_rhs: float | None = None
    st_orders: tuple[str, ...] = ("st", "hr")
    lr_orders: tuple[str, ...] = ("lr", "rh")
    extra: Mapping[str, bool] = field(default_factory=dict)
    rel_tol: float = 1e-12

    @property
    def st_hr_holds(self) -> bool | None:
        return _le(self.st_lhs, self.st_rhs, self.rel_tol)

    @property
    def lr_rh_holds(self) -> bool | None:
        return _le(self.lr_lhs, self.lr_rhs, self.rel_tol)

    def merge(self, other: "CriterionResult") -> "CriterionResult":
        return CriterionResult(
            st_lhs=self.st_lhs if self.st_lhs is not None else other.st_lhs,
            st_rhs=self.st_rhs if self.st_rhs is not None else other.st_rhs,
            lr_lhs=self.lr_lhs if self.lr_lhs is not None else other.lr_lhs,
            lr_rhs=self.lr_rhs if self.lr_rhs is not None else other.lr_rhs,
            st_orders=self.st_orders,
            lr_orders=self.lr_orders,
            extra={**other.extra, **self.extra},
            rel_tol=self.rel_tol,
        )

    def verdicts(self) -> dict[str, bool]:
        out: dict[str, bool] = dict(self.extra)
        if self.st_hr_holds is not None:
            out.update({order: self.st_hr_holds for order in self.st_orders})
        if self.lr_rh_holds is not None:
            out.update({order: self.lr_rh_holds for order in self.lr_orders})
        return out

    def sides(self, order: str) -> tuple[float, float] | None:
        if order in self.st_orders and self.st_lhs is not None:
            return self.st_lhs, self.st_rhs  # type: ignore[return-value]
        if order in self.lr_orders and self.lr_lhs is not None:
            return self.lr_lhs, self.lr_rhs  # type: ignore[return-value]
        return None


@dataclass(frozen=True)
class ThresholdPair:
    """Parameter thresholds; ``direction`` says whether the parameter must be at most or at least them."""

    st_hr: float
    lr_rh: float
    direction: str
    parameter: str = "beta"
    st_orders: tuple[str, ...] = ("st", "hr")
    lr_orders: tuple[str, ...] = ("lr", "rh")

    def __post_init__(self) -> None:
        require(self.direction in (AT_MOST, AT_LEAST), f"unknown direction {self.direction!r}")

    def admits(self, value: float, threshold: float) -> bool:
        return value <= threshold if self.direction == AT_MOST else value >= threshold

    def criteria(self, value: float, rel_tol: float | None = None) -> CriterionResult:
        """The thresholds as ``lhs <= rhs`` inequalities for a concrete parameter value."""
        rel_tol = get_settings().criteria_rel_tol if rel_tol is None else rel_tol
        if self.direction == AT_MOST:
            return CriterionResult(value, self.st_hr, value, self.lr_rh, self.st_orders, self.lr_orders, rel_tol=rel_tol)
        return CriterionResult(self.st_hr, value, self.lr_rh, value, self.st_orders, self.lr_orders, rel_tol=rel_tol)

    def rows(self) -> list[dict[str, object]]:
        symbol = "<=" if self.direction == AT_MOST else ">="
        return [
            {"orders": "/".join(self.st_orders), "threshold": self.st_hr, "condition": f"{self.parameter} {symbol} threshold"},
            {"orders": "/".join(self.lr_orders), "threshold": self.lr_rh, "condition": f"{self.parameter} {symbol} threshold"},
        ]


@dataclass(frozen=True)
class PoissonBinomialThresholds:
    """Thresholds on the binomial ``p`` for X = sum of Bernoulli(p_i) against Y = Bin(n, p).

    X <=st Y and X <=hr Y iff p >= st_up; X <=lr Y and X <=rh Y iff p >= lr_up;
    Y <=st X and Y <=rh X iff p <= st_down; Y <=lr X and Y <=hr X iff p <= lr_down.
    """

    st_up: float
    lr_up: float
    st_down: float
    lr_down: float

    @property
    def up(self) -> ThresholdPair:
        return ThresholdPair(self.st_up, self.lr_up, AT_LEAST, parameter="p")

    @property
    def down(self) -> ThresholdPair:
        return ThresholdPair(self.st_down, self.lr_down, AT_MOST, parameter="p", st_orders=("st", "rh"), lr_orders=("lr", "hr"))

    def rows(self) -> list[dict[str, object]]:
        up = [dict(row, comparison="X <= Bin(n,p)") for row in self.up.rows()]
        down = [dict(row, comparison="Bin(n,p) <= X") for row in self.down.rows()]
        return up + down


@dataclass(frozen=True)
class ContinuousBoundary:
    l_limit_at_0: float
    l_slope_limit_at_0: float
    rel_tol: float = 1e-12

    @property
    def st_hr_holds(self) -> bool:
        return self.l_limit_at_0 >= -self.rel_tol

    @property
    def lr_rh_holds(self) -> bool:
        return self.l_slope_limit_at_0 <= self.rel_tol


@dataclass(frozen=True)
class DiscreteBoundary:
    ratio0: float
    ratio1: float
    rel_tol: float = 1e-12

    @property
    def ratio1_le_ratio0(self) -> bool:
        return self.ratio1 <= self.ratio0 * (1.0 + self.rel_tol)

    @property
    def st_hr_holds(self) -> bool:
        return self.ratio0 >= 1.0 - self.rel_tol

    @property
    def lr_rh_holds(self) -> bool:
        return self.ratio1_le_ratio0


@dataclass(frozen=True)
class KernelLimits:
    """lim l(x) and the left-end slope of l = ln(f_theta / mixture) from the kernel's (b, h).

    For discrete kernels the slope is the increment l(1) - l(0).
    """

    l_at_0: float
    slope: float


class DirichletOrder(Enum):
    ALPHA_PLUS = "alpha_plus"
    ALPHA_PLUS_PLUS_ONE = "alpha_plus_plus_one"

    def exponent(self, spec: GammaConvolutionSpec) -> float:
        return spec.alpha_plus if self is DirichletOrder.ALPHA_PLUS else spec.alpha_plus + 1.0


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    standard_error: float
    draws: int
    seed: int

    def agrees_with(self, value: float, sigmas: float = 4.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.standard_error


# ---------------------------------------------------------------------------
# Exponential-family mixtures
# ---------------------------------------------------------------------------


def expfam_mixture_st_criterion(kernel: ExponentialFamilyKernel, theta: float, mu: FiniteMixingMeasure) -> CriterionResult:
    """X <=st Y (and <=hr) iff  integral h dmu <= h(theta)."""
    _check_atoms(kernel, theta, mu)
    lhs = mu.integrate(kernel.h)
    rhs = float(kernel.h(np.asarray(theta)))
    return CriterionResult(st_lhs=lhs, st_rhs=rhs, rel_tol=get_settings().criteria_rel_tol)


def expfam_mixture_lr_criterion(kernel: ExponentialFamilyKernel, theta: float, mu: FiniteMixingMeasure) -> CriterionResult:
    """X <=lr Y (and <=rh) per the continuous or discrete left-end slope condition.

    Continuous: b(theta) <= int b h dmu / int h dmu.
    Discrete:   exp(b(theta)) <= int h exp(b) dmu / int h dmu.
    """
    _check_atoms(kernel, theta, mu)
    mass = mu.integrate(kernel.h)
    if kernel.discrete:
        lhs = math.exp(float(kernel.b(np.asarray(theta))))
        rhs = mu.integrate(lambda t: kernel.h(t) * np.exp(kernel.b(t))) / mass
    else:
        lhs = float(kernel.b(np.asarray(theta)))
        rhs = mu.integrate(lambda t: kernel.b(t) * kernel.h(t)) / mass
    return CriterionResult(lr_lhs=lhs, lr_rhs=rhs, rel_tol=get_settings().criteria_rel_tol)


def expfam_mixture_criteria(kernel: ExponentialFamilyKernel, theta: float, mu: FiniteMixingMeasure) -> CriterionResult:
    st = expfam_mixture_st_criterion(kernel, theta, mu)
    return st.merge(expfam_mixture_lr_criterion(kernel, theta, mu))


def expfam_mixture_boundary_limits(kernel: ExponentialFamilyKernel, theta: float, mu: FiniteMixingMeasure) -> KernelLimits:
    _check_atoms(kernel, theta, mu)
    mass = mu.integrate(kernel.h)
    b_theta = float(kernel.b(np.asarray(theta)))
    l_at_0 = -math.log(mass / float(kernel.h(np.asarray(theta))))
    if kernel.discrete:
        slope = b_theta - math.log(mu.integrate(lambda t: kernel.h(t) * np.exp(kernel.b(t))) / mass)
    else:
        slope = b_theta - mu.integrate(lambda t: kernel.b(t) * kernel.h(t)) / mass
    return KernelLimits(l_at_0=l_at_0, slope=slope)


def poisson_mixture_criteria(lam: float, mu: FiniteMixingMeasure) -> CriterionResult:
    """Po(lambda) against a Poisson mixture: sum w e^{-t} <= e^{-lambda}; lambda <= sum w t e^{-t} / sum w e^{-t}."""
    kernel = kernel_for("poisson")
    _check_atoms(kernel, lam, mu)
    mass = mu.integrate(lambda t: np.exp(-t))
    return CriterionResult(
        st_lhs=mass,
        st_rhs=math.exp(-lam),
        lr_lhs=lam,
        lr_rhs=mu.integrate(lambda t: t * np.exp(-t)) / mass,
        rel_tol=get_settings().criteria_rel_tol,
    )


def binomial_mixture_criteria(n: int, p: float, mu: FiniteMixingMeasure, reverse: bool = False) -> CriterionResult:
    """Bin(n, p) against a mixture of Bin(n, t).

    Forward (Bin <= mixture): sum w (1-t)^n <= (1-p)^n and p <= sum w t(1-t)^{n-1} / sum w (1-t)^{n-1}.
    Reverse (mixture <= Bin), from the reflection n - X: sum w t^n <= p^n decides st and rh,
    and p >= sum w t^n / sum w t^{n-1} decides lr and hr.
    """
    kernel = kernel_for("binomial", n)
    _check_atoms(kernel, p, mu)
    rel_tol = get_settings().criteria_rel_tol
    if not reverse:
        return CriterionResult(
            st_lhs=mu.integrate(lambda t: np.power(1.0 - t, n)),
            st_rhs=(1.0 - p) ** n,
            lr_lhs=p,
            lr_rhs=mu.integrate(lambda t: t * np.power(1.0 - t, n - 1)) / mu.integrate(lambda t: np.power(1.0 - t, n - 1)),
            rel_tol=rel_tol,
        )
    return CriterionResult(
        st_lhs=mu.integrate(lambda t: np.power(t, n)),
        st_rhs=p**n,
        lr_lhs=mu.integrate(lambda t: np.power(t, n)) / mu.integrate(lambda t: np.power(t, n - 1)),
        lr_rhs=p,
        st_orders=("st", "rh"),
        lr_orders=("lr", "hr"),
        rel_tol=rel_tol,
    )


def negbin_mixture_criteria(k: float, p: float, mu: FiniteMixingMeasure) -> CriterionResult:
    """NB(k, p) against a mixture of NB(k, t): int t^k dmu <= p^k; p >= int t^{k+1} dmu / int t^k dmu."""
    kernel = kernel_for("negbin", k)
    _check_atoms(kernel, p, mu)
    moment = mu.integrate(lambda t: np.power(t, k))
    return CriterionResult(
        st_lhs=moment,
        st_rhs=p**k,
        lr_lhs=mu.integrate(lambda t: np.power(t, k + 1.0)) / moment,
        lr_rhs=p,
        rel_tol=get_settings().criteria_rel_tol,
    )


def gamma_mixture_criteria(alpha: float, beta: float, mu: FiniteMixingMeasure) -> CriterionResult:
    """Gam(alpha, beta) against a scale mixture: int t^-a dmu <= beta^-a; beta int t^{-a-1} dmu <= int t^-a dmu."""
    kernel = kernel_for("gamma", alpha)
    _check_atoms(kernel, beta, mu)
    moment = mu.integrate(lambda t: np.power(t, -alpha))
    return CriterionResult(
        st_lhs=moment,
        st_rhs=beta ** (-alpha),
        lr_lhs=beta * mu.integrate(lambda t: np.power(t, -alpha - 1.0)),
        lr_rhs=moment,
        rel_tol=get_settings().criteria_rel_tol,
    )


def family_mixture_criteria(family: MixtureFamily, theta: float, mu: FiniteMixingMeasure) -> CriterionResult:
    """Kernel against mixture for any registered family, with lc holding structurally."""
    if family.name == "poisson":
        result = poisson_mixture_criteria(theta, mu)
    elif family.name == "binomial":
        result = binomial_mixture_criteria(int(family.shape), theta, mu)  # type: ignore[arg-type]
    elif family.name == "negbin":
        result = negbin_mixture_criteria(float(family.shape), theta, mu)  # type: ignore[arg-type]
    else:
        result = gamma_mixture_criteria(float(family.shape), theta, mu)  # type: ignore[arg-type]
    return result.merge(CriterionResult(extra={"lc": True}))


# ---------------------------------------------------------------------------
# Poisson-binomial
# ---------------------------------------------------------------------------


def poisson_binomial_thresholds(spec: PoissonBinomialSpec) -> PoissonBinomialThresholds:
    probs = np.array(spec.probs)
    n = spec.n
    st_up = -math.expm1(math.fsum(np.log1p(-probs)) / n)
    lr_up = 1.0 - n / math.fsum(1.0 / (1.0 - probs))
    st_down = math.exp(math.fsum(np.log(probs)) / n)
    lr_down = n / math.fsum(1.0 / probs)
    # arithmetic-geometric-harmonic ordering, exact in real arithmetic
    return PoissonBinomialThresholds(
        st_up=st_up,
        lr_up=max(lr_up, st_up),
        st_down=st_down,
        lr_down=min(lr_down, st_down),
    )


def poisson_binomial_order_table(spec: PoissonBinomialSpec, p: float) -> dict[str, dict[str, bool]]:
    """All eight Poisson-binomial vs Bin(n, p) verdicts, keyed by comparison then order."""
    require(0.0 < p < 1.0, f"p must lie in (0, 1), got {p!r}")
    thresholds = poisson_binomial_thresholds(spec)
    up, down = thresholds.up, thresholds.down
    return {
        "X<=Y": {
            "st": up.admits(p, up.st_hr),
            "hr": up.admits(p, up.st_hr),
            "lr": up.admits(p, up.lr_rh),
            "rh": up.admits(p, up.lr_rh),
        },
        "Y<=X": {
            "st": down.admits(p, down.st_hr),
            "rh": down.admits(p, down.st_hr),
            "lr": down.admits(p, down.lr_rh),
            "hr": down.admits(p, down.lr_rh),
        },
    }


def poisson_binomial_criteria(spec: PoissonBinomialSpec, p: float, reverse: bool = False) -> CriterionResult:
    """pbin <= Bin(n, p) (forward, lc holds) or Bin(n, p) <= pbin (reverse)."""
    thresholds = poisson_binomial_thresholds(spec)
    if reverse:
        return thresholds.down.criteria(p)
    return thresholds.up.criteria(p).merge(CriterionResult(extra={"lc": True}))


# ---------------------------------------------------------------------------
# Gamma convolutions
# ---------------------------------------------------------------------------


def gamma_convolution_thresholds(spec: GammaConvolutionSpec) -> ThresholdPair:
    """Gam(alpha_+, beta) against sum beta_i S_i: beta at most the weighted geometric / harmonic mean."""
    shapes = np.array(spec.shapes)
    scales = np.array(spec.scales)
    alpha_plus = spec.alpha_plus
    st_hr = math.exp(math.fsum(shapes * np.log(scales)) / alpha_plus)
    lr_rh = alpha_plus / math.fsum(shapes / scales)
    return ThresholdPair(st_hr=st_hr, lr_rh=min(lr_rh, st_hr), direction=AT_MOST, parameter="beta")


def gamma_disp_criterion(spec: GammaConvolutionSpec, beta: float) -> bool:
    """T <=disp S iff T <=st S for T ~ Gam(alpha_+, beta)."""
    require(math.isfinite(beta) and beta > 0, f"beta must be positive, got {beta!r}")
    return gamma_convolution_thresholds(spec).st_hr >= beta


def gamma_convolution_criteria(spec: GammaConvolutionSpec, beta: float) -> CriterionResult:
    """Every closed-form verdict for Gam(alpha_+, beta) against the convolution; the star order always holds."""
    result = gamma_convolution_thresholds(spec).criteria(beta)
    return result.merge(CriterionResult(extra={"lc": True, "disp": gamma_disp_criterion(spec, beta), "star": True}))


def dirichlet_negative_moment(spec: GammaConvolutionSpec, order: DirichletOrder | str) -> float:
    """E[(sum beta_i D_i)^(-r)] for D ~ Dirichlet(alpha) at r = alpha_+ or alpha_+ + 1."""
    order = DirichletOrder(order)
    shapes = np.array(spec.shapes)
    scales = np.array(spec.scales)
    base = math.exp(-math.fsum(shapes * np.log(scales)))
    if order is DirichletOrder.ALPHA_PLUS:
        return base
    return math.fsum(shapes / scales) / spec.alpha_plus * base


def dirichlet_negative_moment_mc(
    spec: GammaConvolutionSpec,
    order: DirichletOrder | str,
    draws: int = 10_000_000,
    seed: int | None = None,
    chunk: int = 1_000_000,
) -> MonteCarloEstimate:
    """Seeded Monte Carlo estimate of :func:`dirichlet_negative_moment`."""
    order = DirichletOrder(order)
    require(draws >= 2, "need at least two draws")
    seed = get_settings().seed if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    exponent = order.exponent(spec)
    shapes = np.array(spec.shapes)
    scales = np.array(spec.scales)
    total = 0.0
    total_sq = 0.0
    remaining = int(draws)
    while remaining > 0:
        size = min(chunk, remaining)
        if spec.n == 1:
            weights = np.ones((size, 1))
        else:
            weights = rng.dirichlet(shapes, size=size)
        values = np.power(weights @ scales, -exponent)
        total += math.fsum(values)
        total_sq += math.fsum(values * values)
        remaining -= size
    mean = total / draws
    variance = max(total_sq / draws - mean * mean, 0.0) * draws / (draws - 1)
    logger.debug("Dirichlet moment of order %.6g: %.10g over %d draws", exponent, mean, draws)
    return MonteCarloEstimate(mean=mean, standard_error=math.sqrt(variance / draws), draws=int(draws), seed=seed)


# ---------------------------------------------------------------------------
# Negative-binomial convolutions
# ---------------------------------------------------------------------------


def negbin_convolution_thresholds(spec: NegBinConvolutionSpec) -> ThresholdPair:
    """NB(k_+, p) against sum NB(k_i, p_i): p at least the weighted geometric / arithmetic mean."""
    sizes = np.array(spec.sizes)
    probs = np.array(spec.probs)
    k_plus = spec.k_plus
    st_hr = math.exp(math.fsum(sizes * np.log(probs)) / k_plus)
    lr_rh = math.fsum(sizes * probs) / k_plus
    return ThresholdPair(st_hr=min(st_hr, lr_rh), lr_rh=lr_rh, direction=AT_LEAST, parameter="p")


def negbin_convolution_boundary_ratios(spec: NegBinConvolutionSpec, p: float) -> DiscreteBoundary:
    """Pr(M=0)/Pr(N=0) and Pr(M=1)/Pr(N=1) for M ~ NB(k_+, p) in closed form."""
    require(0.0 < p < 1.0, f"p must lie in (0, 1), got {p!r}")
    sizes = np.array(spec.sizes)
    probs = np.array(spec.probs)
    k_plus = spec.k_plus
    log_ratio0 = k_plus * math.log(p) - math.fsum(sizes * np.log(probs))
    ratio0 = math.exp(log_ratio0)
    ratio1 = ratio0 * k_plus * (1.0 - p) / math.fsum(sizes * (1.0 - probs))
    return DiscreteBoundary(ratio0=ratio0, ratio1=ratio1, rel_tol=get_settings().criteria_rel_tol)


def negbin_convolution_criteria(spec: NegBinConvolutionSpec, p: float) -> CriterionResult:
    result = negbin_convolution_thresholds(spec).criteria(p)
    return result.merge(CriterionResult(extra={"lc": True}))


# ---------------------------------------------------------------------------
# Left-end behaviour of ln(f / g)
# ---------------------------------------------------------------------------


def boundary_conditions(X: Distribution, Y: Distribution, limit_tol: float | None = None) -> ContinuousBoundary | DiscreteBoundary:
    """Left-end quantities that decide the four orders when X <=lc Y.

    Discrete pairs return the exact pmf ratios at 0 and 1 (a/0 = inf). Continuous pairs
    estimate lim l(x) and lim l'(x) as x -> 0 along x = 2^-j, j = 10..40, each sequence
    Richardson-extrapolated; the first pair of successive estimates agreeing within
    ``limit_tol`` is returned, otherwise :class:`ConvergenceError` is raised.
    """
    settings = get_settings()
    limit_tol = settings.limit_tol if limit_tol is None else limit_tol
    if isinstance(X, DiscreteDistribution) and isinstance(Y, DiscreteDistribution):
        log_fx = np.asarray(X.log_pmf(np.array([0, 1])))
        log_fy = np.asarray(Y.log_pmf(np.array([0, 1])))
        return DiscreteBoundary(
            ratio0=_pmf_ratio(log_fx[0], log_fy[0]),
            ratio1=_pmf_ratio(log_fx[1], log_fy[1]),
            rel_tol=settings.criteria_rel_tol,
        )
    require(
        isinstance(X, ContinuousDistribution) and isinstance(Y, ContinuousDistribution),
        "boundary conditions need two distributions of the same kind",
    )
    xs = np.power(2.0, -np.array(list(_LIMIT_POWERS), dtype=float))
    log_ratio = np.asarray(X.log_pdf(xs)) - np.asarray(Y.log_pdf(xs))
    require(bool(np.all(np.isfinite(log_ratio))), "ln(f/g) is not finite near 0", ConvergenceError)

    # l(x) = L + s x + O(x^2): both extrapolations remove the first-order term
    limits = 2.0 * log_ratio[1:] - log_ratio[:-1]
    slopes = 2.0 * (log_ratio[:-1] - log_ratio[1:]) / xs[:-1]
    slope_limits = 2.0 * slopes[1:] - slopes[:-1]
    limit = _first_stable(limits, limit_tol, "lim l(x)")
    slope = _first_stable(slope_limits, limit_tol, "lim l'(x)")
    logger.debug("boundary limits for %s vs %s: l -> %.10g, l' -> %.10g", X.label, Y.label, limit, slope)
    return ContinuousBoundary(l_limit_at_0=limit, l_slope_limit_at_0=slope, rel_tol=settings.criteria_rel_tol)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _first_stable(sequence: NDArray[np.float64], tol: float, name: str) -> float:
    for current, following in zip(sequence[:-1], sequence[1:]):
        if abs(following - current) <= tol * max(1.0, abs(following)):
            return float(following)
    raise ConvergenceError(f"{name} did not stabilise along x = 2^-j, j = {_LIMIT_POWERS.start}..{_LIMIT_POWERS.stop - 1}")


def _pmf_ratio(log_numerator: float, log_denominator: float) -> float:
    if math.isfinite(log_denominator):
        with np.errstate(over="ignore"):
            return float(np.exp(log_numerator - log_denominator))
    return math.inf if math.isfinite(log_numerator) else 0.0


def _check_atoms(kernel: ExponentialFamilyKernel, theta: float, mu: FiniteMixingMeasure) -> None:
    kernel.check_parameter(theta)
    for t in mu.params:
        kernel.check_parameter(float(t))


def _le(lhs: float | None, rhs: float | None, rel_tol: float) -> bool | None:
    if lhs is None or rhs is None:
        return None
    return lhs <= rhs + rel_tol * max(abs(lhs), abs(rhs))
