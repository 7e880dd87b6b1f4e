import math

import numpy as np
import pytest
from scipy import integrate, stats

from stochorder.errors import ConvergenceError, DomainError, SupportError, TailToleranceError
from stochorder.services.distributions import (
    DiscreteDistribution,
    FiniteMixingMeasure,
    GammaConvolutionSpec,
    MixtureFamily,
    NegBinConvolutionSpec,
    PoissonBinomialSpec,
    binomial_distribution,
    binomial_pmf,
    discrete_convolution_pmf,
    gamma_cdf,
    gamma_convolution_pdf,
    gamma_distribution,
    gamma_pdf,
    gamma_sf,
    hazard,
    mixture_pmf_pdf,
    negbin_convolution,
    negbin_distribution,
    negbin_pmf,
    poisson_binomial_pmf,
    poisson_distribution,
    poisson_pmf,
    reflect,
    reversed_hazard,
    survival,
)
from tests.helpers import sample_gamma_convolution


def test_kernels_match_scipy() -> None:
    xs = np.arange(0, 30)
    assert poisson_pmf(3.5, xs) == pytest.approx(stats.poisson.pmf(xs, 3.5), rel=1e-12)
    assert binomial_pmf(12, 0.3, np.arange(13)) == pytest.approx(stats.binom.pmf(np.arange(13), 12, 0.3), rel=1e-11)
    assert negbin_pmf(2.5, 0.4, xs) == pytest.approx(stats.nbinom.pmf(xs, 2.5, 0.4), rel=1e-11)

    grid = np.linspace(0.01, 25.0, 200)
    assert gamma_pdf(2.5, 1.7, grid) == pytest.approx(stats.gamma.pdf(grid, 2.5, scale=1.7), rel=1e-11)
    assert gamma_cdf(2.5, 1.7, grid) == pytest.approx(stats.gamma.cdf(grid, 2.5, scale=1.7), rel=1e-10, abs=1e-15)
    assert gamma_sf(2.5, 1.7, grid) == pytest.approx(stats.gamma.sf(grid, 2.5, scale=1.7), rel=1e-10, abs=1e-15)


def test_kernel_domain_errors() -> None:
    with pytest.raises(DomainError):
        poisson_pmf(-1.0, 2)
    with pytest.raises(DomainError):
        binomial_pmf(3, 0.5, 4)
    with pytest.raises(DomainError):
        negbin_pmf(2.0, 1.0, 0)
    with pytest.raises(DomainError):
        gamma_pdf(0.0, 1.0, 1.0)


def test_gamma_pdf_is_zero_off_support() -> None:
    assert gamma_pdf(2.0, 1.0, -1.0) == 0.0
    assert gamma_pdf(2.0, 1.0, 0.0) == 0.0


def test_poisson_table_tail_bound() -> None:
    dist = poisson_distribution(4.0, tail_tol=1e-12)
    assert 0 < dist.tail_mass_bound <= 1e-12
    assert math.fsum(dist.pmf_table) + dist.tail_mass_bound >= 1.0 - 1e-12
    true_tail = stats.poisson.sf(dist.upper, 4.0)
    assert true_tail <= dist.tail_mass_bound


def test_negbin_table_with_small_size() -> None:
    dist = negbin_convolution(NegBinConvolutionSpec((0.5,), (0.3,)), tail_tol=1e-10)
    assert dist.tail_mass_bound <= 1e-10
    assert stats.nbinom.sf(dist.upper, 0.5, 0.3) <= dist.tail_mass_bound


def test_discrete_distribution_functionals() -> None:
    dist = binomial_distribution(3, 0.5)
    assert dist.cdf(1) == pytest.approx(0.5)
    assert dist.survival(1) == pytest.approx(0.5)
    assert dist.at_least(1) == pytest.approx(0.875)
    assert dist.survival(-1) == pytest.approx(1.0)
    assert dist.survival(3) == 0.0
    assert dist.mean() == pytest.approx(1.5)
    assert hazard(dist, 3) == pytest.approx(1.0)
    assert reversed_hazard(dist, 0) == pytest.approx(1.0)


def test_hazard_rejects_vanishing_denominator() -> None:
    with pytest.raises(DomainError):
        hazard(binomial_distribution(3, 0.5), 4)


def test_discrete_distribution_validation() -> None:
    with pytest.raises(SupportError):
        DiscreteDistribution(np.array([0.5, 0.0, 0.5]))
    with pytest.raises(DomainError):
        DiscreteDistribution(np.array([0.5, 0.2]))
    trimmed = DiscreteDistribution(np.array([0.5, 0.5, 0.0, 0.0]))
    assert trimmed.upper == 1


def test_poisson_binomial_with_equal_probabilities_is_binomial() -> None:
    dist = poisson_binomial_pmf(PoissonBinomialSpec((0.3, 0.3, 0.3, 0.3)))
    assert dist.pmf_table == pytest.approx(stats.binom.pmf(np.arange(5), 4, 0.3), abs=1e-15)
    assert dist.finite_support


def test_poisson_binomial_example() -> None:
    dist = poisson_binomial_pmf(PoissonBinomialSpec((0.2, 0.4, 0.6)))
    assert dist.pmf_table == pytest.approx([0.192, 0.464, 0.296, 0.048])


def test_negbin_convolution_with_common_p() -> None:
    dist = negbin_convolution(NegBinConvolutionSpec((1.0, 2.0), (0.4, 0.4)))
    xs = np.arange(40)
    assert dist.pmf(xs) == pytest.approx(negbin_pmf(3.0, 0.4, xs), abs=1e-14)
    assert dist.tail_mass_bound <= 1e-12


def test_discrete_convolution_checks_component_tails() -> None:
    loose = poisson_distribution(2.0, tail_tol=1e-6)
    tight = poisson_distribution(2.0, tail_tol=1e-14)
    with pytest.raises(TailToleranceError):
        discrete_convolution_pmf([loose, tight], tail_tol=1e-12)
    with pytest.raises(TailToleranceError):
        discrete_convolution_pmf([tight, tight], tail_tol=1e-12, table_size_cap=10)


def test_discrete_convolution_of_poissons() -> None:
    parts = [poisson_distribution(1.0, tail_tol=1e-14), poisson_distribution(2.5, tail_tol=1e-14)]
    total = discrete_convolution_pmf(parts, tail_tol=1e-12)
    xs = np.arange(30)
    assert total.pmf(xs) == pytest.approx(stats.poisson.pmf(xs, 3.5), abs=1e-14)


def test_single_component_gamma_convolution_is_gamma() -> None:
    conv = gamma_convolution_pdf(GammaConvolutionSpec((2.0,), (3.0,)))
    grid = np.linspace(0.1, 40.0, 50)
    assert conv.pdf(grid) == pytest.approx(gamma_pdf(2.0, 3.0, grid), rel=1e-12)
    assert conv.cdf(grid) == pytest.approx(gamma_cdf(2.0, 3.0, grid), rel=1e-12, abs=1e-15)


def test_hypoexponential_closed_form() -> None:
    conv = gamma_convolution_pdf(GammaConvolutionSpec((1.0, 1.0), (1.0, 2.0)))
    grid = np.linspace(0.01, 20.0, 400)
    expected_pdf = np.exp(-grid / 2.0) - np.exp(-grid)
    expected_sf = 2.0 * np.exp(-grid / 2.0) - np.exp(-grid)
    assert np.max(np.abs(conv.pdf(grid) - expected_pdf)) <= 1e-8
    assert np.max(np.abs(conv.survival(grid) - expected_sf)) <= 1e-8
    assert np.max(np.abs(conv.cdf(grid) - (1.0 - expected_sf))) <= 1e-8


def test_gamma_convolution_matches_samples() -> None:
    spec = GammaConvolutionSpec((1.0, 2.0), (1.0, 2.0))
    conv = gamma_convolution_pdf(spec)
    rng = np.random.default_rng(20090417)
    samples = sample_gamma_convolution(spec, 1_000_000, rng)
    result = stats.kstest(samples, conv.cdf)
    assert result.statistic <= 0.002


def test_gamma_convolution_rejects_wide_scale_ratio() -> None:
    with pytest.raises(ConvergenceError):
        gamma_convolution_pdf(GammaConvolutionSpec((1.0, 1.0), (1.0, 1e5)))


def test_gamma_convolution_term_cap() -> None:
    with pytest.raises(ConvergenceError):
        gamma_convolution_pdf(GammaConvolutionSpec((1.0, 1.0), (1.0, 50.0)), max_terms=10)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.5])
@pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
def test_negbin_is_poisson_gamma_mixture(k: float, p: float) -> None:
    # NB(k, p) = Poisson(lambda) with lambda ~ Gam(k, (1 - p) / p); lambda = s^2 keeps the integrand smooth at 0
    theta = (1.0 - p) / p
    rate = 1.0 + 1.0 / theta
    upper = math.sqrt(200.0 / rate)
    for x in range(12):
        power = 2.0 * x + 2.0 * k - 1.0
        log_const = math.lgamma(x + 1.0) + math.lgamma(k) + k * math.log(theta)

        def integrand(s: float) -> float:
            if s == 0.0:
                return 2.0 * math.exp(-log_const) if power == 0.0 else 0.0
            return 2.0 * math.exp(power * math.log(s) - rate * s * s - log_const)

        mixed, _ = integrate.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=200)
        assert negbin_pmf(k, p, x) == pytest.approx(mixed, rel=1e-9)


def test_gamma_quantiles() -> None:
    dist = gamma_distribution(2.0, 1.5)
    probs = np.array([1e-9, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9])
    assert dist.quantile(probs) == pytest.approx(stats.gamma.ppf(probs, 2.0, scale=1.5), rel=1e-10)
    assert dist.isf(1e-12) == pytest.approx(stats.gamma.isf(1e-12, 2.0, scale=1.5), rel=1e-10)
    with pytest.raises(DomainError):
        dist.quantile(1.0)


def test_mixtures() -> None:
    mu = FiniteMixingMeasure(((1.0, 0.25), (3.0, 0.75)))
    mixed = mixture_pmf_pdf(MixtureFamily("poisson"), mu)
    xs = np.arange(20)
    expected = 0.25 * stats.poisson.pmf(xs, 1.0) + 0.75 * stats.poisson.pmf(xs, 3.0)
    assert mixed.pmf(xs) == pytest.approx(expected, abs=1e-14)

    scales = FiniteMixingMeasure(((1.0, 0.5), (2.0, 0.5)))
    gamma_mix = mixture_pmf_pdf(MixtureFamily("gamma", 2.0), scales)
    grid = np.linspace(0.05, 20.0, 60)
    expected_pdf = 0.5 * stats.gamma.pdf(grid, 2.0, scale=1.0) + 0.5 * stats.gamma.pdf(grid, 2.0, scale=2.0)
    assert gamma_mix.pdf(grid) == pytest.approx(expected_pdf, rel=1e-11)


def test_mixture_rejects_illegal_atoms() -> None:
    with pytest.raises(DomainError):
        mixture_pmf_pdf(MixtureFamily("binomial", 3), FiniteMixingMeasure(((1.2, 1.0),)))
    with pytest.raises(DomainError):
        FiniteMixingMeasure(((0.2, 0.5), (0.4, 0.4)))
    with pytest.raises(DomainError):
        MixtureFamily("binomial", 2.5)


def test_reflection() -> None:
    reflected = reflect(binomial_distribution(4, 0.3))
    assert reflected.pmf_table == pytest.approx(stats.binom.pmf(np.arange(5), 4, 0.7), abs=1e-15)
    with pytest.raises(SupportError):
        reflect(poisson_distribution(1.0))


def test_gamma_convolution_at_the_scale_ratio_cap() -> None:
    # hypoexponential with scales 1 and 1e4
    b1, b2 = 1.0, 1e4
    conv = gamma_convolution_pdf(GammaConvolutionSpec((1.0, 1.0), (b1, b2)))
    grid = np.array([0.5, 3.0, 50.0, 1e4, 5e4])
    expected_pdf = (np.expm1(-grid / b2) - np.expm1(-grid / b1)) / (b2 - b1)
    expected_sf = (b2 * np.exp(-grid / b2) - b1 * np.exp(-grid / b1)) / (b2 - b1)
    expected_cdf = (b1 * np.expm1(-grid / b1) - b2 * np.expm1(-grid / b2)) / (b2 - b1)
    assert conv.pdf(grid) == pytest.approx(expected_pdf, rel=1e-9)
    assert conv.survival(grid) == pytest.approx(expected_sf, rel=1e-9)
    assert conv.cdf(grid) == pytest.approx(expected_cdf, rel=1e-9)


def test_gamma_convolution_with_large_shape_at_the_scale_ratio_cap() -> None:
    conv = gamma_convolution_pdf(GammaConvolutionSpec((1.0, 80.0), (1.0, 1e4)))
    for x in (6e5, 8e5, 1e6):
        expected, _ = integrate.quad(
            lambda s: math.exp(-s) * stats.gamma.pdf(x - s, 80.0, scale=1e4), 0.0, 60.0, epsabs=0.0, epsrel=1e-12
        )
        assert conv.pdf(x) == pytest.approx(expected, rel=1e-9)


def test_gamma_convolution_series_budget() -> None:
    with pytest.raises(ConvergenceError):
        gamma_convolution_pdf(GammaConvolutionSpec((1.0, 400.0), (1.0, 1e4)))


@pytest.mark.parametrize("spec", [GammaConvolutionSpec((1.0, 2.0), (1.0, 2.0)), GammaConvolutionSpec((1.0, 1.0, 1.0), (1.0, 2.0, 4.0))])
def test_gamma_convolution_density_integrates_to_one(spec: GammaConvolutionSpec) -> None:
    grid = np.linspace(0.0, 150.0, 300_001)
    mass = integrate.trapezoid(gamma_convolution_pdf(spec).pdf(grid), grid)
    assert abs(mass - 1.0) <= 1e-8


def test_large_mean_tables_are_kept_in_log_space() -> None:
    poisson = poisson_distribution(800.0)
    assert poisson.pmf(0) == 0.0
    assert poisson.log_pmf(0) == pytest.approx(-800.0, rel=1e-14)
    assert poisson.log_pmf(800) == pytest.approx(stats.poisson.logpmf(800, 800.0), rel=1e-11)
    assert poisson.mean() == pytest.approx(800.0, rel=1e-9)

    binomial = binomial_distribution(1100, 0.5)
    xs = np.array([0, 1, 2, 300, 550, 1099, 1100])
    assert binomial.log_pmf(0) == pytest.approx(1100.0 * math.log(0.5), rel=1e-14)
    assert binomial.log_pmf(xs) == pytest.approx(stats.binom.logpmf(xs, 1100, 0.5), rel=1e-10)
    assert math.fsum(binomial.pmf_table) == pytest.approx(1.0, abs=1e-12)

    negbin = negbin_distribution(1200.0, 0.5)
    assert negbin.log_pmf(0) == pytest.approx(1200.0 * math.log(0.5), rel=1e-14)


def test_poisson_binomial_with_many_summands() -> None:
    dist = poisson_binomial_pmf(PoissonBinomialSpec((0.5,) * 1100))
    xs = np.array([0, 1, 2, 550, 1099, 1100])
    assert dist.log_pmf(xs) == pytest.approx(stats.binom.logpmf(xs, 1100, 0.5), rel=1e-10)


def test_continuous_hazards() -> None:
    grid = np.array([0.1, 1.0, 10.0, 50.0])
    assert hazard(gamma_distribution(1.0, 2.0), grid) == pytest.approx(np.full(grid.size, 0.5), rel=1e-10)
    assert hazard(gamma_distribution(1.0, 0.25), 3.0) == pytest.approx(4.0, rel=1e-10)
    assert hazard(gamma_distribution(2.0, 1.0), 1.0) == pytest.approx(0.5, rel=1e-12)
    assert reversed_hazard(gamma_distribution(1.0, 1.0), grid) == pytest.approx(1.0 / np.expm1(grid), rel=1e-10)
    assert reversed_hazard(gamma_distribution(2.0, 1.0), 1.0) == pytest.approx(math.exp(-1.0) / (1.0 - 2.0 * math.exp(-1.0)), rel=1e-12)


def test_survival_for_both_kinds() -> None:
    assert survival(binomial_distribution(3, 0.5), 1) == pytest.approx(0.5)
    assert survival(binomial_distribution(3, 0.5), np.array([-1, 3])) == pytest.approx([1.0, 0.0])
    assert survival(gamma_distribution(1.0, 2.0), 2.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert survival(gamma_distribution(2.0, 1.0), 0.0) == pytest.approx(1.0)
