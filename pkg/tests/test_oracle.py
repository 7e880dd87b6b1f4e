import numpy as np
import pytest

from stochorder.errors import GridError, SupportError
from stochorder.services.distributions import (
    GammaConvolutionSpec,
    NegBinConvolutionSpec,
    PoissonBinomialSpec,
    binomial_distribution,
    gamma_convolution_pdf,
    gamma_distribution,
    negbin_convolution,
    negbin_distribution,
    poisson_binomial_pmf,
    poisson_distribution,
    reflect,
)
from stochorder.services.oracle import (
    CheckGrid,
    check_disp,
    check_hr,
    check_lc,
    check_lr,
    check_order,
    check_rh,
    check_st,
    check_star,
    default_grid,
    geometric_grid,
    quantile_grid,
    recheck,
)

TWO_GAMMAS = GammaConvolutionSpec((1.0, 2.0), (1.0, 2.0))
THREE_EXPONENTIALS = GammaConvolutionSpec((1.0, 1.0, 1.0), (1.0, 2.0, 4.0))
PBIN = PoissonBinomialSpec((0.2, 0.4, 0.6))
NB_PAIR = NegBinConvolutionSpec((1.0, 2.0), (0.3, 0.6))


def assert_fails_with_witness(verdict, X, Y) -> None:
    assert not verdict.holds
    assert verdict.witness is not None
    assert recheck(verdict, X, Y) > verdict.tolerance


@pytest.mark.parametrize("relation", ["st", "hr", "rh", "lr", "lc"])
def test_orders_are_reflexive_for_discrete(relation: str) -> None:
    X = poisson_distribution(2.0)
    assert check_order(relation, X, X).holds


@pytest.mark.parametrize("relation", ["st", "hr", "rh", "lr", "lc", "star", "disp"])
def test_orders_are_reflexive_for_continuous(relation: str) -> None:
    X = gamma_distribution(2.0, 1.5)
    assert check_order(relation, X, X, grid_points=801).holds


def test_poisson_means_are_lr_ordered() -> None:
    small, large = poisson_distribution(1.0), poisson_distribution(2.0)
    for check in (check_st, check_hr, check_rh, check_lr):
        assert check(small, large).holds
        assert_fails_with_witness(check(large, small), large, small)


def test_gamma_convolution_st_hr_threshold() -> None:
    S = gamma_convolution_pdf(TWO_GAMMAS)
    below = gamma_distribution(3.0, 1.5715)
    above = gamma_distribution(3.0, 1.6033)
    assert check_st(below, S).holds
    assert check_hr(below, S).holds
    assert_fails_with_witness(check_st(above, S), above, S)
    assert_fails_with_witness(check_hr(above, S), above, S)


def test_gamma_convolution_lr_rh_threshold() -> None:
    S = gamma_convolution_pdf(TWO_GAMMAS)
    below = gamma_distribution(3.0, 1.485)
    above = gamma_distribution(3.0, 1.515)
    assert check_lr(below, S).holds
    assert check_rh(below, S).holds
    assert_fails_with_witness(check_lr(above, S), above, S)
    assert_fails_with_witness(check_rh(above, S), above, S)


def test_three_exponentials_against_means() -> None:
    S = gamma_convolution_pdf(THREE_EXPONENTIALS)
    geometric, harmonic = 2.0, 12.0 / 7.0
    assert check_st(gamma_distribution(3.0, geometric * 0.99), S).holds
    assert not check_st(gamma_distribution(3.0, geometric * 1.01), S).holds
    assert check_hr(gamma_distribution(3.0, geometric * 0.99), S).holds
    assert not check_hr(gamma_distribution(3.0, geometric * 1.01), S).holds
    assert check_lr(gamma_distribution(3.0, harmonic * 0.99), S).holds
    assert not check_lr(gamma_distribution(3.0, harmonic * 1.01), S).holds
    assert check_rh(gamma_distribution(3.0, harmonic * 0.99), S).holds
    assert not check_rh(gamma_distribution(3.0, harmonic * 1.01), S).holds


def test_negbin_convolution_thresholds() -> None:
    N = negbin_convolution(NB_PAIR, tail_tol=1e-10)
    st_threshold, lr_threshold = 0.108 ** (1.0 / 3.0), 0.5
    for relation, threshold in (("st", st_threshold), ("hr", st_threshold), ("lr", lr_threshold), ("rh", lr_threshold)):
        assert check_order(relation, negbin_distribution(3.0, threshold * 1.02, tail_tol=1e-10), N).holds
        low = negbin_distribution(3.0, threshold * 0.98, tail_tol=1e-10)
        assert_fails_with_witness(check_order(relation, low, N), low, N)


def test_poisson_binomial_against_binomial() -> None:
    X = poisson_binomial_pmf(PBIN)
    assert check_hr(X, binomial_distribution(3, 0.43)).holds
    assert not check_hr(X, binomial_distribution(3, 0.41)).holds

    cases = {
        ("st", "up"): 0.423110,
        ("hr", "up"): 0.423110,
        ("lr", "up"): 0.446154,
        ("rh", "up"): 0.446154,
        ("st", "down"): 0.363424,
        ("rh", "down"): 0.363424,
        ("lr", "down"): 0.327273,
        ("hr", "down"): 0.327273,
    }
    for (relation, direction), threshold in cases.items():
        if direction == "up":
            assert check_order(relation, X, binomial_distribution(3, threshold + 0.02)).holds
            assert not check_order(relation, X, binomial_distribution(3, threshold - 0.02)).holds
        else:
            assert check_order(relation, binomial_distribution(3, threshold - 0.02), X).holds
            assert not check_order(relation, binomial_distribution(3, threshold + 0.02), X).holds


def test_reflection_swaps_hazard_orders() -> None:
    X = poisson_binomial_pmf(PBIN)
    Y = binomial_distribution(3, 0.5)
    Xr, Yr = reflect(X), reflect(Y)
    assert check_st(Xr, Yr).holds == check_st(Y, X).holds
    assert check_hr(Xr, Yr).holds == check_rh(Y, X).holds
    assert check_rh(Xr, Yr).holds == check_hr(Y, X).holds
    assert check_lr(Xr, Yr).holds == check_lr(Y, X).holds


def test_lr_counts_disjoint_tails_as_infinite_ratio() -> None:
    short, long = binomial_distribution(2, 0.5), binomial_distribution(4, 0.5)
    assert check_lr(short, long).holds
    assert not check_lr(long, short).holds


def test_lc_requires_nested_supports() -> None:
    with pytest.raises(SupportError):
        check_lc(binomial_distribution(4, 0.5), binomial_distribution(2, 0.5))
    with pytest.raises(SupportError):
        check_lc(poisson_distribution(1.0), binomial_distribution(3, 0.5))


def test_lc_for_gamma_shapes() -> None:
    assert check_lc(gamma_distribution(3.0, 1.0), gamma_distribution(2.0, 1.0), grid=geometric_grid(0.01, 30.0, 500)).holds
    X = gamma_distribution(2.0, 1.0)
    Y = gamma_convolution_pdf(TWO_GAMMAS)
    assert check_lc(gamma_distribution(3.0, 1.5), Y).holds
    assert check_lc(X, X).holds


def test_star_and_disp_for_gamma_convolutions() -> None:
    S = gamma_convolution_pdf(TWO_GAMMAS)
    assert check_star(gamma_distribution(3.0, 1.5), S, grid=geometric_grid(0.05, 30.0, 400)).holds
    assert check_disp(gamma_distribution(3.0, 1.5), S, quantile_grid=quantile_grid(801)).holds
    failing = check_disp(gamma_distribution(3.0, 1.7), S, quantile_grid=quantile_grid(801))
    assert not failing.holds
    assert 0.0 < failing.witness < 1.0


def test_kind_mismatch_is_a_support_error() -> None:
    with pytest.raises(SupportError):
        check_st(poisson_distribution(1.0), gamma_distribution(1.0, 1.0))
    with pytest.raises(SupportError):
        check_disp(poisson_distribution(1.0), poisson_distribution(2.0))


def test_grid_validation() -> None:
    with pytest.raises(GridError):
        CheckGrid(np.array([1.0, 1.0, 2.0]))
    with pytest.raises(GridError):
        CheckGrid(np.array([0.5, 1.5]), kind="discrete")
    with pytest.raises(GridError):
        CheckGrid(np.array([]))
    with pytest.raises(GridError):
        check_st(poisson_distribution(1.0), poisson_distribution(2.0), grid=geometric_grid(0.1, 2.0, 5))


def test_default_grids() -> None:
    discrete = default_grid(poisson_distribution(2.0), binomial_distribution(3, 0.5))
    assert discrete.kind == "discrete"
    assert discrete.points[0] == 0
    continuous = default_grid(gamma_distribution(2.0, 1.0), gamma_distribution(3.0, 1.0), points=101)
    assert continuous.size == 101
    assert continuous.points[0] == pytest.approx(gamma_distribution(2.0, 1.0).quantile(1e-9), rel=1e-9)


def test_truncated_tails_are_skipped_not_failed() -> None:
    X = poisson_distribution(2.0, tail_tol=1e-6)
    grid = CheckGrid(np.arange(X.upper + 20), kind="discrete")
    verdict = check_hr(X, X, grid=grid)
    assert verdict.holds
    assert verdict.points_skipped >= 19


def test_verdict_serialises() -> None:
    verdict = check_st(poisson_distribution(2.0), poisson_distribution(1.0))
    payload = verdict.to_dict()
    assert payload["holds"] is False
    assert payload["witness"] == verdict.witness
    assert payload["witness_points"] == [verdict.witness]


def test_lc_tolerance_is_scaled_by_the_grid_spacing() -> None:
    # l(x) = ln 2 - ln x is convex: chord gap ln(2) / 3 at (0.5, 1, 2), divided difference 2 ln(2) / 3
    X, Y = gamma_distribution(2.0, 1.0), gamma_distribution(3.0, 1.0)
    grid = CheckGrid(np.array([0.5, 1.0, 2.0]))
    divided_difference = 2.0 * np.log(2.0) / 3.0

    verdict = check_lc(X, Y, grid=grid)
    assert_fails_with_witness(verdict, X, Y)
    assert verdict.witness_points == (0.5, 1.0, 2.0)
    assert verdict.violation == pytest.approx(divided_difference * 0.5 * 1.0, rel=1e-12)
    assert recheck(verdict, X, Y) == pytest.approx(np.log(2.0) / 3.0, rel=1e-12)

    # tol sits between the chord gap and the divided difference
    assert check_lc(X, Y, grid=grid, tol=0.3).holds
    assert not check_lc(X, Y, grid=grid, tol=0.2).holds


def test_large_means_are_ordered() -> None:
    small, large = poisson_distribution(800.0), poisson_distribution(900.0)
    for check in (check_st, check_hr, check_rh, check_lr):
        assert check(small, large).holds
        assert_fails_with_witness(check(large, small), large, small)
    assert check_lr(binomial_distribution(1100, 0.5), binomial_distribution(1100, 0.6)).holds
    assert not check_lr(binomial_distribution(1100, 0.6), binomial_distribution(1100, 0.5)).holds
