import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from stochorder.errors import DomainError
from stochorder.services.specfn import (
    EvalError,
    incomplete_gamma_pair,
    log_gamma,
    log_sum_exp,
    reg_lower_incomplete_gamma,
    reg_upper_incomplete_gamma,
)


def _taylor_log_gamma(x: float) -> float:
    # ln Gamma(1 + e) = -euler_gamma e + sum_{k>=2} (-1)^k zeta(k) e^k / k, |e| < 1
    center = 1.0 if abs(x - 1.0) < abs(x - 2.0) else 2.0
    e = x - center
    terms = [-np.euler_gamma * e] + [(-1.0) ** k * float(special.zeta(k)) * e**k / k for k in range(2, 30)]
    value = math.fsum(terms)
    return value if center == 1.0 else value + math.log1p(e)


def test_log_gamma_matches_golden_values() -> None:
    xs = np.logspace(-3, 6, 181)
    xs = xs[(np.abs(xs - 1.0) > 0.05) & (np.abs(xs - 2.0) > 0.05)]
    xs = np.concatenate([xs, [2.0000000023, 2.054, 2.0 + 1e-12, 2.0 + 1e-6, 2.5, 3.0, 3.999, 4.0, 4.001]])
    reference = special.gammaln(xs)
    error = np.abs(np.asarray(log_gamma(xs)) - reference)
    assert np.all(error <= 1e-13 * np.abs(reference))


@pytest.mark.parametrize("offset", [1e-12, 1e-9, 2.3e-9, 1e-6, 1e-3, 0.04])
@pytest.mark.parametrize("root", [1.0, 2.0])
@pytest.mark.parametrize("side", [-1.0, 1.0])
def test_log_gamma_keeps_relative_accuracy_near_roots(root: float, offset: float, side: float) -> None:
    x = root + side * offset
    expected = _taylor_log_gamma(x)
    assert abs(log_gamma(x) - expected) <= 1e-13 * abs(expected)


def test_log_gamma_recurrence_on_random_points() -> None:
    rng = np.random.default_rng(20090417)
    xs = np.exp(rng.uniform(math.log(0.5), math.log(1e5), size=10_000))
    lhs = np.asarray(log_gamma(xs + 1.0))
    rhs = np.asarray(log_gamma(xs)) + np.log(xs)
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.maximum(1.0, np.abs(lhs)))


def test_log_gamma_known_points() -> None:
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-12)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-12)
    assert log_gamma(10.0) == pytest.approx(math.log(362880.0), rel=1e-12)
    assert isinstance(log_gamma(3.0), float)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_rejects_outside_domain(bad: float) -> None:
    with pytest.raises(DomainError):
        log_gamma(bad)


@pytest.mark.parametrize("a", [0.3, 1.0, 2.5, 7.0, 40.0])
def test_incomplete_gamma_matches_scipy(a: float) -> None:
    xs = np.concatenate([np.logspace(-4, 2, 60), [a, a + 1.0]])
    lower, upper = incomplete_gamma_pair(a, xs)
    assert lower == pytest.approx(special.gammainc(a, xs), rel=1e-10, abs=1e-15)
    assert upper == pytest.approx(special.gammaincc(a, xs), rel=1e-10, abs=1e-15)


def test_upper_tail_keeps_relative_accuracy() -> None:
    value = reg_upper_incomplete_gamma(2.0, 60.0)
    assert value == pytest.approx(special.gammaincc(2.0, 60.0), rel=1e-10)
    assert value < 1e-20


def test_incomplete_gamma_edges() -> None:
    assert reg_lower_incomplete_gamma(2.0, 0.0) == 0.0
    assert reg_upper_incomplete_gamma(2.0, 0.0) == 1.0
    assert reg_lower_incomplete_gamma(2.0, math.inf) == 1.0
    assert reg_upper_incomplete_gamma(2.0, math.inf) == 0.0


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 10.0, 100.0])
def test_lower_incomplete_gamma_is_nondecreasing(a: float) -> None:
    xs = np.linspace(0.0, a + 40.0 * math.sqrt(a), 2001)
    lower = np.asarray(reg_lower_incomplete_gamma(a, xs))
    assert lower[0] == 0.0
    assert np.all(np.diff(lower) >= 0.0)
    assert lower[-1] >= 1.0 - 1e-10


def test_incomplete_gamma_domain_errors() -> None:
    with pytest.raises(DomainError):
        reg_lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(DomainError):
        reg_lower_incomplete_gamma(1.0, -0.5)


@given(
    a=st.floats(min_value=0.1, max_value=30.0),
    x=st.floats(min_value=0.5, max_value=80.0),
)
def test_incomplete_gamma_recurrence(a: float, x: float) -> None:
    # P(a + 1, x) = P(a, x) - x^a e^{-x} / Gamma(a + 1)
    step = math.exp(a * math.log(x) - x - log_gamma(a + 1.0))
    assert reg_lower_incomplete_gamma(a + 1.0, x) == pytest.approx(
        reg_lower_incomplete_gamma(a, x) - step, rel=1e-8, abs=1e-12
    )


@given(
    a=st.floats(min_value=0.1, max_value=50.0),
    x=st.floats(min_value=0.0, max_value=200.0),
)
def test_incomplete_gamma_pair_sums_to_one(a: float, x: float) -> None:
    lower, upper = incomplete_gamma_pair(a, x)
    assert float(lower + upper) == pytest.approx(1.0, abs=1e-14)


def test_log_sum_exp() -> None:
    values = np.array([-1000.0, 3.0, 2.5, -np.inf])
    assert log_sum_exp(values) == pytest.approx(special.logsumexp(values), rel=1e-15)
    assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0), rel=1e-15)
    assert log_sum_exp([-np.inf, -np.inf]) == -math.inf


def test_log_sum_exp_along_axis() -> None:
    values = np.array([[0.0, -np.inf], [math.log(3.0), -np.inf]])
    result = log_sum_exp(values, axis=0)
    assert result[0] == pytest.approx(math.log(4.0))
    assert result[1] == -math.inf


@given(
    st.lists(st.floats(min_value=-700.0, max_value=700.0) | st.just(-math.inf), min_size=1, max_size=30),
    st.data(),
)
def test_log_sum_exp_ignores_input_order(values: list[float], data: st.DataObject) -> None:
    shuffled = data.draw(st.permutations(values))
    assert log_sum_exp(shuffled) == log_sum_exp(values)


def test_log_sum_exp_rejects_bad_input() -> None:
    with pytest.raises(DomainError):
        log_sum_exp([])
    with pytest.raises(DomainError):
        log_sum_exp([1.0, math.nan])


def test_eval_error_bound() -> None:
    error = EvalError(absolute_bound=1e-12, relative_bound=1e-10)
    assert float(error.bound(-2.0)) == pytest.approx(1e-12 + 2e-10)
    with pytest.raises(DomainError):
        EvalError(absolute_bound=-1.0)
