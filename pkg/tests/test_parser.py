import pytest

from stochorder.errors import SpecParseError
from stochorder.services.distributions import DiscreteDistribution, MixtureFamily
from stochorder.services.spec_parser import build, format_param, parse_dist_spec


@pytest.mark.parametrize(
    "text, canonical",
    [
        ("poisson(2)", "poisson(2)"),
        ("  binomial( 3 , 0.43 )", "binomial(3,0.43)"),
        ("negbin(3,0.49)", "negbin(3,0.49)"),
        ("gamma(3, 1.5)", "gamma(3,1.5)"),
        ("pbin(0.2, 0.4, 0.6)", "pbin(0.2,0.4,0.6)"),
        ("mix(gamma(2); 1:0.5, 2:0.5)", "mix(gamma(2); 1:0.5, 2:0.5)"),
        ("MIX(poisson;1:.25,3:.75)", "mix(poisson; 1:0.25, 3:0.75)"),
        ("gconv(1:1, 2:2)", "gconv(1:1, 2:2)"),
        ("nbconv(1:0.3,2:0.6)", "nbconv(1:0.3, 2:0.6)"),
        ("gamma(1e0, 2.5E-1)", "gamma(1,0.25)"),
    ],
)
def test_canonical_form_reparses_identically(text: str, canonical: str) -> None:
    spec = parse_dist_spec(text)
    assert spec.canonical() == canonical
    assert parse_dist_spec(spec.canonical()) == spec


@pytest.mark.parametrize(
    "text",
    [
        "",
        "poisson",
        "poisson(2",
        "poisson(2))",
        "poisson(2, 3)",
        "weibull(1, 2)",
        "binomial(2.5, 0.3)",
        "binomial(3, 1.2)",
        "negbin(2, 0)",
        "gamma(-1, 1)",
        "pbin()",
        "pbin(0.2, 1.0)",
        "mix(gamma; 1:1)",
        "mix(poisson; 1:0.5, 2:0.4)",
        "mix(binomial(3); 1.5:1)",
        "gconv(1:1; 2:2)",
        "gconv(1, 2)",
        "nbconv(1:1.5)",
        "poisson(nan)",
        "poisson(2) extra",
        "poisson(2)#",
    ],
)
def test_malformed_expressions_raise(text: str) -> None:
    with pytest.raises(SpecParseError):
        parse_dist_spec(text)


def test_error_messages_point_at_the_problem() -> None:
    with pytest.raises(SpecParseError, match="position"):
        parse_dist_spec("gamma(3; 1)")
    with pytest.raises(SpecParseError, match="binomial n must be an integer"):
        parse_dist_spec("binomial(2.5, 0.3)")


def test_mixture_family_and_kernel_accessors() -> None:
    spec = parse_dist_spec("mix(negbin(2); 0.3:0.5, 0.6:0.5)")
    assert spec.family == MixtureFamily("negbin", 2.0)
    assert spec.discrete
    assert spec.mixing_measure().params.tolist() == [0.3, 0.6]

    kernel = parse_dist_spec("gamma(2, 1.25)")
    assert kernel.is_kernel
    assert kernel.kernel_family() == MixtureFamily("gamma", 2.0)
    assert kernel.kernel_parameter == 1.25
    assert not kernel.discrete


def test_build_labels_with_canonical_text() -> None:
    X = build(parse_dist_spec("nbconv( 1:0.3 , 2:0.6 )"), tail_tol=1e-10)
    assert isinstance(X, DiscreteDistribution)
    assert X.label == "nbconv(1:0.3, 2:0.6)"
    assert build(parse_dist_spec("gconv(1:1,2:2)")).kind == "continuous"


def test_format_param() -> None:
    assert format_param(3.0) == "3"
    assert format_param(0.1) == "0.1"
    assert format_param(1e-20) == "1e-20"
