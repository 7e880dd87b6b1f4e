"""Textual distribution expressions.

Grammar::

    spec    := poisson(l) | binomial(n, p) | negbin(k, p) | gamma(a, b)
             | pbin(p1, ..., pn)
             | mix(family; t1:w1, ..., tm:wm)
             | gconv(a1:b1, ...) | nbconv(k1:p1, ...)
    family  := poisson | binomial(n) | negbin(k) | gamma(a)

Whitespace is insignificant. :meth:`DistSpec.canonical` prints the form that re-parses to an
identical structure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Iterator

from ..errors import DomainError, SpecParseError
from .distributions import (
    Distribution,
    FiniteMixingMeasure,
    GammaConvolutionSpec,
    MixtureFamily,
    NegBinConvolutionSpec,
    PoissonBinomialSpec,
    binomial_distribution,
    gamma_convolution_pdf,
    gamma_distribution,
    mixture_pmf_pdf,
    negbin_convolution,
    negbin_distribution,
    poisson_binomial_pmf,
    poisson_distribution,
)

KERNELS = {"poisson": 1, "binomial": 2, "negbin": 2, "gamma": 2}
PAIRED = ("gconv", "nbconv")
KINDS = (*KERNELS, "pbin", "mix", *PAIRED)

_TOKEN = re.compile(
    r"\s*(?:(?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]+)|(?P<punct>[(),;:]))"
)


@dataclass(frozen=True)
class DistSpec:
    kind: str
    params: tuple[float, ...] = ()
    pairs: tuple[tuple[float, float], ...] = ()
    family: MixtureFamily | None = None

    @property
    def discrete(self) -> bool:
        if self.kind == "mix":
            return bool(self.family and self.family.discrete)
        return self.kind not in ("gamma", "gconv")

    @property
    def is_kernel(self) -> bool:
        return self.kind in KERNELS

    def kernel_family(self) -> MixtureFamily:
        """Family and shape of a kernel spec; the last parameter is the mixed one."""
        if self.kind == "poisson":
            return MixtureFamily("poisson")
        if self.kind in KERNELS:
            return MixtureFamily(self.kind, self.params[0])
        raise DomainError(f"{self.kind} is not a single-kernel spec")

    @property
    def kernel_parameter(self) -> float:
        return self.params[-1]

    def canonical(self) -> str:
        if self.kind == "mix":
            assert self.family is not None
            return f"mix({_family_text(self.family)}; {_pair_text(self.pairs)})"
        if self.kind in PAIRED:
            return f"{self.kind}({_pair_text(self.pairs)})"
        return f"{self.kind}({','.join(format_param(v) for v in self.params)})"

    def poisson_binomial(self) -> PoissonBinomialSpec:
        return PoissonBinomialSpec(self.params)

    def gamma_convolution(self) -> GammaConvolutionSpec:
        return GammaConvolutionSpec(tuple(a for a, _ in self.pairs), tuple(b for _, b in self.pairs))

    def negbin_convolution(self) -> NegBinConvolutionSpec:
        return NegBinConvolutionSpec(tuple(k for k, _ in self.pairs), tuple(p for _, p in self.pairs))

    def mixing_measure(self) -> FiniteMixingMeasure:
        return FiniteMixingMeasure(self.pairs)


def format_param(value: float) -> str:
    """Shortest round-tripping text; integral values print without a decimal point."""
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def parse_dist_spec(text: str) -> DistSpec:
    parser = _Parser(text)
    spec = parser.parse()
    _validate(spec, text)
    return spec


def build(spec: DistSpec, tail_tol: float | None = None) -> Distribution:
    """Construct the distribution object an expression denotes."""
    if spec.kind == "poisson":
        dist: Distribution = poisson_distribution(spec.params[0], tail_tol=tail_tol)
    elif spec.kind == "binomial":
        dist = binomial_distribution(int(spec.params[0]), spec.params[1])
    elif spec.kind == "negbin":
        dist = negbin_distribution(spec.params[0], spec.params[1], tail_tol=tail_tol)
    elif spec.kind == "gamma":
        dist = gamma_distribution(spec.params[0], spec.params[1])
    elif spec.kind == "pbin":
        dist = poisson_binomial_pmf(spec.poisson_binomial())
    elif spec.kind == "mix":
        assert spec.family is not None
        dist = mixture_pmf_pdf(spec.family, spec.mixing_measure(), tail_tol=tail_tol)
    elif spec.kind == "gconv":
        dist = gamma_convolution_pdf(spec.gamma_convolution())
    else:
        dist = negbin_convolution(spec.negbin_convolution(), tail_tol=tail_tol)
    return replace(dist, label=spec.canonical())


def _validate(spec: DistSpec, text: str) -> None:
    try:
        if spec.kind == "poisson":
            MixtureFamily("poisson").check_parameter(spec.params[0])
        elif spec.kind in KERNELS:
            spec.kernel_family().check_parameter(spec.params[1])
        elif spec.kind == "pbin":
            spec.poisson_binomial()
        elif spec.kind == "mix":
            assert spec.family is not None
            for t, _ in spec.mixing_measure().atoms:
                spec.family.check_parameter(t)
        elif spec.kind == "gconv":
            spec.gamma_convolution()
        else:
            spec.negbin_convolution()
    except DomainError as exc:
        raise SpecParseError(f"invalid parameters in {text!r}: {exc}") from exc


def _family_text(family: MixtureFamily) -> str:
    if family.shape is None:
        return family.name
    return f"{family.name}({format_param(family.shape)})"


def _pair_text(pairs: tuple[tuple[float, float], ...]) -> str:
    return ", ".join(f"{format_param(a)}:{format_param(b)}" for a, b in pairs)


class _Parser:
    def __init__(self, text: str) -> None:
        self._text = text
        self._tokens = list(self._tokenize(text))
        self._pos = 0

    def _tokenize(self, text: str) -> Iterator[tuple[str, str, int]]:
        index = 0
        stripped = text.rstrip()
        while index < len(stripped):
            match = _TOKEN.match(stripped, index)
            if match is None or match.end() == index:
                raise SpecParseError(f"unexpected character at position {index} in {self._text!r}")
            kind = match.lastgroup or ""
            yield kind, match.group(kind), match.start(kind)
            index = match.end()

    def parse(self) -> DistSpec:
        name = self._name()
        if name not in KINDS:
            raise SpecParseError(f"unknown distribution {name!r}; expected one of {', '.join(KINDS)}")
        self._expect("(")
        if name == "mix":
            family = self._family()
            self._expect(";")
            spec = DistSpec("mix", pairs=self._pairs(), family=family)
        elif name in PAIRED:
            spec = DistSpec(name, pairs=self._pairs())
        else:
            spec = DistSpec(name, params=self._numbers())
        self._expect(")")
        if self._pos != len(self._tokens):
            raise SpecParseError(f"trailing input after position {self._tokens[self._pos][2]} in {self._text!r}")
        self._check_arity(spec)
        return spec

    def _family(self) -> MixtureFamily:
        name = self._name()
        if name not in KERNELS:
            raise SpecParseError(f"unknown mixture family {name!r}")
        shape: float | None = None
        if name != "poisson":
            self._expect("(")
            shape = self._number()
            self._expect(")")
        try:
            return MixtureFamily(name, shape)
        except DomainError as exc:
            raise SpecParseError(f"invalid mixture family in {self._text!r}: {exc}") from exc

    def _numbers(self) -> tuple[float, ...]:
        values = [self._number()]
        while self._accept(","):
            values.append(self._number())
        return tuple(values)

    def _pairs(self) -> tuple[tuple[float, float], ...]:
        pairs = [self._pair()]
        while self._accept(","):
            pairs.append(self._pair())
        return tuple(pairs)

    def _pair(self) -> tuple[float, float]:
        first = self._number()
        self._expect(":")
        return first, self._number()

    def _check_arity(self, spec: DistSpec) -> None:
        expected = KERNELS.get(spec.kind)
        if expected is not None and len(spec.params) != expected:
            raise SpecParseError(f"{spec.kind} takes {expected} parameter(s), got {len(spec.params)}")
        if spec.kind == "binomial" and not float(spec.params[0]).is_integer():
            raise SpecParseError(f"binomial n must be an integer, got {format_param(spec.params[0])}")

    def _peek(self) -> tuple[str, str, int] | None:
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def _advance(self, kind: str, what: str) -> str:
        token = self._peek()
        if token is None:
            raise SpecParseError(f"expected {what} at end of {self._text!r}")
        if token[0] != kind:
            raise SpecParseError(f"expected {what} at position {token[2]} in {self._text!r}, found {token[1]!r}")
        self._pos += 1
        return token[1]

    def _name(self) -> str:
        return self._advance("name", "a name").lower()

    def _number(self) -> float:
        value = float(self._advance("number", "a number"))
        if not math.isfinite(value):
            raise SpecParseError(f"non-finite number in {self._text!r}")
        return value

    def _expect(self, symbol: str) -> None:
        token = self._peek()
        if token is None or token[1] != symbol:
            where = "end of input" if token is None else f"position {token[2]}"
            raise SpecParseError(f"expected {symbol!r} at {where} in {self._text!r}")
        self._pos += 1

    def _accept(self, symbol: str) -> bool:
        token = self._peek()
        if token is not None and token[1] == symbol:
            self._pos += 1
            return True
        return False
