"""Seeded instance generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from stochorder.services.distributions import FiniteMixingMeasure, GammaConvolutionSpec


def random_mixing_measure(rng: np.random.Generator, low: float, high: float, max_atoms: int = 3) -> FiniteMixingMeasure:
    atoms = int(rng.integers(1, max_atoms + 1))
    params = rng.uniform(low, high, size=atoms)
    weights = rng.dirichlet(np.ones(atoms))
    weights = weights / weights.sum()
    return FiniteMixingMeasure(tuple(zip(params.tolist(), weights.tolist())))


def random_gamma_convolution(rng: np.random.Generator) -> GammaConvolutionSpec:
    n = int(rng.integers(2, 4))
    shapes = rng.uniform(0.3, 1.0, size=n)
    scales = np.exp(rng.uniform(np.log(0.5), np.log(4.0), size=n))
    return GammaConvolutionSpec(tuple(shapes.tolist()), tuple(scales.tolist()))


def sample_gamma_convolution(spec: GammaConvolutionSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    total = np.zeros(size)
    for shape, scale in zip(spec.shapes, spec.scales):
        total += rng.gamma(shape, scale, size=size)
    return total


def relative_gap(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))
