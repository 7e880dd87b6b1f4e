"""stochorder: stochastic-order deciding for exponential families, mixtures and convolutions."""

__version__ = "0.1.0"

__all__ = ["__version__", "create_app"]

from .app import create_app  # noqa: E402
