"""Numerical verification lab for the fractional Toda system.

Submodules: ``constants`` (Gamma-function constants and thresholds),
``fraclap`` (fractional Laplacian and Riesz potential quadrature),
``extension`` (weighted harmonic extension), ``homog`` (explicit solution
families), ``stability`` (the stability form and Hardy-type tests),
``energy`` (monotonicity energy) and ``cli``.
"""

from .constants import DomainError, Params

__all__ = ["DomainError", "Params", "__version__"]
__version__ = "0.1.0"
