"""Explainable AutoML for tabular fatigue-strength regression."""

from ._accel import USE_NUMBA

__version__ = "0.1.0"

__all__ = ["USE_NUMBA", "__version__"]
