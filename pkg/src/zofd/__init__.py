"""Zeroth-order optimization with finite-difference surrogates.

The package provides random direction generators (structured and
unstructured), the forward finite-difference gradient surrogate, an
adaptive line-search optimizer, benchmark objectives, evaluation metrics,
a Monte-Carlo smoothing oracle and a config-driven experiment CLI.
"""

from .rng import RngStream, derive_stream

__version__ = "0.1.0"

__all__ = ["RngStream", "derive_stream", "__version__"]
