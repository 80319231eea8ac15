"""Verification toolkit for electrical networks, weighted arc diagrams,
disked-tree substitution dynamics and hyperbolic width formulas."""

__version__ = "0.1.0"

from .errors import RenormError  # noqa: F401
from .harmonic import hsum, interchange, shifted_lower_bound  # noqa: F401
