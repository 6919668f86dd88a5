"""Gait displacement estimates on SE(2): ground truth, BCH-based estimates and bounds."""

from .errors import ConvergenceError, DomainError, TableFormatError
from .se2 import AlgebraElement, GroupElement

__all__ = ["AlgebraElement", "GroupElement", "ConvergenceError", "DomainError", "TableFormatError"]
__version__ = "0.1.0"
