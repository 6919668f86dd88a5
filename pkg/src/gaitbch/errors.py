"""Exception types shared across the package."""

from __future__ import annotations

import numpy as np


class DomainError(ValueError):
    """A shape point (or a stencil/region around it) left the validity box."""

    def __init__(self, message: str, point=None):
        self.point = None if point is None else np.asarray(point, dtype=float).copy()
        if point is not None:
            message = f"{message} (offending point: {np.array2string(self.point, precision=6)})"
        super().__init__(message)


class ConvergenceError(ArithmeticError):
    """An iterative refinement failed to reach its tolerance."""

    def __init__(self, message: str, achieved: float):
        self.achieved = float(achieved)
        super().__init__(f"{message} (last change {achieved:.3e})")


class TableFormatError(ValueError):
    """Malformed tabulated-connection file."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
