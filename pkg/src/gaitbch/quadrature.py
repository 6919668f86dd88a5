"""Gauss-Legendre rules on intervals, discs and squares, plus a doubling driver."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def interval_rule(a: float, b: float, n: int):
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_rule(breaks, panels: int, n: int = 8):
    """Composite rule over [breaks[0], breaks[-1]] with panels per piece."""
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        edges = np.linspace(a, b, panels + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            x, w = interval_rule(lo, hi, n)
            nodes.append(x)
            weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def disc_rule(center, radius: float, n: int):
    """Polar tensor rule on a disc: n radial by 2n angular nodes.

    Returned weights already contain the polar area element rho.
    """
    rho, wr = interval_rule(0.0, radius, n)
    ang, wa = interval_rule(0.0, 2.0 * np.pi, 2 * n)
    R, A = np.meshgrid(rho, ang, indexing="ij")
    W = np.outer(wr * rho, wa)
    pts = np.stack([center[0] + R * np.cos(A), center[1] + R * np.sin(A)], axis=-1)
    return pts.reshape(-1, 2), W.reshape(-1)


def square_rule(center, half_side: float, n: int):
    """Tensor rule on the axis-aligned square [c - h, c + h]^2."""
    x, wx = interval_rule(center[0] - half_side, center[0] + half_side, n)
    y, wy = interval_rule(center[1] - half_side, center[1] + half_side, n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return np.stack([X, Y], axis=-1).reshape(-1, 2), np.outer(wx, wy).reshape(-1)


def refine(estimate, tol: float, start: int = 8, limit: int = 512, what: str = "quadrature"):
    """Call ``estimate(n)`` for n = start, 2*start, ... until successive results
    agree to ``tol`` (max-abs).  Returns the finer result."""
    prev = np.asarray(estimate(start), dtype=float)
    n = start
    delta = np.inf
    while n < limit:
        n *= 2
        cur = np.asarray(estimate(n), dtype=float)
        delta = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if delta < tol:
            return cur
        prev = cur
    raise ConvergenceError(f"{what} did not reach tolerance {tol:.1e} with n={n}", delta)
