"""Closed shape-space loops (circles and squares) and their quarter segments.

Time is normalised to one period, ``t`` in ``[0, 1)``.  A circle with phase
``phi`` starts at angle ``phi`` about its centre.  A square starts at the
midpoint of its right edge for ``phi = 0``; a nonzero phase advances the start
along the perimeter by ``phi / (2 pi)`` of a lap.  Orientation ``+1`` is
counterclockwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import LocalConnection
from .quadrature import composite_rule, refine
from .se2 import AlgebraElement

CIRCLE = "circle"
SQUARE = "square"

# square edges in counterclockwise order, starting after the top-right corner:
# (start corner in units of the half side, unit direction)
_EDGES = np.array(
    [
        [[1.0, 1.0], [-1.0, 0.0]],
        [[-1.0, 1.0], [0.0, -1.0]],
        [[-1.0, -1.0], [1.0, 0.0]],
        [[1.0, -1.0], [0.0, 1.0]],
    ]
)


@dataclass(frozen=True)
class Gait:
    kind: str
    center: tuple
    diameter: float
    phase: float = 0.0
    orientation: int = 1

    def __post_init__(self):
        if self.kind not in (CIRCLE, SQUARE):
            raise ValueError(f"unknown gait kind {self.kind!r}")
        if not self.diameter > 0:
            raise ValueError("gait diameter (square side) must be positive")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "diameter", float(self.diameter))
        object.__setattr__(self, "phase", float(np.mod(self.phase, 2.0 * np.pi)))

    # -- geometry ----------------------------------------------------------
    @property
    def area(self) -> float:
        if self.kind == CIRCLE:
            return np.pi * self.diameter**2 / 4.0
        return self.diameter**2

    @property
    def perimeter(self) -> float:
        if self.kind == CIRCLE:
            return np.pi * self.diameter
        return 4.0 * self.diameter

    @property
    def characteristic_diameter(self) -> float:
        """Diameter of the circle with the same area (the diameter itself for circles)."""
        if self.kind == CIRCLE:
            return self.diameter
        return 2.0 * self.diameter / np.sqrt(np.pi)

    def reversed(self) -> "Gait":
        return Gait(self.kind, self.center, self.diameter, self.phase, -self.orientation)

    def with_phase(self, phase: float) -> "Gait":
        return Gait(self.kind, self.center, self.diameter, phase, self.orientation)

    def check(self, conn: LocalConnection, margin: float = 0.0) -> None:
        """Raise DomainError unless the enclosed region (plus margin) fits the box."""
        if self.kind == CIRCLE:
            conn.check_disc(self.center, self.diameter, margin)
        else:
            conn.check_square(self.center, self.diameter, margin)

    # -- sampling ----------------------------------------------------------
    def sample_many(self, t):
        """Positions and velocities at times ``t`` (any shape); returns ``(r, rdot)``."""
        t = np.asarray(t, dtype=float)
        c = np.asarray(self.center)
        if self.kind == CIRCLE:
            R = self.diameter / 2.0
            ang = self.phase + self.orientation * 2.0 * np.pi * t
            r = c + R * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
            rdot = self.orientation * 2.0 * np.pi * R * np.stack([-np.sin(ang), np.cos(ang)], axis=-1)
            return r, rdot
        # square: u counts edges from the top-right corner, in [0, 4)
        u = np.mod(self.phase / (2.0 * np.pi) * 4.0 - 0.5 + self.orientation * 4.0 * t, 4.0)
        if self.orientation > 0:
            edge = np.mod(np.ceil(u) - 1, 4).astype(int)  # corners belong to the incoming edge
        else:
            edge = np.floor(u).astype(int) % 4
        frac = u - edge
        frac = np.where(frac < 0.0, frac + 4.0, frac)  # u == 0 is the end of the right edge
        half = self.diameter / 2.0
        start = _EDGES[edge, 0] * half
        direction = _EDGES[edge, 1]
        r = c + start + (frac * self.diameter)[..., None] * direction
        rdot = self.orientation * 4.0 * self.diameter * direction
        return r, rdot

    def sample(self, t: float):
        r, rdot = self.sample_many(np.asarray([t], dtype=float))
        return r[0], rdot[0]

    def breakpoints(self) -> np.ndarray:
        """Times in [0, 1] where the velocity may jump, plus the quarter marks."""
        marks = [0.0, 0.25, 0.5, 0.75, 1.0]
        if self.kind == SQUARE:
            u0 = self.phase / (2.0 * np.pi) * 4.0 - 0.5
            for k in range(-8, 9):
                t = (k - u0) / 4.0 * self.orientation
                if 0.0 < t < 1.0:
                    marks.append(t)
        return np.unique(np.round(marks, 15))

    def chord(self, t0: float, t1: float) -> np.ndarray:
        return self.sample(t1)[0] - self.sample(t0)[0]


def circle_gait(center, diameter: float, phase: float = 0.0, orientation: int = 1) -> Gait:
    return Gait(CIRCLE, tuple(center), diameter, phase, orientation)


def square_gait(center, side: float, phase: float = 0.0, orientation: int = 1) -> Gait:
    return Gait(SQUARE, tuple(center), side, phase, orientation)


def parse_gait(text: str) -> Gait:
    """Parse ``circle:cx,cy,l,phi`` or ``square:cx,cy,s,phi`` (radians)."""
    try:
        kind, rest = text.split(":", 1)
        cx, cy, size, phi = (float(v) for v in rest.split(","))
    except ValueError:
        raise ValueError(f"gait {text!r} is not 'circle:cx,cy,l,phi' or 'square:cx,cy,s,phi'") from None
    return Gait(kind.strip().lower(), (cx, cy), size, phi)


@dataclass(frozen=True)
class SegmentIntegrals:
    """Line integrals of A over the four quarters of a gait."""

    a: AlgebraElement
    b: AlgebraElement
    c: AlgebraElement
    d: AlgebraElement

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)

    def total(self) -> AlgebraElement:
        return self.a + self.b + self.c + self.d


def path_integrals(conn: LocalConnection, gait: Gait, intervals, tol: float = 1e-9) -> np.ndarray:
    """Integrals of A(r) rdot dt over each ``(t0, t1)`` interval, shape ``(k, 3)``.

    Composite Gauss-Legendre between velocity breakpoints, panel count doubled
    until every component changes by less than ``tol``.
    """
    gait.check(conn)
    bps = gait.breakpoints()
    pieces = []
    for t0, t1 in intervals:
        inner = bps[(bps > t0) & (bps < t1)]
        pieces.append(np.concatenate([[t0], inner, [t1]]))

    def estimate(panels):
        out = []
        for br in pieces:
            t, w = composite_rule(br, panels, n=8)
            r, rdot = gait.sample_many(t)
            # nodes are interior to each panel so square corners are never sampled
            A = conn.evaluate_many(r)
            out.append(np.einsum("n,nij,nj->i", w, A, rdot))
        return np.array(out)

    return refine(estimate, tol, start=1, limit=4096, what="line integral")


def quarter_segments(conn: LocalConnection, gait: Gait, quad_tol: float = 1e-9) -> SegmentIntegrals:
    """Segment integrals a, b, c, d over t in [0,1/4), [1/4,1/2), ... ."""
    vals = path_integrals(conn, gait, [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)], quad_tol)
    return SegmentIntegrals(*(AlgebraElement.from_array(v) for v in vals))
