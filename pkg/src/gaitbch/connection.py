"""Local connections over a two-dimensional shape space.

A local connection ``A(r)`` maps shape velocity to body velocity,
``xi = A(r) @ rdot``; at each shape it is a 3x2 matrix whose columns are the
body velocities produced by unit rates of the two shape variables.

Fields are evaluated in batches: the evaluator takes an ``(N, 2)`` array of
shapes and returns ``(N, 3, 2)``.  Derived quantities (Jacobian, exterior
derivative, total Lie bracket, region means) are methods on
:class:`LocalConnection`.

Tabulated file format
---------------------
Plain text, ``#`` starts a comment, blank lines are skipped::

    r1_min r1_max n1
    r2_min r2_max n2
    A11 A12 A21 A22 A31 A32      <- n1*n2 rows like this

Grid nodes are ``linspace(r1_min, r1_max, n1)`` by ``linspace(r2_min,
r2_max, n2)``; rows run over r2 fastest (row ``i*n2 + j`` holds the node
``(r1[i], r2[j])``).  Each row lists the 3x2 matrix row by row.  ``n1`` and
``n2`` must be integers >= 2 and ``min < max``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from . import se2
from .errors import DomainError, TableFormatError
from .quadrature import disc_rule, refine, square_rule

DEFAULT_STEP = 1e-4
OFFSET_STEP = 1e-6

Field = Callable[[np.ndarray], np.ndarray]


def _as_points(r) -> np.ndarray:
    pts = np.asarray(r, dtype=float)
    if pts.shape[-1] != 2:
        raise ValueError(f"shape points need 2 coordinates, got array of shape {pts.shape}")
    return pts.reshape(-1, 2)


class LocalConnection:
    """Immutable local connection field.

    Parameters
    ----------
    field
        Batched evaluator, ``(N, 2) -> (N, 3, 2)``.
    jacobian
        Optional batched analytic derivative, ``(N, 2) -> (N, 3, 2, 2)`` with
        the last axis indexing the shape coordinate differentiated against.
    box
        Optional validity box ``((r1_min, r1_max), (r2_min, r2_max))``.
    """

    def __init__(self, field: Field, jacobian: Field | None = None, box=None, name: str = "connection"):
        self._field = field
        self._jacobian = jacobian
        self.box = None if box is None else tuple(tuple(float(v) for v in b) for b in box)
        self.name = name

    def __repr__(self):
        return f"LocalConnection(name={self.name!r}, box={self.box})"

    @property
    def has_analytic_jacobian(self) -> bool:
        return self._jacobian is not None

    # -- domain ----------------------------------------------------------
    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        pts = _as_points(points)
        if self.box is None:
            return np.ones(len(pts), dtype=bool)
        (a1, b1), (a2, b2) = self.box
        return (
            (pts[:, 0] >= a1 + margin)
            & (pts[:, 0] <= b1 - margin)
            & (pts[:, 1] >= a2 + margin)
            & (pts[:, 1] <= b2 - margin)
        )

    def check(self, points, margin: float = 0.0, what: str = "shape") -> np.ndarray:
        pts = _as_points(points)
        inside = self.contains(pts, margin)
        if not inside.all():
            bad = pts[np.argmin(inside)]
            raise DomainError(f"{what} outside validity box {self.box} of {self.name}", bad)
        return pts

    def check_disc(self, center, diameter: float, margin: float = 0.0) -> None:
        center = np.asarray(center, dtype=float)
        if self.box is None:
            return
        r = 0.5 * diameter + margin
        (a1, b1), (a2, b2) = self.box
        if center[0] - r < a1 or center[0] + r > b1 or center[1] - r < a2 or center[1] + r > b2:
            raise DomainError(f"disc of diameter {diameter:g} leaves validity box {self.box}", center)

    def check_square(self, center, side: float, margin: float = 0.0) -> None:
        self.check_disc(center, side, margin)  # a square of side s spans the same box as a disc of diameter s

    def max_disc_diameter(self, center) -> float:
        """Largest diameter of a disc about ``center`` that fits the box (inf if unbounded)."""
        if self.box is None:
            return np.inf
        c = np.asarray(center, dtype=float)
        (a1, b1), (a2, b2) = self.box
        return 2.0 * min(c[0] - a1, b1 - c[0], c[1] - a2, b2 - c[1])

    # -- evaluation --------------------------------------------------------
    def evaluate_many(self, points) -> np.ndarray:
        pts = self.check(points)
        return np.asarray(self._field(pts), dtype=float).reshape(len(pts), 3, 2)

    def evaluate(self, r) -> np.ndarray:
        """The 3x2 connection matrix at one shape."""
        return self.evaluate_many(np.asarray(r, dtype=float)[None, :])[0]

    def jacobian_many(self, points, h: float = DEFAULT_STEP, richardson: bool = False) -> np.ndarray:
        """dA/dr_k at each point, shape ``(N, 3, 2, 2)`` (last axis is k)."""
        pts = _as_points(points)
        if self._jacobian is not None:
            self.check(pts)
            return np.asarray(self._jacobian(pts), dtype=float).reshape(len(pts), 3, 2, 2)
        out = np.empty((len(pts), 3, 2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            stencil = np.concatenate([pts + e, pts - e])
            if richardson:
                stencil = np.concatenate([stencil, pts + 2 * e, pts - 2 * e])
            self.check(stencil, what="finite-difference stencil")
            vals = self.evaluate_many(stencil).reshape(-1, len(pts), 3, 2)
            if richardson:
                out[..., k] = (8.0 * (vals[0] - vals[1]) - (vals[2] - vals[3])) / (12.0 * h)
            else:
                out[..., k] = (vals[0] - vals[1]) / (2.0 * h)
        return out

    def jacobian(self, r, h: float = DEFAULT_STEP, richardson: bool = False):
        """(dA/dr1, dA/dr2) at one shape, each a 3x2 matrix."""
        J = self.jacobian_many(np.asarray(r, dtype=float)[None, :], h, richardson)[0]
        return J[..., 0], J[..., 1]

    def exterior_derivative_many(self, points, h: float = DEFAULT_STEP, richardson: bool = False) -> np.ndarray:
        J = self.jacobian_many(points, h, richardson)
        # coefficient of dr1^dr2: dA2/dr1 - dA1/dr2
        return J[:, :, 1, 0] - J[:, :, 0, 1]

    def exterior_derivative(self, r, h: float = DEFAULT_STEP, richardson: bool = False) -> se2.AlgebraElement:
        return se2.AlgebraElement.from_array(
            self.exterior_derivative_many(np.asarray(r, dtype=float)[None, :], h, richardson)[0]
        )

    def total_lie_bracket_many(self, points, h: float = DEFAULT_STEP, richardson: bool = False) -> np.ndarray:
        """DA = dA + [A1, A2] at each point, shape ``(N, 3)``."""
        pts = _as_points(points)
        A = self.evaluate_many(pts)
        return self.exterior_derivative_many(pts, h, richardson) + se2.bracket_array(A[:, :, 0], A[:, :, 1])

    def total_lie_bracket(self, r, h: float = DEFAULT_STEP, richardson: bool = False) -> se2.AlgebraElement:
        return se2.AlgebraElement.from_array(
            self.total_lie_bracket_many(np.asarray(r, dtype=float)[None, :], h, richardson)[0]
        )

    # -- region means ------------------------------------------------------
    def mean_connection(self, center, diameter: float, tol: float = 1e-10) -> np.ndarray:
        """Area average of A over the disc of the given diameter."""
        center = np.asarray(center, dtype=float)
        if diameter <= 0:
            return self.evaluate(center)
        self.check_disc(center, diameter)
        area = np.pi * diameter**2 / 4.0

        def estimate(n):
            pts, w = disc_rule(center, diameter / 2.0, n)
            return np.tensordot(w, self.evaluate_many(pts), axes=1) / area

        return refine(estimate, tol, start=4, limit=256, what="disc mean of connection")

    def mean_over_square(self, center, side: float, tol: float = 1e-10) -> np.ndarray:
        """Area average of A over the axis-aligned square of the given side."""
        center = np.asarray(center, dtype=float)
        self.check_square(center, side)

        def estimate(n):
            pts, w = square_rule(center, side / 2.0, n)
            return np.tensordot(w, self.evaluate_many(pts), axes=1) / side**2

        return refine(estimate, tol, start=4, limit=256, what="square mean of connection")

    # -- frame change ------------------------------------------------------
    def with_frame_offset(self, offset: Field, offset_jacobian: Field | None = None, name: str | None = None):
        """Re-express body velocities in a frame attached at ``B(r)``.

        ``offset`` maps ``(N, 2)`` shapes to ``(N, 3)`` poses of the new frame in
        the current body frame.  The new columns are
        ``Ad_{B^-1} A_k + (B^-1 dB/dr_k)``.  ``offset_jacobian`` (optional)
        returns ``(N, 3, 2)`` pose derivatives; otherwise central differences
        with step ``OFFSET_STEP`` are used.
        """
        base = self

        def offset_derivative(pts):
            if offset_jacobian is not None:
                return np.asarray(offset_jacobian(pts), dtype=float).reshape(len(pts), 3, 2)
            out = np.empty((len(pts), 3, 2))
            for k in range(2):
                e = np.zeros(2)
                e[k] = OFFSET_STEP
                out[..., k] = (np.asarray(offset(pts + e)) - np.asarray(offset(pts - e))) / (2 * OFFSET_STEP)
            return out

        def field(pts):
            A = base._field(pts)
            B = np.asarray(offset(pts), dtype=float).reshape(len(pts), 3)
            dB = offset_derivative(pts)
            Binv = se2.inverse_array(B)
            c, s = np.cos(B[:, 2]), np.sin(B[:, 2])
            out = np.empty_like(A)
            for k in range(2):
                # body-frame derivative of the offset: (R(-phi) dp, dphi)
                dp = dB[:, :2, k]
                body = np.stack([c * dp[:, 0] + s * dp[:, 1], -s * dp[:, 0] + c * dp[:, 1], dB[:, 2, k]], axis=-1)
                out[:, :, k] = se2.adjoint_array(Binv, A[:, :, k]) + body
            return out

        return LocalConnection(field, None, self.box, name or f"{self.name}+offset")


def constant_connection(matrix, box=None, name: str = "constant") -> LocalConnection:
    M = np.array(matrix, dtype=float).reshape(3, 2)
    M.flags.writeable = False

    def field(pts):
        return np.broadcast_to(M, (len(pts), 3, 2)).copy()

    def jac(pts):
        return np.zeros((len(pts), 3, 2, 2))

    return LocalConnection(field, jac, box, name)


def zero_connection() -> LocalConnection:
    return constant_connection(np.zeros((3, 2)), name="zero")


# -- tabulated fields ------------------------------------------------------
class BilinearTable:
    """Bilinear interpolant of matrix samples on a rectilinear grid."""

    def __init__(self, r1, r2, values):
        self.r1 = np.asarray(r1, dtype=float)
        self.r2 = np.asarray(r2, dtype=float)
        self.values = np.asarray(values, dtype=float).reshape(len(self.r1), len(self.r2), 3, 2)
        for name, g in (("r1", self.r1), ("r2", self.r2)):
            if len(g) < 2 or np.any(np.diff(g) <= 0):
                raise TableFormatError(f"{name} grid must be strictly increasing with at least 2 nodes")

    @property
    def box(self):
        return ((self.r1[0], self.r1[-1]), (self.r2[0], self.r2[-1]))

    def _locate(self, pts):
        i = np.clip(np.searchsorted(self.r1, pts[:, 0], side="right") - 1, 0, len(self.r1) - 2)
        j = np.clip(np.searchsorted(self.r2, pts[:, 1], side="right") - 1, 0, len(self.r2) - 2)
        h1 = self.r1[i + 1] - self.r1[i]
        h2 = self.r2[j + 1] - self.r2[j]
        u = (pts[:, 0] - self.r1[i]) / h1
        v = (pts[:, 1] - self.r2[j]) / h2
        V = self.values
        return V[i, j], V[i + 1, j], V[i, j + 1], V[i + 1, j + 1], u[:, None, None], v[:, None, None], h1, h2

    def __call__(self, pts):
        v00, v10, v01, v11, u, v, _, _ = self._locate(pts)
        return (1 - u) * (1 - v) * v00 + u * (1 - v) * v10 + (1 - u) * v * v01 + u * v * v11

    def derivative(self, pts):
        """Derivative of the interpolant; piecewise constant across cell edges."""
        v00, v10, v01, v11, u, v, h1, h2 = self._locate(pts)
        d1 = ((1 - v) * (v10 - v00) + v * (v11 - v01)) / h1[:, None, None]
        d2 = ((1 - u) * (v01 - v00) + u * (v11 - v10)) / h2[:, None, None]
        return np.stack([d1, d2], axis=-1)

    def connection(self, name: str = "tabulated") -> LocalConnection:
        return LocalConnection(self, self.derivative, self.box, name)


def sample_table(conn: LocalConnection, r1_range, r2_range) -> BilinearTable:
    """Sample a connection on ``linspace`` grids given as ``(min, max, n)``."""
    r1 = np.linspace(*r1_range[:2], int(r1_range[2]))
    r2 = np.linspace(*r2_range[:2], int(r2_range[2]))
    R1, R2 = np.meshgrid(r1, r2, indexing="ij")
    vals = conn.evaluate_many(np.stack([R1, R2], axis=-1).reshape(-1, 2))
    return BilinearTable(r1, r2, vals)


def write_table(path, table: BilinearTable) -> None:
    path = Path(path)
    lines = [
        "# local connection table: A11 A12 A21 A22 A31 A32 per node, r2 fastest",
        f"{float(table.r1[0])!r} {float(table.r1[-1])!r} {len(table.r1)}",
        f"{float(table.r2[0])!r} {float(table.r2[-1])!r} {len(table.r2)}",
    ]
    for row in table.values.reshape(-1, 6):
        lines.append(" ".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _parse_axis(tokens, lineno):
    if len(tokens) != 3:
        raise TableFormatError(f"expected 'min max n', got {len(tokens)} fields", lineno)
    try:
        lo, hi = float(tokens[0]), float(tokens[1])
        n = int(tokens[2])
    except ValueError as exc:
        raise TableFormatError(f"bad axis header: {exc}", lineno) from None
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise TableFormatError("axis bounds must be finite", lineno)
    if n < 2 or hi <= lo:
        raise TableFormatError(f"axis grid not increasing (min={lo}, max={hi}, n={n})", lineno)
    return np.linspace(lo, hi, n)


def read_table(path) -> BilinearTable:
    """Parse a tabulated-connection file (see module docstring)."""
    content = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                content.append((lineno, text.split()))
    if len(content) < 2:
        raise TableFormatError("missing axis header lines", content[-1][0] if content else None)
    r1 = _parse_axis(content[0][1], content[0][0])
    r2 = _parse_axis(content[1][1], content[1][0])
    rows = content[2:]
    expected = len(r1) * len(r2)
    values = np.empty((expected, 6))
    for k, (lineno, tokens) in enumerate(rows):
        if k >= expected:
            raise TableFormatError(f"more than the {expected} data rows declared", lineno)
        if len(tokens) != 6:
            raise TableFormatError(f"expected 6 values, got {len(tokens)}", lineno)
        try:
            values[k] = [float(t) for t in tokens]
        except ValueError as exc:
            raise TableFormatError(str(exc), lineno) from None
        if not np.all(np.isfinite(values[k])):
            raise TableFormatError("non-finite entry", lineno)
    if len(rows) < expected:
        last = rows[-1][0] if rows else content[1][0]
        raise TableFormatError(f"expected {expected} data rows, found {len(rows)}", last)
    return BilinearTable(r1, r2, values)
