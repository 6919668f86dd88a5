"""Worst-case third-order bound and the characteristic-diameter heuristic.

The total Lie bracket is replaced near the gait centre by its quadratic
Taylor model, which integrates in closed form over a disc of diameter ``l``:

    cBVI_poly(l) = (pi l^2 / 4) DA(c) + (pi l^4 / 128) (d2DA/dr1^2 + d2DA/dr2^2)

(the linear terms integrate to zero).  The bound on the third-order term is
half the bracket upper bound of ``(pi/4) l |Abar| [1, 1]^T`` with the
polynomial cBVI, where the bracket bound takes absolute values of every
product in the component formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import se2
from .connection import DEFAULT_STEP, LocalConnection
from .quadrature import disc_rule
from .se2 import AlgebraElement

HESSIAN_STEP = 1e-3
DEFAULT_ELL_MAX = 2.0 * np.pi  # scan limit for fields without a validity box
ROTATION_TOL = 1e-8


class NetRotationError(ValueError):
    """The cBVI rotates the body, so the error-angle picture does not apply."""


class DegenerateError(ValueError):
    """The cBVI translation vanishes; ratios and angles are undefined."""


@dataclass(frozen=True)
class QuadraticField:
    """Degree-2 Taylor model of DA about ``center``.

    ``value`` is (3,), ``gradient`` (3, 2) and ``hessian`` (3, 2, 2); calling
    the model on offsets ``dr`` of shape (N, 2) returns (N, 3).
    """

    center: tuple
    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray

    def __call__(self, dr) -> np.ndarray:
        dr = np.atleast_2d(np.asarray(dr, dtype=float))
        lin = np.einsum("kj,nj->nk", self.gradient, dr)
        quad = 0.5 * np.einsum("kij,ni,nj->nk", self.hessian, dr, dr)
        return self.value + lin + quad


def taylor_da(conn: LocalConnection, center, h: float = HESSIAN_STEP, inner_h: float = DEFAULT_STEP) -> QuadraticField:
    """Central-difference Taylor coefficients of the total Lie bracket at ``center``."""
    c = np.asarray(center, dtype=float)
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    stencil = np.array([c, c + e1, c - e1, c + e2, c - e2, c + e1 + e2, c + e1 - e2, c - e1 + e2, c - e1 - e2])
    conn.check(stencil, margin=0.0, what="Taylor stencil")
    D = conn.total_lie_bracket_many(stencil, inner_h)
    d0, p1, m1, p2, m2, pp, pm, mp, mm = D
    grad = np.stack([(p1 - m1) / (2 * h), (p2 - m2) / (2 * h)], axis=-1)
    h11 = (p1 - 2 * d0 + m1) / h**2
    h22 = (p2 - 2 * d0 + m2) / h**2
    h12 = (pp - pm - mp + mm) / (4 * h**2)
    hess = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], axis=-2)
    return QuadraticField((float(c[0]), float(c[1])), d0, grad, hess)


def cbvi_polynomial(model: QuadraticField, ell: float) -> AlgebraElement:
    """Closed-form integral of the quadratic model over the disc of diameter ``ell``."""
    if not ell > 0:
        raise ValueError("diameter must be positive")
    trace = model.hessian[:, 0, 0] + model.hessian[:, 1, 1]
    return AlgebraElement.from_array(np.pi * ell**2 / 4.0 * model.value + np.pi * ell**4 / 128.0 * trace)


def bracket_upper_bound(X, Y) -> np.ndarray:
    """Componentwise bound on |[X, Y]| from the triangle inequality."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return np.array(
        [
            abs(X[1] * Y[2]) + abs(Y[1] * X[2]),
            abs(Y[0] * X[2]) + abs(X[0] * Y[2]),
            0.0,
        ]
    )


def abs_mean_connection(conn: LocalConnection, center, ell: float, mode: str = "disc", tol: float = 1e-10) -> np.ndarray:
    """|Abar| over the disc: entrywise |mean|, or the entrywise sup of |A| ("sup")."""
    if mode == "disc":
        return np.abs(conn.mean_connection(center, ell, tol))
    if mode == "sup":
        conn.check_disc(center, ell)
        pts, _ = disc_rule(np.asarray(center, dtype=float), ell / 2.0, 24)
        ang = np.linspace(0.0, 2.0 * np.pi, 192, endpoint=False)
        rim = np.asarray(center) + 0.5 * ell * np.stack([np.cos(ang), np.sin(ang)], -1)
        return np.abs(conn.evaluate_many(np.concatenate([pts, rim, [center]]))).max(axis=0)
    raise ValueError(f"mean mode must be 'disc' or 'sup', got {mode!r}")


@dataclass(frozen=True)
class BoundReport:
    diameter: float
    cbvi_poly: AlgebraElement
    bound_vector: AlgebraElement
    max_error_angle: float
    ratio: float
    degenerate: bool = False


def third_order_bound(
    conn: LocalConnection,
    center,
    ell: float,
    h: float = HESSIAN_STEP,
    model: QuadraticField | None = None,
    mean: str = "disc",
) -> BoundReport:
    """Largest third-order effect over all starting phases, for a circle of diameter ``ell``."""
    conn.check_disc(center, ell)
    if model is None:
        model = taylor_da(conn, center, h)
    P = cbvi_polynomial(model, ell)
    ab = np.pi / 4.0 * ell * abs_mean_connection(conn, center, ell, mean).sum(axis=1)
    bound = 0.5 * bracket_upper_bound(ab, P.to_array())
    trans = math.hypot(P.x, P.y)
    bnorm = math.hypot(bound[0], bound[1])
    if bnorm == 0.0:
        # nothing to bound (e.g. a zero field): ratio and angle are zero by convention
        return BoundReport(ell, P, AlgebraElement.from_array(bound), 0.0, 0.0, degenerate=trans == 0.0)
    if trans == 0.0:
        return BoundReport(ell, P, AlgebraElement.from_array(bound), math.nan, math.nan, degenerate=True)
    return BoundReport(ell, P, AlgebraElement.from_array(bound), math.atan(bnorm / trans), bnorm / trans)


@dataclass(frozen=True)
class DiameterResult:
    """Outcome of :func:`max_diameter`.

    ``crossings`` lists the scan intervals where the margin changes sign,
    refined by bisection.
    """

    ell: float
    ell_max: float
    crossings: list = field(default_factory=list)
    degenerate: bool = False
    diagnostic: str = ""


def bound_margin(conn, center, P: float, ell: float, model: QuadraticField, norm: str = "euclidean", mean: str = "disc") -> float:
    """P * cBVI_poly - bound, positive where the length criterion holds."""
    rep = third_order_bound(conn, center, ell, model=model, mean=mean)
    if rep.degenerate:
        raise DegenerateError(f"cBVI polynomial has no translation at diameter {ell:g}")
    c, b = rep.cbvi_poly.to_array(), rep.bound_vector.to_array()
    if norm == "euclidean":
        return P * math.hypot(c[0], c[1]) - math.hypot(b[0], b[1])
    if norm == "componentwise":
        return float(np.min(P * np.abs(c[:2]) - b[:2]))
    raise ValueError(f"norm must be 'euclidean' or 'componentwise', got {norm!r}")


def max_diameter(
    conn: LocalConnection,
    center,
    P: float,
    h: float = HESSIAN_STEP,
    norm: str = "euclidean",
    ell_max: float | None = None,
    n_scan: int = 256,
    mean: str = "disc",
    xtol: float = 1e-12,
) -> DiameterResult:
    """Largest gait diameter whose third-order bound stays within ``P`` of the cBVI.

    The margin is scanned on ``n_scan`` diameters in ``(0, ell_max]``; the
    first sign change from satisfied to violated is refined by bisection.
    """
    if not P > 0:
        raise ValueError("proportion P must be positive")
    if ell_max is None:
        ell_max = conn.max_disc_diameter(center)
        ell_max = DEFAULT_ELL_MAX if not np.isfinite(ell_max) else ell_max * (1.0 - 1e-9)
    model = taylor_da(conn, center, h)
    if not np.any(model.value[:2]):
        return DiameterResult(0.0, ell_max, [], True, "cBVI polynomial has no translation at the centre")

    def margin(ell):
        try:
            return bound_margin(conn, center, P, ell, model, norm, mean)
        except DegenerateError:
            return -np.inf

    grid = ell_max * np.arange(1, n_scan + 1) / n_scan
    values = np.array([margin(ell) for ell in grid])
    ok = values >= 0

    crossings = []
    for k in range(len(grid) - 1):
        if ok[k] != ok[k + 1]:
            lo, hi = grid[k], grid[k + 1]
            good_lo = ok[k]
            while hi - lo > xtol * max(1.0, hi):
                mid = 0.5 * (lo + hi)
                if (margin(mid) >= 0) == good_lo:
                    lo = mid
                else:
                    hi = mid
            crossings.append(lo if good_lo else hi)

    if not ok[0]:
        return DiameterResult(0.0, ell_max, crossings, False, f"criterion fails already at l = {grid[0]:.4g}")
    if ok.all():
        return DiameterResult(float(ell_max), ell_max, crossings, False, "criterion holds on the whole scan range")
    return DiameterResult(float(crossings[0]), ell_max, crossings, False, f"{len(crossings)} sign change(s) found")


def error_angle(cbvi: AlgebraElement, third: AlgebraElement, rotation_tol: float = ROTATION_TOL) -> float:
    """Angle between the cBVI translation and its third-order-corrected version.

    Only meaningful when the cBVI has no net rotation, in which case the
    third-order term is orthogonal to it.
    """
    if abs(cbvi.theta) > rotation_tol:
        raise NetRotationError(
            f"cBVI rotation {cbvi.theta:.3e} exceeds {rotation_tol:g}; net-rotation gaits are not supported"
        )
    c = math.hypot(cbvi.x, cbvi.y)
    if c == 0.0:
        raise DegenerateError("cBVI translation is zero")
    return math.atan2(math.hypot(third.x, third.y), c)


def distance_to_arc(point, radius: float, direction: float, half_angle: float) -> float:
    """Euclidean distance from a planar point to the arc of the given radius
    spanning ``direction +- half_angle``."""
    p = np.asarray(point, dtype=float)[:2]
    off = se2.wrap_angle(math.atan2(p[1], p[0]) - direction)
    if abs(off) <= half_angle:
        return abs(float(np.hypot(*p)) - radius)
    ends = [radius * np.array([math.cos(direction + s * half_angle), math.sin(direction + s * half_angle)]) for s in (-1, 1)]
    return float(min(np.hypot(*(p - e)) for e in ends))
