"""Gait displacement: exact product integral and the BCH estimate hierarchy.

Estimates, from coarse to fine:

* ``bvi``         -- line integral of A around the gait (first order),
* ``cbvi``        -- surface integral of the total Lie bracket DA over the
                     enclosed region (second order),
* ``cbvi + third_order_term`` -- adds half the bracket of (alpha + beta) with
                     the cBVI, where alpha and beta are the mean connection
                     applied to the first two quarter segments,
* ``segment_bch_estimate``    -- BCH applied to the four segment integrals.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import se2
from .connection import DEFAULT_STEP, LocalConnection
from .errors import ConvergenceError
from .gaits import CIRCLE, Gait, path_integrals, quarter_segments
from .quadrature import disc_rule, refine, square_rule
from .se2 import AlgebraElement, GroupElement

GT_TOL = 1e-10
QUAD_TOL = 1e-9
MAX_STEPS = 2**20

CHORD = "chord"
ARC = "arc"


def _piece_counts(gait: Gait, n: int):
    """Breakpoint pieces of the gait and a step count for each, summing to about n."""
    bps = gait.breakpoints()
    counts = [max(1, int(np.ceil(n * (b - a) - 1e-9))) for a, b in zip(bps[:-1], bps[1:])]
    return bps, counts


def _step_exponents(conn: LocalConnection, gait: Gait, bps, counts) -> np.ndarray:
    mids, widths = [], []
    for a, b, k in zip(bps[:-1], bps[1:], counts):
        edges = np.linspace(a, b, k + 1)
        mids.append(0.5 * (edges[:-1] + edges[1:]))
        widths.append(np.diff(edges))
    t, dt = np.concatenate(mids), np.concatenate(widths)
    r, rdot = gait.sample_many(t)
    A = conn.evaluate_many(r)
    return np.einsum("nij,nj->ni", A, rdot) * dt[:, None]


def product_integral(conn: LocalConnection, gait: Gait, n: int) -> np.ndarray:
    """Midpoint-exponential product integral with about ``n`` steps (pose vector).

    Steps never straddle a velocity breakpoint (square corners).
    """
    bps, counts = _piece_counts(gait, n)
    return se2.product_array(se2.exp_array(_step_exponents(conn, gait, bps, counts)))


def ground_truth(
    conn: LocalConnection,
    gait: Gait,
    tol: float = GT_TOL,
    start: int = 64,
    max_steps: int = MAX_STEPS,
    richardson: bool = False,
) -> GroupElement:
    """Net displacement over one cycle, by step-doubled product integration.

    Each step is an exact group element, so the result is a valid pose at any
    resolution.  With ``richardson=True`` successive resolutions are combined
    in the algebra, ``Z_2n + (Z_2n - Z_n) / 3`` (the midpoint stepper is
    symmetric, so its error is even in the step), and convergence is judged
    on the extrapolated values.
    """
    gait.check(conn)
    bps, base = _piece_counts(gait, start)

    def level(j):
        return se2.product_array(se2.exp_array(_step_exponents(conn, gait, bps, [k << j for k in base])))

    def extrapolate(fine, coarse):
        Z2, Z1 = se2.log_array(fine), se2.log_array(coarse)
        return se2.exp_array(Z2 + (Z2 - Z1) / 3.0)

    j = 0
    raw = level(0)
    prev = None
    delta = np.inf
    while (sum(base) << (j + 1)) <= max_steps:
        j += 1
        fine = level(j)
        cur = extrapolate(fine, raw) if richardson else fine
        ref = raw if not richardson else prev
        raw = fine
        if ref is not None:
            diff = cur - ref
            diff[2] = se2.wrap_angle(diff[2])
            delta = float(np.max(np.abs(diff)))
            if delta < tol:
                return GroupElement.from_array(cur)
        prev = cur
    raise ConvergenceError(f"product integral did not converge within {max_steps} steps", delta)


def trajectory(conn: LocalConnection, gait: Gait, n_points: int = 64, steps_per_point: int = 32) -> np.ndarray:
    """Poses along one cycle at ``n_points + 1`` evenly spaced times, starting at identity."""
    gait.check(conn)
    poses = [np.zeros(3)]
    edges = np.linspace(0.0, 1.0, n_points + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        t = a + (b - a) * (np.arange(steps_per_point) + 0.5) / steps_per_point
        r, rdot = gait.sample_many(t)
        xi = np.einsum("nij,nj->ni", conn.evaluate_many(r), rdot) * ((b - a) / steps_per_point)
        poses.append(se2.compose_array(poses[-1], se2.product_array(se2.exp_array(xi))))
    return np.array(poses)


def bvi(conn: LocalConnection, gait: Gait, quad_tol: float = QUAD_TOL) -> AlgebraElement:
    """Body velocity integral: the line integral of A around the gait."""
    vals = path_integrals(conn, gait, [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)], quad_tol)
    return AlgebraElement.from_array(vals.sum(axis=0))


def _region_rule(gait: Gait):
    if gait.kind == CIRCLE:
        return lambda n: disc_rule(gait.center, gait.diameter / 2.0, n)
    return lambda n: square_rule(gait.center, gait.diameter / 2.0, n)


def cbvi(conn: LocalConnection, gait: Gait, quad_tol: float = QUAD_TOL, h: float = DEFAULT_STEP) -> AlgebraElement:
    """Surface integral of DA over the region enclosed by the gait (signed by orientation)."""
    gait.check(conn)
    rule = _region_rule(gait)

    def estimate(n):
        pts, w = rule(n)
        return w @ conn.total_lie_bracket_many(pts, h)

    val = refine(estimate, quad_tol, start=4, limit=256, what="cBVI surface integral")
    return AlgebraElement.from_array(gait.orientation * val)


def region_mean(conn: LocalConnection, gait: Gait, tol: float = 1e-10, mode: str = "region") -> np.ndarray:
    """Mean connection for the gait: area average over the enclosed region,
    or the value at the centre when ``mode == "center"``."""
    if mode == "center":
        return conn.evaluate(gait.center)
    if mode != "region":
        raise ValueError(f"mean mode must be 'region' or 'center', got {mode!r}")
    if gait.kind == CIRCLE:
        return conn.mean_connection(gait.center, gait.diameter, tol)
    return conn.mean_over_square(gait.center, gait.diameter, tol)


def alpha_plus_beta(conn: LocalConnection, gait: Gait, scale: str = CHORD, mean: str = "region", Abar=None) -> np.ndarray:
    """alpha + beta: the mean connection applied to the first two quarter segments.

    ``scale="chord"`` applies the mean connection to the segment chords
    r(1/4) - r(0) and r(1/2) - r(1/4), which is exact for a constant field.
    ``scale="arc"`` uses the unit chord directions times a quarter of the
    characteristic circle's circumference, (pi/4) * l.
    """
    if Abar is None:
        Abar = region_mean(conn, gait, mode=mean)
    r0, r1, r2 = (gait.sample(t)[0] for t in (0.0, 0.25, 0.5))
    if scale == CHORD:
        return Abar @ (r2 - r0)
    if scale == ARC:
        ua = (r1 - r0) / np.linalg.norm(r1 - r0)
        ub = (r2 - r1) / np.linalg.norm(r2 - r1)
        return np.pi / 4.0 * gait.characteristic_diameter * (Abar @ (ua + ub))
    raise ValueError(f"scale must be 'chord' or 'arc', got {scale!r}")


def third_order_term(
    conn: LocalConnection,
    gait: Gait,
    quad_tol: float = QUAD_TOL,
    h: float = DEFAULT_STEP,
    scale: str = CHORD,
    mean: str = "region",
    cbvi_value: AlgebraElement | None = None,
) -> AlgebraElement:
    """Phase-dependent third-order correction, 1/2 [alpha + beta, cBVI]."""
    C = cbvi(conn, gait, quad_tol, h) if cbvi_value is None else cbvi_value
    ab = alpha_plus_beta(conn, gait, scale, mean)
    return se2.bracket(AlgebraElement.from_array(ab), C) * 0.5


def segment_bch_estimate(conn: LocalConnection, gait: Gait, order: int = 2, quad_tol: float = QUAD_TOL) -> GroupElement:
    """exp of the BCH series of e^a e^b e^c e^d truncated at first or second order.

    Second order adds half of every ordered pairwise bracket:
    [a,b], [a,c], [a,d], [b,c], [b,d], [c,d].
    """
    if order not in (1, 2):
        raise ValueError(f"segment BCH order must be 1 or 2, got {order!r}")
    segs = quarter_segments(conn, gait, quad_tol).as_tuple()
    Z = segs[0] + segs[1] + segs[2] + segs[3]
    if order == 2:
        for i in range(4):
            for j in range(i + 1, 4):
                Z = Z + 0.5 * se2.bracket(segs[i], segs[j])
    return se2.exp(Z)


def exponent_error(g: GroupElement, estimate, theta_weight: float = 1.0) -> float:
    """Weighted Euclidean norm of log(g) - estimate on (x, y, theta).

    ``estimate`` may be an algebra element (an exponent) or a group element,
    which is mapped through the principal log first.
    """
    Z = se2.log(estimate) if isinstance(estimate, GroupElement) else estimate
    d = (se2.log(g) - Z).to_array()
    d[2] = theta_weight * se2.wrap_angle(d[2])
    return float(np.linalg.norm(d))


def pose_distance(g: GroupElement, h: GroupElement, theta_weight: float = 1.0) -> float:
    """Distance between two poses on (x, y, theta), heading scaled by ``theta_weight``."""
    dx, dy = g.x - h.x, g.y - h.y
    dth = se2.wrap_angle(g.theta - h.theta)
    return float(np.sqrt(dx * dx + dy * dy + (theta_weight * dth) ** 2))


@dataclass(frozen=True)
class EstimateReport:
    ground_truth: GroupElement
    bvi: AlgebraElement
    cbvi: AlgebraElement
    third_order: AlgebraElement
    corrected_exponent: AlgebraElement
    third_order_arc: AlgebraElement
    segment_bch: GroupElement
    errors: dict = field(default_factory=dict)

    def flat(self) -> dict:
        """Scalar fields keyed ``<name>_<component>`` plus ``err_<estimate>``."""
        out = {}
        for name in ("ground_truth", "bvi", "cbvi", "third_order", "corrected_exponent", "third_order_arc", "segment_bch"):
            for comp, value in asdict(getattr(self, name)).items():
                out[f"{name}_{comp}"] = value
        for name, value in self.errors.items():
            out[f"err_{name}"] = value
        return out


def evaluate_all(
    conn: LocalConnection,
    gait: Gait,
    gt_tol: float = GT_TOL,
    quad_tol: float = QUAD_TOL,
    h: float = DEFAULT_STEP,
    theta_weight: float = 1.0,
    third_scale: str = CHORD,
    mean: str = "region",
    richardson: bool = False,
) -> EstimateReport:
    """Run every estimator on one gait and bundle the results.

    Error norms compare exponents, ``|log(ground truth) - estimate|``, with the
    heading difference scaled by ``theta_weight``.
    """
    g = ground_truth(conn, gait, gt_tol, richardson=richardson)
    B = bvi(conn, gait, quad_tol)
    C = cbvi(conn, gait, quad_tol, h)
    Abar = region_mean(conn, gait, mode=mean)
    other = ARC if third_scale == CHORD else CHORD
    T = se2.bracket(AlgebraElement.from_array(alpha_plus_beta(conn, gait, third_scale, Abar=Abar)), C) * 0.5
    T_alt = se2.bracket(AlgebraElement.from_array(alpha_plus_beta(conn, gait, other, Abar=Abar)), C) * 0.5
    T_arc = T if third_scale == ARC else T_alt
    S = segment_bch_estimate(conn, gait, 2, quad_tol)
    corrected = C + T
    errors = {
        "bvi": exponent_error(g, B, theta_weight),
        "cbvi": exponent_error(g, C, theta_weight),
        "corrected": exponent_error(g, corrected, theta_weight),
        "corrected_arc": exponent_error(g, C + T_arc, theta_weight),
        "segment_bch": exponent_error(g, S, theta_weight),
    }
    return EstimateReport(g, B, C, T, corrected, T_arc, S, errors)
