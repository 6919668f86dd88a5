"""Planar rigid motions: the group SE(2) and its Lie algebra se(2).

Algebra elements are ordered ``(x, y, theta)`` and act on the right (body
frame), so a body velocity ``xi`` held for unit time moves a pose ``g`` to
``g * exp(xi)``.  The bracket is the matrix commutator of the homogeneous
forms, which in components reads::

    [X, Y] = (X.y*Y.theta - Y.y*X.theta,  Y.x*X.theta - X.x*Y.theta,  0)

Besides the small value types, the module exposes array-level versions of
the maps (``*_array``) that work on stacks of shape ``(..., 3)``; the
integrators use these.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# below this |theta| the closed forms switch to their Taylor series
SMALL_ANGLE = 1e-6


def wrap_angle(theta):
    """Map angles to the principal interval (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    wrapped = theta - 2.0 * np.pi * np.ceil((theta - np.pi) / (2.0 * np.pi))
    return wrapped if wrapped.ndim else float(wrapped)


def _sinc_terms(theta):
    """Return sin(t)/t and (1 - cos(t))/t with a series guard near zero."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    t2 = theta * theta
    s = np.where(small, 1.0 - t2 / 6.0, np.sin(safe) / safe)
    c = np.where(small, theta / 2.0 - theta * t2 / 24.0, (1.0 - np.cos(safe)) / safe)
    return s, c


def exp_array(xi):
    """Exponential map on a stack of algebra vectors, returning pose vectors."""
    xi = np.asarray(xi, dtype=float)
    x, y, t = xi[..., 0], xi[..., 1], xi[..., 2]
    s, c = _sinc_terms(t)
    return np.stack([s * x - c * y, c * x + s * y, wrap_angle(t)], axis=-1)


def log_array(g):
    """Principal logarithm on a stack of pose vectors (theta in (-pi, pi])."""
    g = np.asarray(g, dtype=float)
    t = wrap_angle(g[..., 2])
    s, c = _sinc_terms(t)
    det = s * s + c * c
    x, y = g[..., 0], g[..., 1]
    return np.stack([(s * x + c * y) / det, (-c * x + s * y) / det, t], axis=-1)


def matrix_array(g):
    """Homogeneous 3x3 matrices for a stack of poses."""
    g = np.asarray(g, dtype=float)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    out = np.zeros(g.shape[:-1] + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 0, 2] = g[..., 0]
    out[..., 1, 2] = g[..., 1]
    out[..., 2, 2] = 1.0
    return out


def from_matrix_array(m):
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., 0, 2], m[..., 1, 2], np.arctan2(m[..., 1, 0], m[..., 0, 0])], axis=-1)


def hat_array(xi):
    """Matrix form of algebra vectors."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape[:-1] + (3, 3))
    out[..., 0, 1] = -xi[..., 2]
    out[..., 1, 0] = xi[..., 2]
    out[..., 0, 2] = xi[..., 0]
    out[..., 1, 2] = xi[..., 1]
    return out


def compose_array(g, h):
    """Pose product g * h, broadcasting over leading axes."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    return np.stack(
        [
            g[..., 0] + c * h[..., 0] - s * h[..., 1],
            g[..., 1] + s * h[..., 0] + c * h[..., 1],
            wrap_angle(g[..., 2] + h[..., 2]),
        ],
        axis=-1,
    )


def inverse_array(g):
    g = np.asarray(g, dtype=float)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    return np.stack(
        [
            -(c * g[..., 0] + s * g[..., 1]),
            s * g[..., 0] - c * g[..., 1],
            wrap_angle(-g[..., 2]),
        ],
        axis=-1,
    )


def _float_or_object(a):
    a = np.asarray(a)
    return a if a.dtype == object else a.astype(float)


def bracket_array(X, Y):
    # object arrays pass through so the formula can be checked symbolically
    X = _float_or_object(X)
    Y = _float_or_object(Y)
    return np.stack(
        [
            X[..., 1] * Y[..., 2] - Y[..., 1] * X[..., 2],
            Y[..., 0] * X[..., 2] - X[..., 0] * Y[..., 2],
            np.zeros(np.broadcast_shapes(X.shape[:-1], Y.shape[:-1])),
        ],
        axis=-1,
    )


def adjoint_array(g, xi):
    """Ad_g xi = g xi g^{-1} for poses g and algebra vectors xi."""
    g = np.asarray(g, dtype=float)
    xi = np.asarray(xi, dtype=float)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    w = xi[..., 2]
    return np.stack(
        [
            c * xi[..., 0] - s * xi[..., 1] + w * g[..., 1],
            s * xi[..., 0] + c * xi[..., 1] - w * g[..., 0],
            w,
        ],
        axis=-1,
    )


def product_array(poses):
    """Ordered product poses[0] * poses[1] * ... * poses[-1].

    Uses pairwise (tree) reduction over homogeneous matrices, which keeps the
    operation count logarithmic in depth and the rounding error growth mild.
    """
    mats = matrix_array(np.asarray(poses, dtype=float).reshape(-1, 3))
    if len(mats) == 0:
        return np.array([0.0, 0.0, 0.0])
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[:-1:2] @ mats[1:-1:2], tail])
        else:
            mats = mats[0::2] @ mats[1::2]
    return from_matrix_array(mats[0])


@dataclass(frozen=True)
class AlgebraElement:
    """Element of se(2): a body velocity or an integrated displacement exponent."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "theta"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"AlgebraElement.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, arr) -> "AlgebraElement":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[0], arr[1], arr[2])

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def matrix(self) -> np.ndarray:
        return hat_array(self.to_array())

    def norm(self, theta_weight: float = 1.0) -> float:
        return float(np.hypot(np.hypot(self.x, self.y), theta_weight * self.theta))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.x + other.x, self.y + other.y, self.theta + other.theta)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.x - other.x, self.y - other.y, self.theta - other.theta)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.x, -self.y, -self.theta)

    def __mul__(self, k: float) -> "AlgebraElement":
        return AlgebraElement(k * self.x, k * self.y, k * self.theta)

    __rmul__ = __mul__


@dataclass(frozen=True)
class GroupElement:
    """Element of SE(2): a planar pose, heading kept in (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "theta"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"GroupElement.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, arr) -> "GroupElement":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[0], arr[1], arr[2])

    @classmethod
    def from_matrix(cls, m) -> "GroupElement":
        return cls.from_array(from_matrix_array(m))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def matrix(self) -> np.ndarray:
        return matrix_array(self.to_array())

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)


def exp(xi: AlgebraElement) -> GroupElement:
    """Closed-form exponential; zero rotation gives a pure translation."""
    return GroupElement.from_array(exp_array(xi.to_array()))


def log(g: GroupElement) -> AlgebraElement:
    """Principal logarithm.

    The heading is taken on (-pi, pi], so a half turn maps to theta = +pi;
    this is the only branch returned.
    """
    return AlgebraElement.from_array(log_array(g.to_array()))


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    return GroupElement.from_array(compose_array(g.to_array(), h.to_array()))


def inverse(g: GroupElement) -> GroupElement:
    return GroupElement.from_array(inverse_array(g.to_array()))


def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    return AlgebraElement.from_array(bracket_array(X.to_array(), Y.to_array()))


def adjoint(g: GroupElement, xi: AlgebraElement) -> AlgebraElement:
    return AlgebraElement.from_array(adjoint_array(g.to_array(), xi.to_array()))


def bch_truncate(X: AlgebraElement, Y: AlgebraElement, order: int) -> AlgebraElement:
    """Truncated Baker-Campbell-Hausdorff series for log(exp(X) exp(Y)).

    order 1 keeps X + Y, order 2 adds [X, Y]/2, order 3 adds
    [X - Y, [X, Y]]/12.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"BCH order must be 1, 2 or 3, got {order!r}")
    Z = X + Y
    if order >= 2:
        XY = bracket(X, Y)
        Z = Z + 0.5 * XY
        if order == 3:
            Z = Z + bracket(X - Y, XY) * (1.0 / 12.0)
    return Z
