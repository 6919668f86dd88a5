"""Connections for the differential-drive car, the Purcell swimmer, and tables.

Purcell geometry: three equal links, body frame at the centre of the middle
link with x along it.  ``r1`` is the proximal (rear) joint angle, ``r2`` the
distal (front) joint angle; both are zero for the straight swimmer and
positive counterclockwise, so the rear link points along angle ``pi - r1``
and the front link along ``r2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import LocalConnection, constant_connection, read_table

PURCELL_JOINT_LIMIT = np.pi - 0.1
MAX_CONDITION = 1e10


@dataclass(frozen=True)
class DiffdriveParams:
    wheel_radius: float = 1.0
    half_width: float = 1.0

    def __post_init__(self):
        if not (self.wheel_radius > 0 and self.half_width > 0):
            raise ValueError("wheel_radius and half_width must be positive")


@dataclass(frozen=True)
class PurcellParams:
    link_length: float = 1.0
    drag_ratio: float = 2.0
    tangential_drag: float = 1.0

    def __post_init__(self):
        if not self.link_length > 0:
            raise ValueError("link_length must be positive")
        if not self.drag_ratio > 1:
            raise ValueError("drag_ratio must exceed 1")
        if not self.tangential_drag > 0:
            raise ValueError("tangential_drag must be positive")


def diffdrive_matrix(p: DiffdriveParams) -> np.ndarray:
    rho, w = p.wheel_radius, p.half_width
    return np.array([[rho / 2, rho / 2], [0.0, 0.0], [-rho / (2 * w), rho / (2 * w)]])


def diffdrive_connection(p: DiffdriveParams = DiffdriveParams()) -> LocalConnection:
    """Wheel-angle shape space: equal wheel rates drive forward, opposite rates turn."""
    return constant_connection(diffdrive_matrix(p), name="diffdrive")


def purcell_links(p: PurcellParams, pts: np.ndarray):
    """Per-link kinematics for a batch of shapes.

    Returns a list of ``(center, tangent, dcenter, dangle)`` with shapes
    ``(N, 2)``, ``(N, 2)``, ``(N, 2, 2)`` and ``(2,)``: link centre and unit
    tangent in the body frame, and their derivatives with respect to the two
    joint angles (centre velocity per unit joint rate, heading rate per unit
    joint rate).
    """
    L = p.link_length
    n = len(pts)
    zeros = np.zeros((n, 2))
    mid = (zeros, np.tile([1.0, 0.0], (n, 1)), np.zeros((n, 2, 2)), np.zeros(2))

    tf = pts[:, 1]
    ef = np.stack([np.cos(tf), np.sin(tf)], axis=-1)
    nf = np.stack([-ef[:, 1], ef[:, 0]], axis=-1)
    front_center = np.array([L / 2, 0.0]) + (L / 2) * ef
    dfront = np.zeros((n, 2, 2))
    dfront[:, :, 1] = (L / 2) * nf
    front = (front_center, ef, dfront, np.array([0.0, 1.0]))

    tb = -pts[:, 0]
    eb = np.stack([np.cos(tb), np.sin(tb)], axis=-1)
    nb = np.stack([-eb[:, 1], eb[:, 0]], axis=-1)
    rear_center = np.array([-L / 2, 0.0]) - (L / 2) * eb
    drear = np.zeros((n, 2, 2))
    drear[:, :, 0] = (L / 2) * nb  # d/dr1 of -(L/2) e(-r1)
    rear = (rear_center, eb, drear, np.array([-1.0, 0.0]))
    return [rear, mid, front]


def purcell_force_maps(p: PurcellParams, pts: np.ndarray):
    """Linear maps M (N,3,3) and N (N,3,2) with net wrench = M @ xi + N @ rdot."""
    L, ct = p.link_length, p.tangential_drag
    cn = ct * p.drag_ratio
    n = len(pts)
    M = np.zeros((n, 3, 3))
    Nm = np.zeros((n, 3, 2))
    spin = cn * L**3 / 12.0
    for center, e, dcenter, dangle in purcell_links(p, pts):
        nrm = np.stack([-e[:, 1], e[:, 0]], axis=-1)
        K = ct * e[:, :, None] * e[:, None, :] + cn * nrm[:, :, None] * nrm[:, None, :]
        # point velocity on the link centreline: G @ xi + dcenter @ rdot
        G = np.zeros((n, 2, 3))
        G[:, 0, 0] = 1.0
        G[:, 1, 1] = 1.0
        G[:, 0, 2] = -center[:, 1]
        G[:, 1, 2] = center[:, 0]
        GtK = np.swapaxes(G, 1, 2) @ K
        M -= L * GtK @ G
        Nm -= L * GtK @ dcenter
        M[:, 2, 2] -= spin
        Nm[:, 2, :] -= spin * dangle
    return M, Nm


def purcell_connection(p: PurcellParams = PurcellParams()) -> LocalConnection:
    """Resistive-force-theory connection of the three-link swimmer."""
    lim = PURCELL_JOINT_LIMIT

    def field(pts):
        M, Nm = purcell_force_maps(p, pts)
        Minv = np.linalg.inv(M)
        # 1-norm condition number; cheaper than the SVD-based estimate
        cond = np.abs(M).sum(axis=1).max(axis=1) * np.abs(Minv).sum(axis=1).max(axis=1)
        if np.any(cond > MAX_CONDITION):
            bad = pts[np.argmax(cond)]
            raise np.linalg.LinAlgError(f"force balance singular at shape {bad} (cond {cond.max():.2e})")
        return -Minv @ Nm

    return LocalConnection(field, None, ((-lim, lim), (-lim, lim)), name="purcell")


def tabulated_connection(path) -> LocalConnection:
    """Bilinear connection from a table file (format in :mod:`gaitbch.connection`)."""
    return read_table(path).connection(name=f"table:{path}")
