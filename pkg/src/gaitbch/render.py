"""Static SVG figures.

* ``shape_space.svg``    -- swept gaits in shape space, start points marked.
* ``position_space.svg`` -- trajectories, ground-truth endpoints, cBVI and
  third-order-corrected points, and one bound arc per diameter.
* ``bch_demo.svg``       -- forward-then-turn against its BCH truncations.

Output is plain text built from fixed-precision numbers, so identical input
gives byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import estimators, se2
from .errors import ConvergenceError, DomainError
from .se2 import AlgebraElement
from .sweep import STATUS_OK, SweepDataset

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
SIZE = 480
MARGIN = 36
MAX_TRAJECTORIES = 8


def _n(v: float) -> str:
    return f"{v:.3f}"


class Canvas:
    """Square SVG canvas mapping world coordinates (y up) into pixels."""

    def __init__(self, points, title: str, pad: float = 0.08):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        if len(pts) == 0:
            pts = np.zeros((1, 2))
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = max(float(np.max(hi - lo)), 1e-9) * (1.0 + 2.0 * pad)
        mid = 0.5 * (lo + hi)
        self.origin = mid - span / 2.0
        self.scale = (SIZE - 2 * MARGIN) / span
        self.items = [f'<text x="{SIZE / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']

    def xy(self, p):
        u = MARGIN + (p[0] - self.origin[0]) * self.scale
        v = SIZE - MARGIN - (p[1] - self.origin[1]) * self.scale
        return _n(u), _n(v)

    def polyline(self, pts, stroke, width=1.0, cls="", extra=""):
        coords = " ".join(",".join(self.xy(p)) for p in pts)
        c = f' class="{cls}"' if cls else ""
        self.items.append(
            f'<polyline{c} points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>'
        )

    def dot(self, p, fill, r=3.0, cls="", extra=""):
        x, y = self.xy(p)
        c = f' class="{cls}"' if cls else ""
        self.items.append(f'<circle{c} cx="{x}" cy="{y}" r="{r}" fill="{fill}"{extra}/>')

    def label(self, p, text, fill="#000", dx=5.0, dy=-5.0, cls="label"):
        x, y = self.xy(p)
        self.items.append(
            f'<text class="{cls}" x="{_n(float(x) + dx)}" y="{_n(float(y) + dy)}" font-size="11" fill="{fill}">{escape(text)}</text>'
        )

    def axes(self):
        o = self.xy((0.0, 0.0))
        self.items.insert(1, f'<line x1="{MARGIN}" y1="{o[1]}" x2="{SIZE - MARGIN}" y2="{o[1]}" stroke="#ccc"/>')
        self.items.insert(1, f'<line x1="{o[0]}" y1="{MARGIN}" x2="{o[0]}" y2="{SIZE - MARGIN}" stroke="#ccc"/>')

    def svg(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
            f'viewBox="0 0 {SIZE} {SIZE}">\n<rect width="100%" height="100%" fill="#fff"/>\n'
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


def _require(dataset: SweepDataset):
    if not dataset.records:
        raise ValueError("cannot render an empty dataset")


def shape_space_svg(dataset: SweepDataset) -> str:
    _require(dataset)
    cfg = dataset.config
    t = np.linspace(0.0, 1.0, 129)
    outlines, pts = [], []
    for k, d in enumerate(cfg.diameters):
        r, _ = cfg.gait(d, cfg.phases[0]).sample_many(t)
        outlines.append((k, d, r))
        pts.append(r)
    canvas = Canvas(np.concatenate(pts), f"shape space: {cfg.system} {cfg.family} gaits")
    canvas.axes()
    for k, d, r in outlines:
        color = PALETTE[k % len(PALETTE)]
        canvas.polyline(r, color, 1.5, cls="gait", extra=f' data-diameter="{d!r}"')
        for p in cfg.phases:
            canvas.dot(cfg.gait(d, p).sample(0.0)[0], color, 2.0, cls="start")
    return canvas.svg()


def _subsample(seq, n):
    if len(seq) <= n:
        return list(seq)
    idx = np.linspace(0, len(seq) - 1, n).round().astype(int)
    return [seq[i] for i in idx]


def _arc_points(radius, direction, half_angle, n=33):
    ang = direction + np.linspace(-half_angle, half_angle, n)
    return radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def position_space_svg(dataset: SweepDataset, max_trajectories: int = MAX_TRAJECTORIES) -> str:
    _require(dataset)
    cfg = dataset.config
    conn = cfg.connection()
    layers, pts = [], [np.zeros(2)]
    for k, (d, recs) in enumerate(dataset.by_diameter().items()):
        ok = [r for r in recs if r["status"] == STATUS_OK]
        if not ok:
            continue
        trajs = []
        for rec in _subsample(ok, max_trajectories):
            try:
                trajs.append(estimators.trajectory(conn, cfg.gait(d, rec["phase"]))[:, :2])
            except (DomainError, ConvergenceError, ArithmeticError):
                continue
        gt = np.array([[r["ground_truth_x"], r["ground_truth_y"]] for r in ok])
        cb = [se2.exp(AlgebraElement(r["cbvi_x"], r["cbvi_y"], r["cbvi_theta"])).to_array()[:2] for r in ok]
        co = [
            se2.exp(AlgebraElement(r["corrected_exponent_x"], r["corrected_exponent_y"], r["corrected_exponent_theta"])).to_array()[:2]
            for r in ok
        ]
        arc = None
        half = ok[0]["bound_max_error_angle"]
        radius = math.hypot(ok[0]["cbvi_x"], ok[0]["cbvi_y"])
        if math.isfinite(half) and radius > 0:
            arc = (_arc_points(radius, math.atan2(ok[0]["cbvi_y"], ok[0]["cbvi_x"]), half), half)
            pts.append(arc[0])
        layers.append((k, d, trajs, gt, cb, co, arc))
        pts.extend([gt, np.array(cb), np.array(co)] + trajs)
    canvas = Canvas(np.concatenate([np.atleast_2d(p) for p in pts]), f"position space: {cfg.system} displacements")
    canvas.axes()
    for k, d, trajs, gt, cb, co, arc in layers:
        color = PALETTE[k % len(PALETTE)]
        for tr in trajs:
            canvas.polyline(tr, "#e8a0a0", 0.8, cls="trajectory")
        if arc is not None:
            canvas.polyline(arc[0], color, 2.0, cls="bound-arc", extra=f' data-diameter="{d!r}" data-half-angle="{arc[1]!r}"')
        for p in cb:
            canvas.dot(p, color, 4.0, cls="cbvi")
        for p in co:
            canvas.dot(p, "none", 3.0, cls="corrected", extra=f' stroke="{color}"')
        for p in gt:
            canvas.dot(p, "#000", 1.8, cls="ground-truth")
        canvas.label(cb[0], f"l={d:g}", color)
    return canvas.svg()


def bch_demo_paths(X: AlgebraElement, Y: AlgebraElement, n: int = 64) -> dict:
    """Planar paths of exp(X) exp(Y) and of exp(tZ) for each BCH truncation Z."""
    t = np.linspace(0.0, 1.0, n + 1)
    first = se2.exp_array(np.outer(t, X.to_array()))
    gX = first[-1]
    second = se2.compose_array(np.broadcast_to(gX, (len(t), 3)), se2.exp_array(np.outer(t, Y.to_array())))
    out = {"ground truth": np.concatenate([first, second[1:]])}
    for order, name in ((1, "X+Y"), (2, "order 2"), (3, "order 3")):
        Z = se2.bch_truncate(X, Y, order).to_array()
        out[name] = se2.exp_array(np.outer(t, Z))
    return out


def bch_demo_svg(X: AlgebraElement, Y: AlgebraElement) -> str:
    paths = bch_demo_paths(X, Y)
    canvas = Canvas(np.concatenate([p[:, :2] for p in paths.values()]), "BCH truncations of exp(X) exp(Y)")
    canvas.axes()
    colors = {"ground truth": "#e377c2", "X+Y": "#1f77b4", "order 2": "#2ca02c", "order 3": "#ff7f0e"}
    for k, (name, path) in enumerate(paths.items()):
        cls = "endpoint " + name.replace(" ", "-").replace("+", "plus")
        canvas.polyline(path[:, :2], colors[name], 1.5, cls="path")
        canvas.dot(path[-1, :2], colors[name], 4.0, cls=cls)
        canvas.label(path[-1, :2], name, colors[name], dy=-6.0 - 12.0 * k)
    return canvas.svg()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def render(dataset: SweepDataset, out_dir) -> list:
    """Write shape- and position-space figures for a sweep; returns the paths."""
    _require(dataset)
    out_dir = Path(out_dir)
    return [
        _write(out_dir / "shape_space.svg", shape_space_svg(dataset)),
        _write(out_dir / "position_space.svg", position_space_svg(dataset)),
    ]


def render_bch_demo(X: AlgebraElement, Y: AlgebraElement, out_dir) -> Path:
    return _write(Path(out_dir) / "bch_demo.svg", bch_demo_svg(X, Y))
