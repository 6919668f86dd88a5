"""Amplitude/phase sweeps over a gait family.

A sweep evaluates every estimator on each ``(diameter, phase)`` pair and
attaches the phase-independent worst-case bound for that diameter.  Records
are flat dictionaries whose keys are listed, in order, by :data:`FIELDS`.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import bounds, estimators
from .connection import DEFAULT_STEP, LocalConnection
from .errors import ConvergenceError, DomainError
from .gaits import CIRCLE, SQUARE, Gait
from .systems import (
    DiffdriveParams,
    PurcellParams,
    diffdrive_connection,
    purcell_connection,
    tabulated_connection,
)

SYSTEMS = ("diffdrive", "purcell", "table")

STATUS_OK = "ok"
STATUS_DOMAIN = "domain"
STATUS_NONCONVERGENCE = "nonconvergence"
STATUS_ERROR = "error"

_COMP = ("x", "y", "theta")
_ESTIMATES = ("ground_truth", "bvi", "cbvi", "third_order", "corrected_exponent", "third_order_arc", "segment_bch")
_ERRORS = ("bvi", "cbvi", "corrected", "corrected_arc", "segment_bch")

#: CSV column order.  Strings: ``config_hash``, ``status``, ``message``;
#: integers: ``index``, ``bound_degenerate``; everything else is a float.
FIELDS = (
    ("config_hash", "index", "diameter", "phase", "status", "message")
    + tuple(f"{name}_{c}" for name in _ESTIMATES for c in _COMP)
    + tuple(f"err_{name}" for name in _ERRORS)
    + ("error_angle",)
    + tuple(f"bound_cbvi_poly_{c}" for c in _COMP)
    + tuple(f"bound_{c}" for c in _COMP)
    + ("bound_max_error_angle", "bound_ratio", "bound_degenerate", "bound_message")
)
STRING_FIELDS = frozenset({"config_hash", "status", "message", "bound_message"})
INT_FIELDS = frozenset({"index", "bound_degenerate"})


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class SweepConfig:
    system: str = "purcell"
    family: str = CIRCLE
    center: tuple = (0.0, 0.0)
    diameters: tuple = (0.5,)
    phases: tuple = (0.0,)
    gt_tol: float = estimators.GT_TOL
    quad_tol: float = estimators.QUAD_TOL
    fd_step: float = DEFAULT_STEP
    hessian_step: float = bounds.HESSIAN_STEP
    theta_weight: float = 1.0
    third_scale: str = estimators.CHORD
    mean: str = "region"
    richardson: bool = True
    wheel_radius: float = 1.0
    half_width: float = 1.0
    link_length: float = 1.0
    drag_ratio: float = 2.0
    tangential_drag: float = 1.0
    table_path: str = ""
    output_dir: str = "gaitbch-out"
    figures: bool = False
    workers: int = 1

    def __post_init__(self):
        for name in ("center", "diameters", "phases"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    # fields that do not change any computed number
    _NOT_HASHED = ("output_dir", "workers", "figures")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def config_hash(self) -> str:
        """sha256 of the canonical JSON of every result-affecting field
        (and of the table file contents, for tabulated systems)."""
        data = {k: v for k, v in self.to_dict().items() if k not in self._NOT_HASHED}
        if self.system == "table" and self.table_path:
            try:
                data["table_sha256"] = hashlib.sha256(Path(self.table_path).read_bytes()).hexdigest()
            except OSError:
                data["table_sha256"] = None
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def connection(self) -> LocalConnection:
        if self.system == "diffdrive":
            return diffdrive_connection(DiffdriveParams(self.wheel_radius, self.half_width))
        if self.system == "purcell":
            return purcell_connection(PurcellParams(self.link_length, self.drag_ratio, self.tangential_drag))
        if self.system == "table":
            return tabulated_connection(self.table_path)
        raise ConfigError(f"unknown system {self.system!r}; choose from {', '.join(SYSTEMS)}")

    def gait(self, diameter: float, phase: float) -> Gait:
        return Gait(self.family, self.center, diameter, phase)

    def validate(self) -> LocalConnection:
        """Check the config and return its connection; raises ConfigError."""
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {', '.join(SYSTEMS)}")
        if self.family not in (CIRCLE, SQUARE):
            raise ConfigError(f"unknown gait family {self.family!r}")
        if len(self.center) != 2:
            raise ConfigError("center needs two coordinates")
        if not self.diameters:
            raise ConfigError("diameter list is empty")
        if not self.phases:
            raise ConfigError("phase list is empty")
        for name in ("gt_tol", "quad_tol", "fd_step", "hessian_step", "theta_weight"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if any(not d > 0 for d in self.diameters):
            raise ConfigError("diameters must be positive")
        if self.third_scale not in (estimators.CHORD, estimators.ARC):
            raise ConfigError(f"third_scale must be 'chord' or 'arc', got {self.third_scale!r}")
        if self.mean not in ("region", "center"):
            raise ConfigError(f"mean must be 'region' or 'center', got {self.mean!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.system == "table" and not self.table_path:
            raise ConfigError("table system needs table_path")
        try:
            conn = self.connection()
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        for d in self.diameters:
            try:
                self.gait(d, 0.0).check(conn)
            except DomainError as exc:
                raise ConfigError(f"diameter {d:g}: {exc}") from exc
        return conn


@dataclass(frozen=True)
class SweepDataset:
    config: SweepConfig
    config_hash: str
    records: tuple = field(default_factory=tuple)

    def by_diameter(self) -> dict:
        out = {}
        for rec in self.records:
            out.setdefault(rec["diameter"], []).append(rec)
        return out

    @property
    def nonconverged(self) -> int:
        return sum(rec["status"] == STATUS_NONCONVERGENCE for rec in self.records)


def _blank_record(config_hash, index, diameter, phase) -> dict:
    rec = {name: math.nan for name in FIELDS}
    rec.update(config_hash=config_hash, index=index, diameter=diameter, phase=phase,
               status=STATUS_OK, message="", bound_degenerate=0, bound_message="")
    return rec


def _bound_fields(conn, cfg: SweepConfig, diameter: float, model) -> dict:
    """Bound columns for one diameter; squares use the area-equivalent diameter."""
    ell = cfg.gait(diameter, 0.0).characteristic_diameter
    try:
        rep = bounds.third_order_bound(conn, cfg.center, ell, model=model)
    except (DomainError, ConvergenceError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return {"bound_message": f"{type(exc).__name__}: {exc}"}
    out = {f"bound_cbvi_poly_{c}": float(v) for c, v in zip(_COMP, rep.cbvi_poly.to_array())}
    out.update({f"bound_{c}": float(v) for c, v in zip(_COMP, rep.bound_vector.to_array())})
    out.update(bound_max_error_angle=rep.max_error_angle, bound_ratio=rep.ratio, bound_degenerate=int(rep.degenerate))
    return out


def _evaluate(conn, cfg: SweepConfig, config_hash: str, index: int, diameter: float, phase: float) -> dict:
    rec = _blank_record(config_hash, index, diameter, phase)
    try:
        report = estimators.evaluate_all(
            conn, cfg.gait(diameter, phase), cfg.gt_tol, cfg.quad_tol, cfg.fd_step,
            cfg.theta_weight, cfg.third_scale, cfg.mean, cfg.richardson,
        )
    except ConvergenceError as exc:
        rec.update(status=STATUS_NONCONVERGENCE, message=str(exc))
        return rec
    except DomainError as exc:
        rec.update(status=STATUS_DOMAIN, message=str(exc))
        return rec
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        rec.update(status=STATUS_ERROR, message=f"{type(exc).__name__}: {exc}")
        return rec
    rec.update(report.flat())
    try:
        rec["error_angle"] = bounds.error_angle(report.cbvi, report.third_order)
    except ValueError:
        pass  # net rotation or zero translation: angle undefined
    return rec


def run_sweep(config: SweepConfig) -> SweepDataset:
    """Evaluate the config's grid; failures are recorded per record, not raised.

    Records are ordered diameter-major, then by phase.
    """
    conn = config.validate()
    h = config.config_hash()
    try:
        model = bounds.taylor_da(conn, config.center, config.hessian_step, config.fd_step)
    except (DomainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        model, model_error = None, f"{type(exc).__name__}: {exc}"
    bound_cols = {}
    for d in config.diameters:
        bound_cols[d] = _bound_fields(conn, config, d, model) if model is not None else {"bound_message": model_error}

    grid = [(d, p) for d in config.diameters for p in config.phases]

    def work(item):
        k, (d, p) = item
        rec = _evaluate(conn, config, h, k, d, p)
        rec.update(bound_cols[d])
        return rec

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(work, enumerate(grid)))
    else:
        records = [work(item) for item in enumerate(grid)]
    return SweepDataset(config, h, tuple(records))


def even_phases(n: int) -> tuple:
    """``n`` evenly spaced starting phases on [0, 2 pi)."""
    if n < 1:
        raise ConfigError("number of phases must be at least 1")
    return tuple(2.0 * np.pi * k / n for k in range(n))
