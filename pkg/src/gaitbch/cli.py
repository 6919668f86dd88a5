"""``gaitbch`` command-line interface.

Subcommands: ``sweep``, ``bound``, ``bch-demo``, ``ground-truth``, ``render``.

Settings come from, lowest precedence first: built-in defaults, a
``--config`` file of ``key = value`` lines (keys are :class:`SweepConfig`
field names, lists comma-separated, ``#`` comments), the
``GAITBCH_OUTPUT_DIR`` environment variable (output directory only), and
explicit command-line flags.

Exit codes: 0 success, 2 configuration error, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import bounds, estimators, export, render, se2
from .errors import ConvergenceError, DomainError
from .gaits import parse_gait
from .se2 import AlgebraElement
from .sweep import ConfigError, SweepConfig, even_phases, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
OUTPUT_ENV = "GAITBCH_OUTPUT_DIR"

_LIST_KEYS = ("center", "diameters", "phases")
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _coerce(key: str, text: str):
    types = {f.name: f.type for f in fields(SweepConfig)}
    if key == "n_phases":
        return int(text)
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    if key in _LIST_KEYS:
        return _floats(text)
    kind = types[key]
    try:
        if kind == "bool":
            low = text.strip().lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text.strip()


def read_config_file(path) -> dict:
    """Parse a ``key = value`` config file."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in text.split("=", 1))
        out[key.replace("-", "_")] = _coerce(key.replace("-", "_"), value)
    return out


def _add_system_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("system")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--system", choices=("diffdrive", "purcell", "table"))
    g.add_argument("--table", dest="table_path", help="tabulated connection file (system=table)")
    g.add_argument("--wheel-radius", type=float)
    g.add_argument("--half-width", type=float)
    g.add_argument("--link-length", type=float)
    g.add_argument("--drag-ratio", type=float)
    g.add_argument("--tangential-drag", type=float)
    g.add_argument("--center", type=_floats, help="gait centre, 'r1,r2'")
    g.add_argument("--fd-step", type=float, help="finite-difference step (default 1e-4)")
    g.add_argument("--hessian-step", type=float, help="Taylor-model step (default 1e-3)")
    g.add_argument("--output-dir", help=f"output directory (overrides ${OUTPUT_ENV})")


def _add_estimate_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("estimates")
    g.add_argument("--gt-tol", type=float, help="ground-truth tolerance (default 1e-10)")
    g.add_argument("--quad-tol", type=float, help="quadrature tolerance (default 1e-9)")
    g.add_argument("--theta-weight", type=float, help="heading weight in error norms (default 1)")
    g.add_argument("--third-scale", choices=(estimators.CHORD, estimators.ARC))
    g.add_argument("--mean", choices=("region", "center"), help="mean connection over the region or at its centre")
    g.add_argument("--richardson", action=argparse.BooleanOptionalAction, default=None,
                   help="Richardson-extrapolated ground truth (sweep default: on)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitbch", description="Gait displacement estimates, bounds and sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="amplitude/phase sweep with CSV, JSON and optional SVG output")
    _add_system_flags(sp)
    _add_estimate_flags(sp)
    sp.add_argument("--family", choices=("circle", "square"))
    sp.add_argument("--diameters", type=_floats, help="comma-separated diameters (square: side lengths)")
    sp.add_argument("--phases", type=_floats, help="comma-separated starting phases in radians")
    sp.add_argument("--n-phases", type=int, help="evenly spaced phases on [0, 2 pi)")
    sp.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--workers", type=int)

    bp = sub.add_parser("bound", help="worst-case third-order bound and largest admissible diameter")
    _add_system_flags(bp)
    bp.add_argument("--proportion", "-P", type=float, default=0.1)
    bp.add_argument("--norm", choices=("euclidean", "componentwise"), default="euclidean")
    bp.add_argument("--bound-mean", choices=("disc", "sup"), default="disc")
    bp.add_argument("--diameter", type=float, help="also report the bound at this diameter")

    dp = sub.add_parser("bch-demo", help="forward-then-turn against its BCH truncations")
    dp.add_argument("--x", type=_floats, default=(1.0, 0.0, 0.0), help="first algebra element 'x,y,theta'")
    dp.add_argument("--y", type=_floats, default=(0.0, 0.0, 1.0), help="second algebra element 'x,y,theta'")
    dp.add_argument("--output-dir")

    gp = sub.add_parser("ground-truth", help="ground truth and every estimate for one gait")
    _add_system_flags(gp)
    _add_estimate_flags(gp)
    gp.add_argument("--gait", required=True, help="'circle:cx,cy,l,phi' or 'square:cx,cy,s,phi'")

    rp = sub.add_parser("render", help="SVG figures from a JSON sweep export")
    rp.add_argument("--input", required=True, help="sweep JSON file")
    rp.add_argument("--output-dir")
    return parser


def resolve_config(args: argparse.Namespace, env=None) -> SweepConfig:
    """Merge defaults, config file, environment and flags into a SweepConfig."""
    env = os.environ if env is None else env
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    if env.get(OUTPUT_ENV):
        values["output_dir"] = env[OUTPUT_ENV]
    names = {f.name for f in fields(SweepConfig)} | {"n_phases"}
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    n = values.pop("n_phases", None)
    if n is not None and getattr(args, "phases", None) is None:
        values["phases"] = even_phases(n)
    return SweepConfig.from_dict(values)


def _fail(sub: str, msg: str) -> int:
    print(f"usage: gaitbch {sub} [options]  (see 'gaitbch {sub} --help')", file=sys.stderr)
    print(f"gaitbch {sub}: error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def _json_out(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True, default=float))


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    dataset = run_sweep(cfg)
    paths = export.export(dataset, cfg.output_dir)
    if cfg.figures:
        paths += render.render(dataset, cfg.output_dir)
    bad = [r for r in dataset.records if r["status"] != "ok"]
    print(f"{len(dataset.records)} records, {len(bad)} failed; config {dataset.config_hash[:12]}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_NONCONVERGENCE if dataset.nonconverged else EXIT_OK


def cmd_bound(args) -> int:
    cfg = resolve_config(args)
    conn = cfg.connection()
    res = bounds.max_diameter(conn, cfg.center, args.proportion, cfg.hessian_step, args.norm, mean=args.bound_mean)
    out = {
        "system": cfg.system,
        "center": list(cfg.center),
        "proportion": args.proportion,
        "norm": args.norm,
        "max_diameter": res.ell,
        "scan_limit": float(res.ell_max),
        "crossings": [float(c) for c in res.crossings],
        "degenerate": res.degenerate,
        "diagnostic": res.diagnostic,
    }
    ells = [ell for ell in (args.diameter, res.ell) if ell]
    for ell in ells:
        rep = bounds.third_order_bound(conn, cfg.center, ell, cfg.hessian_step, mean=args.bound_mean)
        out[f"bound_at_{ell!r}"] = {
            "cbvi_poly": rep.cbvi_poly.to_array().tolist(),
            "bound_vector": rep.bound_vector.to_array().tolist(),
            "max_error_angle": rep.max_error_angle,
            "ratio": rep.ratio,
            "degenerate": rep.degenerate,
        }
    _json_out(out)
    return EXIT_OK


def cmd_bch_demo(args) -> int:
    if len(args.x) != 3 or len(args.y) != 3:
        raise ConfigError("--x and --y need three components 'x,y,theta'")
    X, Y = AlgebraElement(*args.x), AlgebraElement(*args.y)
    out_dir = args.output_dir or os.environ.get(OUTPUT_ENV) or "gaitbch-out"
    path = render.render_bch_demo(X, Y, out_dir)
    truth = se2.log(se2.exp(X) @ se2.exp(Y))
    rows = {"ground truth": truth.to_array().tolist()}
    for order in (1, 2, 3):
        Z = se2.bch_truncate(X, Y, order)
        rows[f"order {order}"] = {"exponent": Z.to_array().tolist(), "error": (truth - Z).norm()}
    _json_out(rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_ground_truth(args) -> int:
    cfg = resolve_config(args)
    conn = cfg.connection()
    try:
        gait = parse_gait(args.gait)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = estimators.evaluate_all(
        conn, gait, cfg.gt_tol, cfg.quad_tol, cfg.fd_step, cfg.theta_weight, cfg.third_scale, cfg.mean,
        bool(args.richardson),
    )
    _json_out(report.flat())
    return EXIT_OK


def cmd_render(args) -> int:
    dataset = export.load_json(args.input)
    out_dir = args.output_dir or os.environ.get(OUTPUT_ENV) or str(Path(args.input).parent)
    for p in render.render(dataset, out_dir):
        print(f"wrote {p}")
    return EXIT_OK


COMMANDS = {
    "sweep": cmd_sweep,
    "bound": cmd_bound,
    "bch-demo": cmd_bch_demo,
    "ground-truth": cmd_ground_truth,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        return _fail(args.command, str(exc))
    except ConvergenceError as exc:
        print(f"gaitbch {args.command}: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (export.ExportError, ValueError) as exc:
        return _fail(args.command, str(exc))


if __name__ == "__main__":
    sys.exit(main())
