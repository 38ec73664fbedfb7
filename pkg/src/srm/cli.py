"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O.
Errors are written to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bogoliubov import build_transforms
from .dscm import dark_covariance
from .errors import ConfigError, DomainError, SRMError
from .liouville import (
    METHODS,
    build_space,
    default_theta_grid,
    scaling_sweep,
    steady_state,
)
from .metrology import squeezing_report
from .model import EnsembleConfig, TaskVector, config_from_task
from .potential import curvature, equilibrium_drive, potential_gradient, potential_value

COMMANDS = ("potential", "design", "dscm", "metrology", "simulate", "sweep")


@dataclass
class RunManifest:
    command: str
    config_path: str | None = None
    output_path: str | None = None
    seed: int = 0
    format: str = "json"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise DomainError(f"unknown format {self.format!r}")


class _IOFailure(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise DomainError(f"cannot parse number list {text!r}") from exc


def _parse_scan(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError("scan must be lo:hi:count")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise DomainError(f"cannot parse scan {text!r}") from exc
    if count < 1:
        raise DomainError("scan count must be positive")
    return np.linspace(lo, hi, count)


def _load_config(path: str | None) -> EnsembleConfig:
    if path is None:
        raise DomainError("--config is required for this command")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"config {path!r} is not valid JSON: {exc}") from exc
    return EnsembleConfig.from_dict(data)


def _task_from(opts, M: int) -> TaskVector:
    raw = opts.get("n")
    if raw is None:
        raise DomainError("--n is required for this command")
    n = TaskVector.normalized(_parse_floats(raw))
    if len(n) != M:
        raise DomainError(f"task vector has {len(n)} components, expected M={M}")
    return n


# ---- commands ---------------------------------------------------------------


def _cmd_potential(man, cfg):
    opts = man.options
    omega = opts.get("omega")
    if omega is None:
        omega = equilibrium_drive(cfg, cfg.theta)
    scan = _parse_scan(opts.get("theta_scan") or "-3.14159:3.14159:201")
    rows = [
        (t, potential_value(cfg, t, omega), potential_gradient(cfg, t, omega), curvature(cfg, t))
        for t in scan
    ]
    return _csv_text(("theta", "V", "dV_dtheta", "curvature"), rows)


def _cmd_design(man, _cfg):
    opts = man.options
    for key in ("n", "M", "N", "theta"):
        if opts.get(key) is None:
            raise DomainError(f"--{key} is required for design")
    n = TaskVector.normalized(_parse_floats(opts["n"]))
    cfg = config_from_task(n, int(opts["M"]), int(opts["N"]), float(opts["theta"]))
    out = cfg.to_dict()
    out["omega"] = equilibrium_drive(cfg, cfg.theta)
    out["curvature"] = curvature(cfg, cfg.theta)
    out["lambda_min"] = dark_covariance(cfg).lambda_min
    return _json_text(out)


def _cmd_dscm(man, cfg):
    opts = man.options
    if opts.get("dump_modes"):
        return _json_text(build_transforms(cfg).to_dict())
    if man.format == "csv":
        scan = _parse_scan(opts.get("theta_scan") or "0:2.2:200")
        rows = []
        for t in scan:
            c = cfg.with_theta(float(t))
            C = curvature(c, c.theta)
            lam = dark_covariance(c).lambda_min if C > 0 else float("nan")
            rows.append((t, C, lam))
        return _csv_text(("theta", "curvature", "lambda_min"), rows)
    return _json_text(dark_covariance(cfg).to_dict())


def _cmd_metrology(man, cfg):
    n = _task_from(man.options, cfg.M)
    out = squeezing_report(cfg, n).to_dict()
    out["n"] = n.n.tolist()
    return _json_text(out)


def _cmd_simulate(man, cfg):
    opts = man.options
    space = build_space(cfg)
    res = steady_state(
        space,
        cfg,
        omega=opts.get("omega"),
        method=opts.get("method") or "time-evolution",
        tol=opts.get("tol") or 1e-10,
        frame=opts.get("frame") or "mean-spin",
    )
    out = res.to_dict()
    out["curvature"] = curvature(cfg, cfg.theta)
    return _json_text(out)


def _cmd_sweep(man, cfg):
    opts = man.options
    kind = opts.get("kind") or "analytic"
    if kind == "analytic":
        n = _task_from(opts, cfg.M)
        scan = _parse_scan(opts.get("theta_scan") or "0:2.2:200")
        rows = []
        for t in scan:
            c = cfg.with_theta(float(t))
            C = curvature(c, c.theta)
            if C <= 0:
                rows.append((t, C, math.nan, math.nan, math.nan, math.nan))
                continue
            rep = squeezing_report(c, n)
            rows.append((t, C, dark_covariance(c).lambda_min, rep.msc, rep.gmsc, rep.chi))
        header = ("theta", "curvature", "lambda_min", "msc", "gmsc", "chi")
        return _csv_text(header, rows)
    if kind != "finite":
        raise DomainError(f"unknown sweep kind {kind!r}")
    Ns = [int(x) for x in _parse_floats(opts.get("Ns") or "8,16,32,64")]
    grid = default_theta_grid(cfg.M, points=int(opts.get("points") or 40))
    res = scaling_sweep(
        Ns,
        grid,
        cfg,
        method=opts.get("method") or "projection",
        frame=opts.get("frame") or "mean-spin",
    )
    rows = [(p.N, p.theta, p.curvature, p.lambda_min_N) for p in res.points]
    man.options["_footer"] = {
        "alpha": res.alpha,
        "Ns": list(res.Ns),
        "lambda_min": {str(k): v for k, v in res.lambda_min.items()},
        "onset_curvature": {str(k): v for k, v in res.onset.items()},
    }
    return _csv_text(("N", "theta", "curvature", "lambda_min_N"), rows)


_DISPATCH = {
    "potential": _cmd_potential,
    "design": _cmd_design,
    "dscm": _cmd_dscm,
    "metrology": _cmd_metrology,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path!r}: {exc}") from exc


def _report(kind: str, message: str, code: int, extra=None) -> None:
    payload = {"error": kind, "message": message, "exit_code": code}
    if extra:
        payload.update(extra)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def execute(man: RunManifest) -> str:
    """Run a manifest and return the primary output text."""
    cfg = None if man.command == "design" else _load_config(man.config_path)
    text = _DISPATCH[man.command](man, cfg)
    if man.output_path is None:
        sys.stdout.write(text)
        return text
    _write(man.output_path, text)
    meta = {
        "version": __version__,
        "command": man.command,
        "config_hash": cfg.digest() if cfg is not None else None,
        "seed": man.seed,
        "format": man.format,
    }
    _write(man.output_path + ".meta.json", _json_text(meta))
    footer = man.options.pop("_footer", None)
    if footer is not None:
        _write(man.output_path + ".alpha.json", _json_text(footer))
    return text


def run(man: RunManifest) -> int:
    try:
        execute(man)
    except _IOFailure as exc:
        _report("IOError", str(exc), 3)
        return 3
    except SRMError as exc:
        extra = {}
        residual = getattr(exc, "residual", None)
        if residual is not None:
            extra["residual"] = float(residual)
        _report(type(exc).__name__, str(exc), exc.exit_code, extra)
        return exc.exit_code
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON configuration file")
        p.add_argument("-o", "--output", help="output file (stdout if omitted)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("potential", help="potential landscape as CSV")
    common(p)
    p.add_argument("--omega", type=float)
    p.add_argument("--theta-scan", help="lo:hi:count")

    p = sub.add_parser("design", help="optimal configuration for a task vector")
    common(p, config=False)
    p.add_argument("--n", required=True, help="comma-separated task vector")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)

    p = sub.add_parser("dscm", help="dark-state covariance summary")
    common(p)
    p.add_argument("--csv", action="store_true", help="emit a lambda_min scan")
    p.add_argument("--theta-scan", help="lo:hi:count")
    p.add_argument("--dump-modes", action="store_true")

    p = sub.add_parser("metrology", help="squeezing report for a task vector")
    common(p)
    p.add_argument("--n", required=True)

    p = sub.add_parser("simulate", help="finite-N steady state")
    common(p)
    p.add_argument("--method", choices=METHODS, default="time-evolution")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--omega", type=float)
    p.add_argument("--frame", choices=("mean-spin", "nominal"), default="mean-spin")

    p = sub.add_parser("sweep", help="analytic or finite-size scans as CSV")
    common(p)
    p.add_argument("--kind", choices=("analytic", "finite"), default="analytic")
    p.add_argument("--n", help="task vector (analytic)")
    p.add_argument("--theta-scan", help="lo:hi:count (analytic)")
    p.add_argument("--Ns", help="comma-separated total particle numbers (finite)")
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--method", choices=METHODS, default="projection")
    p.add_argument("--frame", choices=("mean-spin", "nominal"), default="mean-spin")
    return parser


def manifest_from_args(args) -> RunManifest:
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "config", "output", "seed")}
    csv_cmds = {"potential", "sweep"}
    fmt = "csv" if args.command in csv_cmds or opts.get("csv") else "json"
    return RunManifest(
        command=args.command,
        config_path=getattr(args, "config", None),
        output_path=args.output,
        seed=args.seed,
        format=fmt,
        options=opts,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        man = manifest_from_args(args)
    except ConfigError as exc:
        _report(type(exc).__name__, str(exc), exc.exit_code)
        return exc.exit_code
    return run(man)


if __name__ == "__main__":
    sys.exit(main())
