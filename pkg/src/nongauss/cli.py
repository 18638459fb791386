"""Command-line front end: config handling, experiment commands, reports.

Subcommands: sum | channel | theorem1 | capacity.  Each reads an optional
YAML config, applies flag overrides, runs the corresponding pipeline and
writes CSV/JSON reports atomically.  Identical config and seed produce
byte-identical outputs.

Exit codes: 0 success, 2 configuration error, 3 numerical degradation
(grid too narrow or clipped mass above threshold), 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import (
    cmmse_identity_check,
    divergence_curve,
    immse_identity_check,
)
from .density import BUILTIN_LAWS, GridSpec, builtin_law
from .errors import (
    ConfigError,
    DegenerateDensityError,
    DegenerateDistributionError,
    GridTooNarrowError,
    NoDensityError,
    NonGaussError,
    NotStandardizedError,
    NumericalDegradationWarning,
)
from .theorem1 import (
    capacity_gap_report,
    monotonicity_check,
    sum_divergence_sequence,
    theorem1_sweep,
)
from .taylor import NOISE_FLOOR

_IMMSE_CHECK_SNRS = (0.1, 1.0, 4.0)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    family: str = "uniform"
    params: dict = field(default_factory=dict)
    standardize: bool = True
    grid_points: int | None = None
    grid_half_width: float | None = None
    snr_min: float = 1e-3
    snr_max: float = 1e2
    snr_points: int = 40
    q_values: tuple[float, ...] = (1.0, 4.0, 16.0, 64.0)
    n_max: int = 64
    tail_fraction: float = 0.4
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    seed: int = 1234

    def law(self):
        kwargs = dict(self.params)
        if self.family not in ("rademacher",):
            kwargs.setdefault("standardize", self.standardize)
        return builtin_law(self.family, **kwargs)

    def grid_spec(self) -> GridSpec | None:
        if self.grid_half_width is None:
            return None
        return GridSpec(half_width=self.grid_half_width,
                        points=self.grid_points or 2**14)

    def to_dict(self) -> dict:
        return {
            "distribution": {"family": self.family, "params": dict(self.params),
                             "standardize": self.standardize},
            "grid": {"points": self.grid_points,
                     "half_width": self.grid_half_width},
            "snr_grid": {"min": self.snr_min, "max": self.snr_max,
                         "points": self.snr_points},
            "Q": list(self.q_values),
            "n_max": self.n_max,
            "tail_fraction": self.tail_fraction,
            "output": {"directory": self.out_dir, "formats": list(self.formats)},
            "seed": self.seed,
        }


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _as_number(value, name: str, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"{name} must be a finite"
                          f"{' positive' if positive else ''} number, got {v}")
    return v


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if raw is None:
        return cfg
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _require_keys(raw, {"distribution", "grid", "snr_grid", "Q", "n_max",
                        "tail_fraction", "output", "seed"}, "top-level")
    dist = raw.get("distribution", {}) or {}
    _require_keys(dist, {"family", "params", "standardize"}, "distribution")
    if "family" in dist:
        cfg.family = str(dist["family"])
    params = dist.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("distribution.params must be a mapping")
    cfg.params = {str(k): (tuple(v) if isinstance(v, list) else v)
                  for k, v in params.items()}
    if "standardize" in dist:
        if not isinstance(dist["standardize"], bool):
            raise ConfigError("distribution.standardize must be a boolean")
        cfg.standardize = dist["standardize"]
    grid = raw.get("grid", {}) or {}
    _require_keys(grid, {"points", "half_width"}, "grid")
    if grid.get("points") is not None:
        cfg.grid_points = int(_as_number(grid["points"], "grid.points",
                                         positive=True))
    if grid.get("half_width") is not None:
        cfg.grid_half_width = _as_number(grid["half_width"],
                                         "grid.half_width", positive=True)
    snr = raw.get("snr_grid", {}) or {}
    _require_keys(snr, {"min", "max", "points"}, "snr_grid")
    if "min" in snr:
        cfg.snr_min = _as_number(snr["min"], "snr_grid.min", positive=True)
    if "max" in snr:
        cfg.snr_max = _as_number(snr["max"], "snr_grid.max", positive=True)
    if "points" in snr:
        cfg.snr_points = int(_as_number(snr["points"], "snr_grid.points",
                                        positive=True))
    if "Q" in raw:
        qs = raw["Q"]
        if not isinstance(qs, (list, tuple)) or not qs:
            raise ConfigError("Q must be a nonempty list of positive numbers")
        cfg.q_values = tuple(_as_number(v, "Q entry", positive=True) for v in qs)
    if "n_max" in raw:
        cfg.n_max = int(_as_number(raw["n_max"], "n_max", positive=True))
    if "tail_fraction" in raw:
        cfg.tail_fraction = _as_number(raw["tail_fraction"], "tail_fraction",
                                       positive=True)
    out = raw.get("output", {}) or {}
    _require_keys(out, {"directory", "formats"}, "output")
    if "directory" in out:
        cfg.out_dir = str(out["directory"])
    if "formats" in out:
        cfg.formats = tuple(str(f) for f in out["formats"])
    if "seed" in raw:
        cfg.seed = int(_as_number(raw["seed"], "seed"))
    return cfg


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.dist is not None:
        cfg.family = args.dist
    if args.n_max is not None:
        cfg.n_max = args.n_max
    if args.Q is not None:
        try:
            cfg.q_values = tuple(float(v) for v in args.Q.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --Q value {args.Q!r}") from exc
    if args.grid_n is not None:
        cfg.grid_points = args.grid_n
    if args.grid_l is not None:
        cfg.grid_half_width = args.grid_l
    if args.out is not None:
        cfg.out_dir = args.out
    if args.format is not None:
        cfg.formats = tuple(args.format.split(","))
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.family not in BUILTIN_LAWS:
        raise ConfigError(f"unknown distribution family {cfg.family!r}; "
                          f"choose from {sorted(BUILTIN_LAWS)}")
    if cfg.grid_points is not None and (
            cfg.grid_points < 256 or cfg.grid_points & (cfg.grid_points - 1)):
        raise ConfigError("grid.points must be a power of two >= 256")
    if cfg.grid_half_width is not None and cfg.grid_half_width <= 0:
        raise ConfigError("grid.half_width must be positive")
    if not 1 <= cfg.n_max <= 4096:
        raise ConfigError("n_max must lie in [1, 4096]")
    if not 0 < cfg.tail_fraction <= 1:
        raise ConfigError("tail_fraction must lie in (0, 1]")
    if cfg.snr_min >= cfg.snr_max:
        raise ConfigError("snr_grid.min must be below snr_grid.max")
    if cfg.snr_points < 2:
        raise ConfigError("snr_grid.points must be at least 2")
    bad = set(cfg.formats) - {"csv", "json"}
    if bad or not cfg.formats:
        raise ConfigError(f"output formats must be csv/json, got {cfg.formats}")
    try:
        cfg.law()
    except (TypeError, DegenerateDistributionError, NonGaussError) as exc:
        raise ConfigError(f"bad distribution parameters: {exc}") from exc


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        if x == 0.0:
            x = 0.0  # normalize -0.0
        return f"{x:.9g}"
    return str(x)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: Path, payload: dict) -> None:
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _report_header(cfg: RunConfig) -> dict:
    return {"tool": "nongauss", "version": __version__, "seed": cfg.seed,
            "config": cfg.to_dict()}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_sum(cfg: RunConfig) -> list[Path]:
    law = cfg.law()
    seq = sum_divergence_sequence(law, cfg.n_max, points=cfg.grid_points)
    out = Path(cfg.out_dir)
    written = []
    if "csv" in cfg.formats:
        rows = [[n, seq[n], int(seq[n] < NOISE_FLOOR)] for n in sorted(seq)]
        p = out / f"{cfg.family}_sum.csv"
        write_csv(p, ["n", "D_nats", "noise_flag"], rows)
        written.append(p)
    if "json" in cfg.formats:
        payload = _report_header(cfg)
        payload.update({"law": cfg.family,
                        "monotonicity": monotonicity_check(seq),
                        "n": sorted(seq),
                        "D_nats": [seq[n] for n in sorted(seq)]})
        p = out / f"{cfg.family}_sum.json"
        write_json(p, payload)
        written.append(p)
    return written


def cmd_channel(cfg: RunConfig) -> list[Path]:
    law = cfg.law()
    q_grid = np.concatenate([[0.0], np.geomspace(cfg.snr_min, cfg.snr_max,
                                                 cfg.snr_points)])
    curve = divergence_curve(law, q_grid)
    out = Path(cfg.out_dir)
    written = []
    if "csv" in cfg.formats:
        rows = [[float(q), float(mx), float(mg), float(d)]
                for q, mx, mg, d in zip(curve.q, curve.mmse_x,
                                        curve.mmse_gaussian, curve.divergence)]
        p = out / f"{cfg.family}_channel.csv"
        write_csv(p, ["q", "mmse_x", "mmse_gaussian", "D_nats"], rows)
        written.append(p)
    if "json" in cfg.formats:
        checks = {"immse": [], "cmmse": []}
        for q in _IMMSE_CHECK_SNRS:
            r = immse_identity_check(law, q)
            checks["immse"].append({"q": r.q, "lhs": r.lhs, "rhs": r.rhs,
                                    "residual": r.residual, "step": r.step,
                                    "passed": r.passed})
        for Q in cfg.q_values:
            r = cmmse_identity_check(law, Q)
            checks["cmmse"].append({"Q": r.q, "lhs": r.lhs, "rhs": r.rhs,
                                    "residual": r.residual,
                                    "passed": r.passed})
        payload = _report_header(cfg)
        payload.update({"law": cfg.family, "identity_checks": checks})
        p = out / f"{cfg.family}_channel.json"
        write_json(p, payload)
        written.append(p)
    return written


def cmd_theorem1(cfg: RunConfig) -> list[Path]:
    law = cfg.law()
    reports = theorem1_sweep(law, cfg.q_values, cfg.n_max, cfg.tail_fraction)
    out = Path(cfg.out_dir)
    written = []
    if "csv" in cfg.formats:
        for rep in reports:
            rows = [[n, ds, dc, sl, dl, b, v]
                    for n, ds, dc, sl, dl, b, v in zip(
                        rep.n_values, rep.d_sum, rep.d_channel, rep.scaled_lhs,
                        rep.delta, rep.bound, rep.bound_verdicts)]
            p = out / f"{cfg.family}_theorem1_Q{rep.Q:g}.csv"
            write_csv(p, ["n", "D_sum", "D_channel", "scaled_lhs", "delta",
                          "bound", "verdict"], rows)
            written.append(p)
    if "json" in cfg.formats:
        payload = _report_header(cfg)
        payload.update({
            "law": cfg.family,
            "reports": [rep.to_dict() for rep in reports],
            "q_sweep": [{"Q": rep.Q, "empirical_n": rep.empirical_n,
                         "bound_constant": 0.5 * rep.d2_ratio.value * rep.Q**2,
                         "bound_verdict": rep.verdicts["bound"]}
                        for rep in reports],
        })
        p = out / f"{cfg.family}_theorem1.json"
        write_json(p, payload)
        written.append(p)
    return written


def cmd_capacity(cfg: RunConfig) -> list[Path]:
    law = cfg.law()
    report = capacity_gap_report(law, cfg.n_max, cfg.tail_fraction)
    out = Path(cfg.out_dir)
    written = []
    if "csv" in cfg.formats:
        slope = report.rate_slope if report.rate_slope is not None else ""
        rows = [[n, d, slope] for n, d in zip(report.n_values,
                                              report.excess_nats)]
        p = out / f"{cfg.family}_capacity.csv"
        write_csv(p, ["n", "capacity_excess_nats", "rate_slope"], rows)
        written.append(p)
    if "json" in cfg.formats:
        payload = _report_header(cfg)
        payload.update({"law": cfg.family,
                        "n": list(report.n_values),
                        "capacity_excess_nats": list(report.excess_nats),
                        "rate_slope": report.rate_slope,
                        "rate_stderr": report.rate_stderr})
        p = out / f"{cfg.family}_capacity.json"
        write_json(p, payload)
        written.append(p)
    return written


COMMANDS = {
    "sum": cmd_sum,
    "channel": cmd_channel,
    "theorem1": cmd_theorem1,
    "capacity": cmd_capacity,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nongauss",
        description="Non-Gaussianness decay and Gaussian-channel experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("sum", "divergence of normalized i.i.d. sums"),
                       ("channel", "divergence/MMSE curve and identity checks"),
                       ("theorem1", "full decrease-rate verification chain"),
                       ("capacity", "capacity-excess table for aggregated interference")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", type=str, default=None,
                         help="YAML config file; flags override its values")
        cmd.add_argument("--dist", type=str, default=None,
                         choices=sorted(BUILTIN_LAWS))
        cmd.add_argument("--n-max", type=int, default=None, dest="n_max")
        cmd.add_argument("--Q", type=str, default=None,
                         help="comma-separated positive SNR budgets")
        cmd.add_argument("--grid-n", type=int, default=None, dest="grid_n")
        cmd.add_argument("--grid-l", type=float, default=None, dest="grid_l")
        cmd.add_argument("--out", type=str, default=None)
        cmd.add_argument("--format", type=str, default=None,
                         help="comma-separated subset of csv,json")
        cmd.add_argument("--seed", type=int, default=None)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        validate_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NumericalDegradationWarning)
            written = COMMANDS[args.command](cfg)
        for path in written:
            print(path)
        degraded = [w for w in caught
                    if issubclass(w.category, NumericalDegradationWarning)]
        if degraded:
            for w in degraded:
                print(f"degraded: {w.message}", file=sys.stderr)
            return 3
        return 0
    except (NoDensityError, NotStandardizedError,
            DegenerateDistributionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GridTooNarrowError, DegenerateDensityError) as exc:
        print(f"numerical degradation: {exc}", file=sys.stderr)
        return 3
    except NonGaussError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    try:
        sys.exit(run())
    except SystemExit:
        raise
    except Exception as exc:  # internal errors map to exit 4
        print(f"internal error: {exc}", file=sys.stderr)
        sys.exit(4)
