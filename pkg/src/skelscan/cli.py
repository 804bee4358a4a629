"""Command line: ingestion, configuration, the full pipeline and serialisation.

Exit codes: 0 success, 2 input/parse error, 3 numeric or stage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ConvergenceError, fit_pca, fit_regression_line
from .geometry import Dataset
from .gridscan import DensityTable, coverage_report, density_table, threshold_K
from .skeleton import (
    Skeleton,
    chain_by_rank,
    chain_greedy_from_table,
    simplex_strip,
    vertex_coverage,
)
from .synth import KINDS, SynthSpec, generate
from .tuning import TuneBounds, TuneResult, adapt_radius, adapt_threshold

__all__ = [
    "ParseError",
    "RunConfig",
    "RunReport",
    "StageError",
    "emit_report",
    "format_points_csv",
    "main",
    "parse_points_csv",
    "run_pipeline",
]

log = logging.getLogger("skelscan")

EXIT_OK, EXIT_INPUT, EXIT_STAGE = 0, 2, 3
TABLE_HEAD = 1000
FORMATS = ("json", "obj", "csv")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# points CSV
# ---------------------------------------------------------------------------

def parse_points_csv(text: str) -> Dataset:
    """Strict parse: every data row has the width of the first; ``#`` lines are comments."""
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ParseError(f"expected {width} fields, found {len(parts)}", lineno)
        row = []
        for col, field_ in enumerate(parts, start=1):
            try:
                v = float(field_)
            except ValueError:
                raise ParseError(f"not a number: {field_.strip()!r}", lineno, col) from None
            if not math.isfinite(v):
                raise ParseError(f"not a finite number: {field_.strip()!r}", lineno, col)
            row.append(v)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows")
    return Dataset(np.array(rows, dtype=np.float64), width)


def format_points_csv(points, header: str | None = None) -> str:
    lines = [] if header is None else [f"# {header}"]
    for row in np.asarray(points, dtype=np.float64):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# configuration and report
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    r: float = 1.0
    nu: int = 1
    radius_scale: float = 1.0
    gap_factor: float | None = 3.0
    s: int = 1
    chain_mode: str = "greedy"
    tune: TuneBounds | None = None
    tune_radius: bool = False
    dense_nodes: bool = False
    full_table: bool = False
    input: str | None = None
    output: str | None = None
    format: str = "json"

    def __post_init__(self) -> None:
        if self.gap_factor is not None and math.isinf(self.gap_factor):
            self.gap_factor = None
        if isinstance(self.tune, dict):
            self.tune = TuneBounds(**self.tune)
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError("r must be a positive finite number")
        if int(self.nu) != self.nu or self.nu < 0:
            raise ValueError("nu must be a nonnegative integer")
        if not self.radius_scale > 0:
            raise ValueError("radius_scale must be positive")
        if self.gap_factor is not None and not self.gap_factor > 0:
            raise ValueError("gap_factor must be positive")
        if int(self.s) != self.s or self.s < 1:
            raise ValueError("s must be an integer >= 1")
        if self.chain_mode not in ("rank", "greedy"):
            raise ValueError("chain_mode must be 'rank' or 'greedy'")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        self.nu = int(self.nu)
        self.s = int(self.s)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tune"] = None if self.tune is None else self.tune.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class RunReport:
    config: RunConfig
    n_points: int
    dim: int
    r: float
    nu: int
    K: int
    table: DensityTable
    skeleton: Skeleton
    vertex_coverage: float
    covered: int
    uncovered: int
    tuning: TuneResult | None = None
    timing: dict[str, float] = field(default_factory=dict)

    def to_dict(self, full_table: bool | None = None, timing: bool = False) -> dict:
        full = self.config.full_table if full_table is None else full_table
        head = self.table if full else self.table.head(TABLE_HEAD)
        sk = self.skeleton
        d = {
            "dataset": {"J": self.n_points, "N": self.dim},
            "config": self.config.to_dict(),
            "chosen": {"r": self.r, "nu": self.nu, "K": self.K,
                       "radius": self.table.radius},
            "table": {
                "length": len(self.table),
                "truncated": len(head) < len(self.table),
                "entries": [{"rank": i, "center": c.tolist(), "count": int(n)}
                            for i, (c, n) in enumerate(head)],
            },
            "skeleton": {
                "dim_s": sk.dim_s,
                "vertices": sk.vertices.tolist(),
                "ranks": sk.ranks.tolist(),
                "counts": sk.counts.tolist(),
                "component_ids": sk.component_ids.tolist(),
                "components": sk.components,
                "simplices": [list(t) for t in sk.simplices],
            },
            "metrics": {"vertex_coverage": self.vertex_coverage,
                        "covered": self.covered, "uncovered": self.uncovered},
            "tuning": None if self.tuning is None else self.tuning.to_dict(),
        }
        if timing:
            d["timing"] = self.timing
        return d


class _Stages:
    def __init__(self):
        self.timing: dict[str, float] = {}

    def run(self, name: str, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except (ValueError, ArithmeticError, ConvergenceError) as exc:
            raise StageError(name, str(exc)) from exc
        finally:
            self.timing[name] = time.perf_counter() - t0


def _chain(config: RunConfig, table: DensityTable, K: int) -> Skeleton:
    if config.chain_mode == "rank":
        chain = chain_by_rank(table, K)
    elif K == 0:
        raise ValueError("no centers above threshold")
    else:
        chain = chain_greedy_from_table(table, K, config.gap_factor)
    return simplex_strip(chain, config.s)


def run_pipeline(config: RunConfig, dataset: Dataset, *, n_jobs: int | None = None) -> RunReport:
    """scan -> (tune) -> threshold -> chain -> strip -> metrics."""
    st = _Stages()
    if len(dataset) == 0:
        raise StageError("scan", "empty dataset")
    r, tuning = config.r, None
    if config.tune is not None and config.tune_radius:
        tuning = st.run("tune", adapt_radius, dataset, r, config.nu, config.tune,
                        radius_scale=config.radius_scale, n_jobs=n_jobs)
        r, table = tuning.r, tuning.table
        nu = config.nu
    else:
        table = st.run("scan", density_table, dataset, r, config.radius_scale,
                       dense_nodes=config.dense_nodes, n_jobs=n_jobs)
        nu = config.nu
        if config.tune is not None:
            tuning = st.run("tune", adapt_threshold, table, max(nu, 1), config.tune)
            nu = tuning.nu
    K = st.run("threshold", threshold_K, table, nu)
    skel = st.run("skeleton", _chain, config, table, K)
    cov = st.run("metrics", vertex_coverage, dataset, skel, table.radius)
    covered, uncovered = st.run("metrics", coverage_report, dataset, table, K)
    return RunReport(config, len(dataset), dataset.dim, r, nu, K, table, skel,
                     cov, covered, uncovered, tuning, st.timing)


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n").encode()


def _obj_text(skel: Skeleton) -> str:
    out = [f"# skelscan skeleton: {skel.n_vertices} vertices, s = {skel.dim_s}"]
    out += ["v " + " ".join(format(float(x), ".17g") for x in v) for v in skel.vertices]
    tag = "l" if skel.dim_s == 1 else "f"
    out += [tag + " " + " ".join(str(i + 1) for i in t) for t in skel.simplices]
    return "\n".join(out) + "\n"


def _csv_text(skel: Skeleton) -> str:
    N = skel.vertices.shape[1]
    header = ",".join(["vertex", *(f"x{i}" for i in range(N)), "count", "component"])
    lines = [header]
    comp = skel.component_ids
    for i, v in enumerate(skel.vertices):
        coords = ",".join(format(float(x), ".17g") for x in v)
        lines.append(f"{i},{coords},{int(skel.counts[i])},{int(comp[i])}")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, fmt: str = "json", *, timing: bool = False) -> bytes:
    """Serialise a report; OBJ cannot hold s >= 3 simplices and falls back to JSON."""
    if fmt == "obj":
        if report.skeleton.dim_s >= 3:
            log.warning("OBJ has no %d-simplices; writing JSON instead", report.skeleton.dim_s)
            fmt = "json"
        else:
            return _obj_text(report.skeleton).encode()
    if fmt == "csv":
        return _csv_text(report.skeleton).encode()
    if fmt != "json":
        raise ValueError(f"unknown format {fmt!r}")
    return _json_bytes(report.to_dict(timing=timing))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _read_dataset(path: str | None) -> Dataset:
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_points_csv(text)


def _write(data: bytes, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _gap(value: str) -> float:
    # inf marks "unbounded"; RunConfig stores it as None
    return math.inf if value.lower() in ("none", "inf", "off") else float(value)


def _add_scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="points CSV (default: stdin)")
    p.add_argument("--r", type=float, help="grid step")
    p.add_argument("--radius-scale", type=float, help="counting radius in units of r")
    p.add_argument("--dense-nodes", action="store_true", default=None,
                   help="scan every grid node in the bounding box (N <= 3)")
    p.add_argument("--config", help="RunConfig JSON; flags override it")
    p.add_argument("-o", "--output", help="output path (default: stdout)")


def _add_tune_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tuning")
    g.add_argument("--nu0", type=int, help="starting threshold (enables threshold search)")
    g.add_argument("--r0", type=float, help="starting grid step (enables grid-step search)")
    g.add_argument("--k-min", type=int, default=5)
    g.add_argument("--k-max", type=int, default=100)
    g.add_argument("--max-steps", type=int, default=20)
    g.add_argument("--factor", type=float, help="multiplicative step (10 for nu, 2 for r)")


def _add_skeleton_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nu", type=int, help="count threshold")
    p.add_argument("--gap-factor", type=_gap, help="max greedy hop in units of r ('none' = unbounded)")
    p.add_argument("--s", type=int, help="simplex dimension")
    p.add_argument("--chain-mode", choices=("rank", "greedy"))
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--full-table", action="store_true", default=None,
                   help=f"keep the whole density table (default: top {TABLE_HEAD})")
    p.add_argument("--timing", action="store_true", help="add per-stage wall-clock times")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skelscan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="ranked density table")
    _add_scan_flags(p)
    p.add_argument("--nu", type=int, help="also report K(nu)")
    p.add_argument("--full-table", action="store_true", default=None)

    p = sub.add_parser("skeleton", help="skeleton only (scan + threshold + chain)")
    _add_scan_flags(p)
    _add_skeleton_flags(p)

    p = sub.add_parser("tune", help="search nu (or r) until K lands in [k-min, k-max]")
    _add_scan_flags(p)
    _add_tune_flags(p)
    p.add_argument("--nu", type=int, help="fixed threshold for the grid-step search")

    p = sub.add_parser("pipeline", help="full run with report")
    _add_scan_flags(p)
    _add_skeleton_flags(p)
    _add_tune_flags(p)

    p = sub.add_parser("baseline", help="least-squares line or PCA")
    bsub = p.add_subparsers(dest="method", required=True)
    b = bsub.add_parser("regression", help="y = a1*x + a2 on a two-column CSV")
    b.add_argument("input", nargs="?")
    b.add_argument("-o", "--output")
    b = bsub.add_parser("pca", help="centroid and top-k principal directions")
    b.add_argument("input", nargs="?")
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output")

    p = sub.add_parser("generate", help="synthetic dataset with planted structure")
    p.add_argument("--kind", choices=KINDS, default="line")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--j-structured", type=int, default=1000)
    p.add_argument("--j-background", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", type=float, nargs=2, default=(0.0, 10.0), metavar=("LO", "HI"))
    p.add_argument("--n-objects", type=int, default=1)
    p.add_argument("--separation", type=float, default=0.0)
    p.add_argument("--length", type=float)
    p.add_argument("--snap", type=float)
    p.add_argument("--n-truth", type=int, default=1001)
    p.add_argument("-o", "--output", help="points CSV (default: stdout)")
    p.add_argument("--truth", help="truth CSV (default: <output>.truth.csv when -o is given)")
    return parser


def _config_from_args(args) -> RunConfig:
    base = RunConfig.from_json(Path(args.config).read_text()) if args.config else RunConfig()
    d = base.to_dict()
    for name in ("r", "nu", "radius_scale", "gap_factor", "s", "chain_mode",
                 "dense_nodes", "full_table", "format"):
        v = getattr(args, name, None)
        if v is not None:
            d[name] = v
    d["input"] = args.input
    d["output"] = args.output
    nu0 = getattr(args, "nu0", None)
    r0 = getattr(args, "r0", None)
    if nu0 is not None or r0 is not None:
        d["tune_radius"] = r0 is not None
        default_factor = 2.0 if r0 is not None else 10.0
        d["tune"] = dict(k_min=args.k_min, k_max=args.k_max, max_steps=args.max_steps,
                         factor=args.factor or default_factor)
        if r0 is not None:
            d["r"] = r0
        if nu0 is not None:
            d["nu"] = nu0
    return RunConfig.from_dict(d)


def _cmd_scan(args) -> bytes:
    cfg = _config_from_args(args)
    data = _read_dataset(args.input)
    table = _Stages().run("scan", density_table, data, cfg.r, cfg.radius_scale,
                          dense_nodes=cfg.dense_nodes)
    head = table if cfg.full_table else table.head(TABLE_HEAD)
    out = {
        "r": table.r, "radius": table.radius, "length": len(table),
        "truncated": len(head) < len(table),
        "entries": [{"rank": i, "center": c.tolist(), "count": int(n)}
                    for i, (c, n) in enumerate(head)],
    }
    if args.nu is not None:
        out["nu"] = args.nu
        out["K"] = threshold_K(table, args.nu)
        cov, unc = coverage_report(data, table, out["K"])
        out["coverage"] = {"covered": cov, "uncovered": unc}
    return _json_bytes(out)


def _cmd_tune(args) -> bytes:
    if args.nu0 is None and args.r0 is None:
        raise ParseError("tune needs --nu0 or --r0")
    cfg = _config_from_args(args)
    data = _read_dataset(args.input)
    st = _Stages()
    if cfg.tune_radius:
        res = st.run("tune", adapt_radius, data, cfg.r, cfg.nu, cfg.tune,
                     radius_scale=cfg.radius_scale)
    else:
        table = st.run("scan", density_table, data, cfg.r, cfg.radius_scale,
                       dense_nodes=cfg.dense_nodes)
        res = st.run("tune", adapt_threshold, table, cfg.nu, cfg.tune)
    return _json_bytes(res.to_dict())


def _cmd_pipeline(args, skeleton_only: bool = False) -> bytes:
    cfg = _config_from_args(args)
    if skeleton_only and cfg.tune is not None:
        cfg.tune = None
    data = _read_dataset(args.input)
    report = run_pipeline(cfg, data)
    if skeleton_only and cfg.format == "json":
        return _json_bytes({"chosen": {"r": report.r, "nu": report.nu, "K": report.K},
                            "skeleton": report.to_dict()["skeleton"]})
    return emit_report(report, cfg.format, timing=args.timing)


def _cmd_baseline(args) -> bytes:
    data = _read_dataset(args.input)
    if args.method == "regression":
        if data.dim != 2:
            raise ParseError(f"regression needs 2 columns, found {data.dim}")
        line = _Stages().run("baseline", fit_regression_line, data.points)
        return _json_bytes(line.to_dict())
    frame = _Stages().run("baseline", fit_pca, data, args.k, seed=args.seed)
    return _json_bytes(frame.to_dict())


def _cmd_generate(args) -> bytes:
    spec = SynthSpec(kind=args.kind, dim=args.dim, j_structured=args.j_structured,
                     j_background=args.j_background, noise_sigma=args.noise_sigma,
                     seed=args.seed, box=tuple(args.box), n_objects=args.n_objects,
                     separation=args.separation, length=args.length, snap=args.snap,
                     n_truth=args.n_truth)
    data, truth = generate(spec)
    truth_path = args.truth
    if truth_path is None and args.output not in (None, "-"):
        truth_path = str(Path(args.output).with_suffix("")) + ".truth.csv"
    if truth_path:
        Path(truth_path).write_text(format_points_csv(truth, "truth " + json.dumps(spec.to_dict())))
    return format_points_csv(data.points, json.dumps(spec.to_dict(), sort_keys=True)).encode()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        if args.command == "scan":
            out = _cmd_scan(args)
        elif args.command == "tune":
            out = _cmd_tune(args)
        elif args.command == "pipeline":
            out = _cmd_pipeline(args)
        elif args.command == "skeleton":
            out = _cmd_pipeline(args, skeleton_only=True)
        elif args.command == "baseline":
            out = _cmd_baseline(args)
        else:
            out = _cmd_generate(args)
    except ParseError as exc:
        print(f"skelscan: error [input]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as exc:
        print(f"skelscan: error {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, OSError) as exc:
        print(f"skelscan: error [config]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        _write(out, args.output)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
