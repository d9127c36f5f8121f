"""Command-line front end: run sweeps and write tables or plot-ready data."""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import sys
from collections.abc import Sequence
from datetime import datetime, timezone

from qdcsim import __version__
from qdcsim.experiment import (
    ALPHA_GRID,
    DELTA0,
    DELTA1,
    EVENTS,
    PHI_POINTS,
    TOLERANCE,
    ExperimentConfig,
    Mode,
    SweepResult,
    SweepRow,
    compare_to_theory,
    phi_grid,
    run_all,
)
from qdcsim.components import DEFAULT_GAMMA
from qdcsim.theory import OracleParams, theory_fraction_d1

CSV_HEADER = ["phi", "alpha", "mode", "n0", "n1", "absorbed", "f1_sim", "f1_theory"]
DENSE_POINTS = 500

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_angle(text: str) -> float:
    """Radians, optionally written with ``pi``: ``0.3``, ``pi/8``, ``-7*pi/40``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite angle: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _gamma(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError("gamma must satisfy 0 <= gamma < 1")
    return value


def _tolerance(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0.0:
        raise argparse.ArgumentTypeError("tolerance must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qdcsim",
        description="Event-by-event simulation of the single-photon quantum delayed-choice experiment.",
    )
    which = p.add_mutually_exclusive_group()
    which.add_argument("--alpha", type=parse_angle, default=0.0, metavar="R",
                       help="polarization angle alpha in radians, e.g. pi/8 (default 0)")
    which.add_argument("--all-alphas", action="store_true",
                       help="sweep alpha = l*pi/8 for l = 0..7")
    p.add_argument("--mode", choices=["wheeler", "quantum", "both"], default=None,
                   help="polarizer absent (wheeler), present (quantum) or both; "
                        "default wheeler, or both with --all-alphas")
    p.add_argument("--phi-points", type=_positive_int, default=PHI_POINTS, metavar="K")
    p.add_argument("--events", type=_positive_int, default=EVENTS, metavar="N",
                   help="messengers per (alpha, phi) point")
    p.add_argument("--delta0", type=parse_angle, default=DELTA0, metavar="R")
    p.add_argument("--delta1", type=parse_angle, default=DELTA1, metavar="R")
    p.add_argument("--gamma", type=_gamma, default=DEFAULT_GAMMA, metavar="R",
                   help="learning parameter of the adaptive units")
    p.add_argument("--seed", type=_seed, default=0, metavar="U64")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1, metavar="K")
    p.add_argument("--output", default="-", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "plotdata", "json"], default="csv")
    p.add_argument("--check", action="store_true",
                   help="exit with status 1 unless every curve is within --tolerance of theory")
    p.add_argument("--tolerance", type=_tolerance, default=TOLERANCE, metavar="R")
    p.add_argument("--timestamp", action="store_true",
                   help="record the wall-clock time in the output metadata")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def parse_args(argv: Sequence[str] | None = None) -> tuple[list[ExperimentConfig], argparse.Namespace]:
    args = build_parser().parse_args(argv)
    if args.mode is None:
        args.mode = "both" if args.all_alphas else "wheeler"
    modes = [Mode.WHEELER, Mode.QUANTUM] if args.mode == "both" else [Mode(args.mode)]
    alphas = ALPHA_GRID if args.all_alphas else (args.alpha,)
    phis = tuple(phi_grid(args.phi_points))
    configs = [
        ExperimentConfig(
            alpha=alpha,
            phi_values=phis,
            delta0=args.delta0,
            delta1=args.delta1,
            gamma=args.gamma,
            events_per_point=args.events,
            seed=args.seed,
            mode=mode,
        )
        for alpha in alphas
        for mode in modes
    ]
    return configs, args


def _g(x: float) -> str:
    return format(x, ".10g")


def metadata(results: Sequence[SweepResult], timestamp: str | None = None) -> dict:
    c = results[0].config
    meta = {
        "tool": "qdcsim",
        "version": __version__,
        "seed": c.seed,
        "gamma": c.gamma,
        "events": c.events_per_point,
        "delta0": _g(c.delta0),
        "delta1": _g(c.delta1),
    }
    if timestamp is not None:
        meta["timestamp"] = timestamp
    return meta


def _rows(results: Sequence[SweepResult]) -> list[SweepRow]:
    rows = [row for r in results for row in r.rows]
    if not rows:
        raise ValueError("nothing to write: empty results")
    return rows


def emit_csv(results: Sequence[SweepResult], out, timestamp: str | None = None) -> None:
    rows = _rows(results)
    for key, value in metadata(results, timestamp).items():
        out.write(f"# {key}: {value}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_g(r.phi), _g(r.alpha), r.mode.value, r.n0, r.n1, r.absorbed,
                         _g(r.f1_sim), _g(r.f1_theory)])


def read_csv(text: str) -> tuple[dict[str, str], list[dict]]:
    """Parse a file written by :func:`emit_csv` back into metadata and rows."""
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line:
            body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        rows.append({
            "phi": float(rec["phi"]),
            "alpha": float(rec["alpha"]),
            "mode": rec["mode"],
            "n0": int(rec["n0"]),
            "n1": int(rec["n1"]),
            "absorbed": int(rec["absorbed"]),
            "f1_sim": float(rec["f1_sim"]),
            "f1_theory": float(rec["f1_theory"]),
        })
    return meta, rows


def emit_plotdata(results: Sequence[SweepResult], out, timestamp: str | None = None) -> None:
    """One block per (alpha, mode): simulated markers merged with a dense theory curve.

    Columns are ``phi f1_sim f1_theory``; dense-grid rows carry ``nan`` as
    f1_sim. Blocks are separated by two blank lines (gnuplot ``index``).
    """
    _rows(results)
    for key, value in metadata(results, timestamp).items():
        out.write(f"# {key}: {value}\n")
    dense = [2 * math.pi * k / (DENSE_POINTS - 1) for k in range(DENSE_POINTS)]
    for i, res in enumerate(results):
        c = res.config
        if i:
            out.write("\n\n")
        out.write(f"# block {i}: alpha={_g(c.alpha)} mode={c.mode.value}\n")
        out.write("# phi f1_sim f1_theory\n")
        points = [(r.phi, _g(r.f1_sim), r.f1_theory) for r in res.rows]
        for phi in dense:
            f = theory_fraction_d1(c.mode.value, OracleParams(c.alpha, phi, c.delta0, c.delta1))
            points.append((phi, "nan", f))
        points.sort(key=lambda p: p[0])
        for phi, sim, theory in points:
            out.write(f"{_g(phi)} {sim} {_g(theory)}\n")


def emit_json(results: Sequence[SweepResult], out, timestamp: str | None = None) -> None:
    rows = _rows(results)
    doc = {
        "metadata": metadata(results, timestamp),
        "rows": [
            {"phi": r.phi, "alpha": r.alpha, "mode": r.mode.value, "n0": r.n0, "n1": r.n1,
             "absorbed": r.absorbed, "lost": r.lost, "f1_sim": r.f1_sim, "f1_theory": r.f1_theory}
            for r in rows
        ],
    }
    json.dump(doc, out, indent=1)
    out.write("\n")


EMITTERS = {"csv": emit_csv, "plotdata": emit_plotdata, "json": emit_json}


def _timestamp(requested: bool) -> str | None:
    # SOURCE_DATE_EPOCH keeps stamped output reproducible
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return datetime.fromtimestamp(int(epoch), timezone.utc).isoformat()
    if requested:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")
    return None


def main(argv: Sequence[str] | None = None) -> int:
    configs, args = parse_args(argv)
    results = run_all(configs, jobs=args.jobs)
    stamp = _timestamp(args.timestamp)

    buf = io.StringIO()
    EMITTERS[args.format](results, buf, stamp)
    data = buf.getvalue().encode("utf-8")
    if args.output == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        try:
            with open(args.output, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            print(f"qdcsim: cannot write {args.output}: {exc}", file=sys.stderr)
            return 3

    if not args.check:
        return 0
    ok = True
    for res in results:
        dev = compare_to_theory(res)[res.config.mode]
        passed = dev.max_abs <= args.tolerance
        ok &= passed
        print(
            f"{'PASS' if passed else 'FAIL'} alpha={_g(res.config.alpha)} mode={res.config.mode.value} "
            f"max_abs_dev={dev.max_abs:.4f} rms_dev={dev.rms:.4f} tolerance={args.tolerance}",
            file=sys.stderr,
        )
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
