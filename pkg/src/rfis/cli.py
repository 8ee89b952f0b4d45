"""Command-line entry point: ``rfis <subcommand> ...``.

Reports are JSON on stdout.  Exit status is 0 on success, 2 when the
configuration fails validation or a hypothesis check, and 1 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .attractor import attractor_convergence_check
from .dimension import theoretical_box_dimension
from .empirical import empirical_dimension, lemma_bounds, oscillation_profile, transfer_inequality_check
from .errors import HypothesisViolation, RfisError, UniformSumViolation
from .io import FORMATS, export_surface, json_safe, load_config, render_surface
from .partition import check_compatible, check_steady, compute_uniform_sums
from .surface import check_matchable, sample_surface

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 and list the valid flags."""

    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(report, out=None):
    out = sys.stdout if out is None else out
    out.write(json.dumps(json_safe(report), indent=2, sort_keys=True) + "\n")


def _levels(text):
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if not m or int(m.group(1)) > int(m.group(2)):
        raise argparse.ArgumentTypeError(f"expected a..b with a <= b, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def validation_report(cfg):
    """Every structural and hypothesis check, each with its own ``ok`` flag."""
    rfis = cfg.rfis
    cert = rfis.certificate
    match = check_matchable(rfis)
    steady = check_steady(rfis.s)
    comp = check_compatible(cfg.partition, rfis.maps)
    report = {
        "config": cfg.name,
        "homogeneity": {"ok": cert.ok, "K": cfg.K, "failures": cert.failures},
        "matchable": {"ok": match.ok, "max_discrepancy": match.max_discrepancy, "worst_seam": match.worst_seam},
        "steady": {"ok": steady.ok, "offending_cells": steady.offending},
        "compatible": {"ok": comp.ok, "violations": comp.violations, "intersections": comp.intersections},
    }
    try:
        G = compute_uniform_sums(rfis, cfg.partition)
        report["uniform_sums"] = {"ok": True, "G": G.G}
    except UniformSumViolation as exc:
        report["uniform_sums"] = {
            "ok": False,
            "error": "UniformSumViolation",
            "message": str(exc),
            "violations": exc.violations,
        }
    report["ok"] = all(report[k]["ok"] for k in ("homogeneity", "matchable", "steady", "compatible", "uniform_sums"))
    return report


def cmd_validate(args):
    report = validation_report(load_config(args.config))
    _emit(report)
    return EXIT_OK if report["ok"] else EXIT_INVALID


def cmd_sample(args):
    cfg = load_config(args.config)
    surf = sample_surface(cfg.rfis, args.level)
    if args.out is None:
        payload = render_surface(surf, args.format)
        if isinstance(payload, bytes):
            sys.stdout.buffer.write(payload)
        else:
            sys.stdout.write(payload)
        return EXIT_OK
    path = export_surface(surf, args.format, args.out)
    _emit({"level": args.level, "format": args.format, "out": str(path), "nodes": surf.values.size})
    return EXIT_OK


def _theory(cfg):
    return theoretical_box_dimension(cfg.rfis, cfg.partition).as_dict()


def cmd_dim(args):
    cfg = load_config(args.config)
    if args.method == "theory":
        _emit({"method": "theory", **_theory(cfg)})
        return EXIT_OK
    a, b = args.levels
    prof = oscillation_profile(cfg.rfis, range(a, b + 1), cfg.partition)
    slope = empirical_dimension(prof, min_level=args.min_level)
    out = {
        "method": "empirical",
        "levels": prof.levels,
        "oscillation": prof.total,
        "box_counts": prof.box_counts,
        "regression_levels": slope.levels,
        "dimension": slope.dimension,
        "ci95": slope.ci95,
        "box_slope": slope.box_slope,
        "box_ci95": slope.box_ci95,
        "lemma_bounds": [
            {"level": n, "floor_O_over_eps": lo, "box_count": cnt, "upper": hi} for n, lo, cnt, hi in lemma_bounds(prof)
        ],
    }
    try:
        theory = theoretical_box_dimension(cfg.rfis, cfg.partition)
        res = transfer_inequality_check(
            prof, theory.G, [(c.members, c.rho) for c in theory.components if not c.degenerate]
        )
        out["theory_dimension"] = theory.dimension
        out["residuals"] = {
            "levels": res.levels,
            "bound": res.bound,
            "trend_ok": res.trend_ok,
            "growth_liminf": {str(r + 1): v for r, v in res.growth.items()},
        }
    except HypothesisViolation as exc:
        out["theory_dimension"] = None
        out["theory_unavailable"] = str(exc)
    _emit(out)
    return EXIT_OK


def cmd_attractor(args):
    cfg = load_config(args.config)
    rep = attractor_convergence_check(cfg.rfis, args.level, args.steps, start=args.start, z_lift=args.z_lift)
    _emit(rep.as_dict())
    return EXIT_OK


def cmd_example(args):
    name = "paper-example-original" if args.original else "paper-example"
    cfg = load_config(name)
    report = {"validation": validation_report(cfg)}
    if report["validation"]["ok"]:
        report["dimension"] = _theory(cfg)
    _emit(report)
    return EXIT_OK if report["validation"]["ok"] else EXIT_INVALID


def build_parser():
    p = _Parser(prog="rfis", description="Bilinear recurrent fractal interpolation surfaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="run every structural and hypothesis check")
    v.add_argument("config", help="JSON config path or bundled fixture name")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("sample", help="sample the surface on a level grid and export it")
    s.add_argument("config")
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--format", choices=sorted(FORMATS), default="csv")
    s.add_argument("--out", help="output file (csv and obj go to stdout if omitted)")
    s.set_defaults(func=cmd_sample)

    d = sub.add_parser("dim", help="box dimension, from the transfer matrix or by regression")
    d.add_argument("config")
    d.add_argument("--method", choices=["theory", "empirical"], default="theory")
    d.add_argument("--levels", type=_levels, default=(5, 10), help="level range a..b for --method empirical")
    d.add_argument("--min-level", type=int, default=4, help="smallest level used in the regression")
    d.set_defaults(func=cmd_dim)

    a = sub.add_parser("attractor-check", help="iterate the set map toward the graph")
    a.add_argument("config")
    a.add_argument("--level", type=int, required=True, help="voxel level")
    a.add_argument("--steps", type=int, required=True)
    a.add_argument("--start", choices=["corners", "graph"], default="corners")
    a.add_argument("--z-lift", type=float, default=0.0, help="height of the corner start points")
    a.set_defaults(func=cmd_attractor)

    e = sub.add_parser("example-paper", help="validate the bundled example and print its dimension")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--corrected", action="store_true", help="corrected scaling matrix (default)")
    g.add_argument("--original", action="store_true", help="scaling matrix as printed, which fails uniform sums")
    e.set_defaults(func=cmd_example)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sample" and args.format == "pgm16" and args.out is None:
        parser.error("--format pgm16 needs --out")
    try:
        return args.func(args)
    except RfisError as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
