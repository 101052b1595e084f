"""
glu - command-line entry point for the triangulated 3-manifold toolkit.

    python app.py validate FILE
    python app.py moves FILE (--apply SEQ.json | --enumerate)
    python app.py subdivide FILE [--kind coned|barycentric] [--save-sequence SEQ.json]
    python app.py quotients FILE [--unoriented] [--degree-one] [--budget N]
    python app.py pi1 FILE [--words [BUDGET]]
    python app.py geometrize FILE [--restarts R] [--tol T] [--seed S] [--mode box|direct] [--save-system PSY]
    python app.py compare A B [--cap N] [--c 2] [--seed S] [--report out.json]
    python app.py bound T1 T2 --L L --inj R
    python app.py census NAME [ARGS...]

Reports go to stdout (or --report) as JSON; logs and errors go to stderr.
Exit codes: 0 completed, 1 invalid input, 2 inconclusive.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.census import by_name, scramble
from core.config import PipelineConfig, setup_logging
from core.error_handler import EXIT_INCONCLUSIVE, EXIT_OK, DisconnectedGraph, ErrorHandler, GluError
from core.pipeline import COMPLETED, REPORT_FORMAT, Pipeline, kalelkar_phanse_bound
from core.tricore import Triangulation, is_connected
from utils.file_manager import FileManager
from utils.templates import TemplateManager

logger = logging.getLogger("glu")


class Context:
    """What every subcommand needs: configuration, pipeline and document IO."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        base = PipelineConfig.from_yaml(args.config) if args.config else PipelineConfig.from_env()
        overrides: Dict[str, Any] = {
            "seed": getattr(args, "seed", None),
            "restarts": getattr(args, "restarts", None),
            "mode": getattr(args, "mode", None),
            "c": getattr(args, "c", None),
            "move_cap": getattr(args, "cap", None),
            "quotient_budget": getattr(args, "budget", None),
            "shelling_budget": getattr(args, "shelling_budget", None),
            "threads": args.threads,
        }
        tol = getattr(args, "tol", None)
        if tol is not None:
            overrides["tolerances"] = {"solver": tol}
        self.config = base.updated(**overrides)
        self.pipeline = Pipeline(self.config)
        self.files = FileManager()
        self.templates = TemplateManager()

    def gluing(self, path: str, connected: bool = True) -> Triangulation:
        t = self.files.load_triangulation(path)
        if connected and not is_connected(t):
            raise DisconnectedGraph(f"{path} is disconnected; pipeline commands need one component", path=path)
        return t

    def emit(self, report: Dict[str, Any]) -> int:
        report.setdefault("config", self.config.to_dict())
        path = self.args.report
        if self.args.markdown and path in (None, "-"):
            sys.stdout.write(self.templates.render_report(report))
        else:
            self.files.write_document(report, path)
        if self.args.markdown and path not in (None, "-"):
            with open(Path(path).with_suffix(".md"), 'w', encoding='utf-8') as f:
                f.write(self.templates.render_report(report))
        return EXIT_OK if report.get("status", COMPLETED) == COMPLETED else EXIT_INCONCLUSIVE


def cmd_validate(ctx: Context) -> int:
    t = ctx.gluing(ctx.args.file, connected=False)
    return ctx.emit(ctx.pipeline.validate(t))


def cmd_moves(ctx: Context) -> int:
    t = ctx.gluing(ctx.args.file, connected=False)
    sequence = ctx.files.load_sequence(ctx.args.apply) if ctx.args.apply else None
    return ctx.emit(ctx.pipeline.moves(t, sequence))


def cmd_subdivide(ctx: Context) -> int:
    t = ctx.gluing(ctx.args.file, connected=False)
    sequence, report = ctx.pipeline.subdivide(t, ctx.args.kind)
    if ctx.args.save_sequence:
        ctx.files.write_document(sequence.to_dict(), ctx.args.save_sequence)
    return ctx.emit(report)


def cmd_quotients(ctx: Context) -> int:
    t = ctx.gluing(ctx.args.file)
    report = ctx.pipeline.quotients(t, oriented=not ctx.args.unoriented, degree_one=ctx.args.degree_one,
                                    manifold=not ctx.args.any)
    return ctx.emit(report)


def cmd_pi1(ctx: Context) -> int:
    t = ctx.gluing(ctx.args.file)
    words = ctx.args.words is not None
    return ctx.emit(ctx.pipeline.pi1(t, words=words, budget=ctx.args.words or None))


def cmd_geometrize(ctx: Context) -> int:
    t = ctx.gluing(ctx.args.file)
    seeds = [ctx.files.load_structure(path, t).vertices for path in ctx.args.start or []]
    poly = None
    if ctx.args.save_system:
        poly = ctx.pipeline.poly_system(t)
        ctx.files.write_document(poly.to_dict(), ctx.args.save_system)
    structure, report = ctx.pipeline.geometrize(t, seeds=seeds or None, system=not ctx.args.no_system, poly=poly)
    if structure is not None and ctx.args.save_structure:
        ctx.files.write_document(structure.to_dict(), ctx.args.save_structure)
    return ctx.emit(report)


def cmd_compare(ctx: Context) -> int:
    a, b = ctx.gluing(ctx.args.a), ctx.gluing(ctx.args.b)
    structures = None
    if ctx.args.structures:
        structures = (ctx.files.load_structure(ctx.args.structures[0], a),
                      ctx.files.load_structure(ctx.args.structures[1], b))
    result = ctx.pipeline.compare(a, b, structures=structures, geometry=not ctx.args.no_geometry)
    return ctx.emit(result.to_dict())


def cmd_bound(ctx: Context) -> int:
    bound = kalelkar_phanse_bound(ctx.args.t1, ctx.args.t2, ctx.args.L, ctx.args.inj)
    return ctx.emit({
        "format": REPORT_FORMAT,
        "command": "bound",
        "status": COMPLETED,
        "inputs": {"t1": ctx.args.t1, "t2": ctx.args.t2, "L": ctx.args.L, "inj": ctx.args.inj},
        **bound.to_dict(),
    })


def cmd_census(ctx: Context) -> int:
    t = by_name(ctx.args.name, *ctx.args.params)
    if ctx.args.scramble:
        t, _ = scramble(t, ctx.args.scramble, ctx.config.seed)
    ctx.files.write_document(t.to_dict(), ctx.args.report)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "moves": cmd_moves,
    "subdivide": cmd_subdivide,
    "quotients": cmd_quotients,
    "pi1": cmd_pi1,
    "geometrize": cmd_geometrize,
    "compare": cmd_compare,
    "bound": cmd_bound,
    "census": cmd_census,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with PipelineConfig values.")
    common.add_argument("--report", help="Write the report here instead of stdout.")
    common.add_argument("--markdown", action="store_true",
                        help="Also render the report as Markdown (next to --report, or on stdout).")
    common.add_argument("--threads", type=int, default=None, help="Worker cap; overrides GLU_THREADS.")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR.")

    ap = argparse.ArgumentParser(prog="glu", description="Triangulated 3-manifold toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="Validate a glu3/1 gluing and report its skeleton.")
    p.add_argument("file")

    p = sub.add_parser("moves", parents=[common], help="Enumerate or apply Pachner moves.")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--apply", metavar="SEQ", help="mvs/1 sequence to replay.")
    group.add_argument("--enumerate", action="store_true", help="List every applicable elementary move.")

    p = sub.add_parser("subdivide", parents=[common], help="Subdivide a gluing and witness it with moves.")
    p.add_argument("file")
    p.add_argument("--kind", choices=["coned", "barycentric"], default="coned")
    p.add_argument("--shelling-budget", type=int, default=None, help="Search nodes per shelling.")
    p.add_argument("--save-sequence", metavar="SEQ", help="Write the move sequence as mvs/1.")

    p = sub.add_parser("quotients", parents=[common], help="Enumerate simplicial quotients.")
    p.add_argument("file")
    p.add_argument("--oriented", action="store_true", help="Only orientation-compatible maps (default).")
    p.add_argument("--unoriented", action="store_true", help="Allow every vertex map.")
    p.add_argument("--degree-one", action="store_true", help="Keep degree-one quotients only.")
    p.add_argument("--any", action="store_true", help="Keep quotients that are not closed 3-manifolds.")
    p.add_argument("--budget", type=int, default=None, help="Candidates to scan.")

    p = sub.add_parser("pi1", parents=[common], help="Presentation and abelianization of pi_1.")
    p.add_argument("file")
    p.add_argument("--words", type=int, nargs="?", const=0, default=None, metavar="BUDGET",
                   help="Also rewrite simplicial generators as face-pairing words.")

    p = sub.add_parser("geometrize", parents=[common], help="Solve for a hyperbolic structure.")
    p.add_argument("file")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="Solver residual tolerance.")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=["direct", "box"], default=None)
    p.add_argument("--start", action="append", metavar="HST", help="hst/1 structure to try as a start.")
    p.add_argument("--save-structure", metavar="PATH", help="Write the accepted structure as hst/1.")
    p.add_argument("--save-system", metavar="PATH", help="Write the polynomial system as psy/1.")
    p.add_argument("--no-system", action="store_true", help="Skip building the polynomial system.")

    p = sub.add_parser("compare", parents=[common], help="Search for a Pachner witness between two gluings.")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--cap", type=int, default=None, help="Largest move count to search.")
    p.add_argument("--c", type=int, default=None, help="Edge-length gate constant.")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--structures", nargs=2, metavar=("HST_A", "HST_B"), help="Use stored structures.")
    p.add_argument("--no-geometry", action="store_true", help="Skip geometrization; search only.")

    p = sub.add_parser("bound", parents=[common], help="Reference Pachner bound (m, f).")
    p.add_argument("t1", type=int)
    p.add_argument("t2", type=int)
    p.add_argument("--L", type=float, required=True, help="Longest edge length.")
    p.add_argument("--inj", type=float, required=True, help="Injectivity radius.")

    p = sub.add_parser("census", parents=[common], help="Write a built-in gluing as glu3/1.")
    p.add_argument("name", help="double, lens, s4 or seifert-weber")
    p.add_argument("params", type=int, nargs="*", help="P Q for lens.")
    p.add_argument("--scramble", type=int, default=0, metavar="K", help="Apply K random moves.")
    p.add_argument("--seed", type=int, default=None)

    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    handler = ErrorHandler()
    try:
        ctx = Context(args)
        logger.debug(f"{args.command} with {ctx.config.to_dict()}")
        return COMMANDS[args.command](ctx)
    except GluError as e:
        info = handler.handle_error(e, args.command)
        sys.stderr.write(json.dumps(ErrorHandler.public_view(info), sort_keys=True) + "\n")
        return e.code


if __name__ == "__main__":
    sys.exit(main())
