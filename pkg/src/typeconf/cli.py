"""Command-line entry point.

Exit status: 0 when nothing is reported, 1 when at least one report is
emitted, 2 when any input fails to parse.
"""

from __future__ import annotations

import argparse
import sys

from .detectors import ALL_KINDS, BugKind
from .report import render_report
from .scan import DEFAULT_TIMEOUT, Config, run_scan
from .semantics import BOTH_ARCHES, ArchWidth

_ARCHES = {"32": frozenset({ArchWidth.BITS32}), "64": frozenset({ArchWidth.BITS64}), "both": BOTH_ARCHES}


def _detectors(text: str) -> frozenset[BugKind]:
    try:
        kinds = frozenset(BugKind.from_short(t.strip()) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not kinds:
        raise argparse.ArgumentTypeError("at least one detector is required")
    return kinds


def _positive(cast):
    def parse(text: str):
        value = cast(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="typeconf",
        description="Detect unsafe pointer type conversions in JSON-encoded mid-level IR packages.",
    )
    p.add_argument("inputs", nargs="*", metavar="PATH", help="IR documents or directories of them")
    p.add_argument("--input", action="append", default=[], metavar="PATH", dest="extra_inputs")
    p.add_argument("--detectors", type=_detectors, default=frozenset(ALL_KINDS), help="subset of I,II,III")
    p.add_argument("--arch", choices=sorted(_ARCHES), default="both")
    p.add_argument("--no-interprocedural", action="store_true")
    p.add_argument("--jobs", type=_positive(int), default=1)
    p.add_argument("--timeout", type=_positive(float), default=DEFAULT_TIMEOUT, metavar="SECS")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--dump-alias-dot", nargs="?", const="-", metavar="PATH",
                   help="write alias graphs as DOT (default: stderr)")
    p.add_argument("--dump-property-graph", nargs="?", const="-", metavar="PATH",
                   help="write the property graph as JSON (default: stderr)")
    p.add_argument("--trait-overlay", metavar="PATH")
    p.add_argument("--suppression-overlay", metavar="PATH")
    return p


def _emit(text: str, dest: str | None) -> None:
    if dest in (None, "-"):
        sys.stderr.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    inputs = tuple(args.inputs) + tuple(args.extra_inputs)
    if not inputs:
        parser.error("no inputs given")
    cfg = Config(
        inputs=inputs,
        detectors=args.detectors,
        arches=_ARCHES[args.arch],
        interprocedural=not args.no_interprocedural,
        jobs=args.jobs,
        timeout=args.timeout,
        output_format=args.format,
        dump_alias_dot=args.dump_alias_dot is not None,
        dump_property_graph=args.dump_property_graph is not None,
        trait_overlay=args.trait_overlay,
        suppression_overlay=args.suppression_overlay,
    )
    summary = run_scan(cfg)
    for key, dest in (("alias_dot", args.dump_alias_dot), ("property_graph", args.dump_property_graph)):
        if dest is not None:
            _emit("".join(p.dumps.get(key, "") for p in summary.packages), dest)
    out = render_report(summary, cfg.output_format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
