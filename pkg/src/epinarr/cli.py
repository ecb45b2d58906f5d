"""Command-line entry point: ``epinarr <subcommand> ...``.

Exit codes: 0 success, 1 validation errors (or differences for ``diff``),
2 parse/schema/usage error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import diff_models, errors, issues_to_json, issues_to_text, summarize, validate
from .dsl import parse_model, render_model
from .errors import (
    NonIntegerInitialAmount, NumericalBlowup, ParseError, SchemaError,
    UnresolvedReference, UnsupportedMathml, ValidationFailed, XmlError,
)
from .model import Model
from .narrative import Format, narrate
from .sbml import export_sbml, import_sbml, lossy_roles
from .sim import SimConfig, mean_trajectory, simulate_ode, simulate_ssa, trajectory_csv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SYNTAX = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

SBML_SUFFIXES = (".xml", ".sbml")


class _Diagnostics:
    def __init__(self, stream=None):
        self.stream = stream or sys.stderr
        mode = os.environ.get("EPINARR_COLOR", "auto")
        self.color = mode != "never" and hasattr(self.stream, "isatty") and self.stream.isatty()

    def __call__(self, message: str, level: str = "error") -> None:
        prefix = f"epinarr: {level}: "
        if self.color:
            code = "31" if level == "error" else "33"
            prefix = f"\033[{code}m{prefix}\033[0m"
        print(prefix + message, file=self.stream)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_model(path: str, in_format: Optional[str] = None) -> Model:
    """Read a model, choosing DSL or SBML by ``in_format`` or file suffix."""
    text = _read_text(path)
    fmt = in_format
    if fmt is None:
        if path == "-":
            fmt = "sbml" if text.lstrip().startswith("<") else "biopepa"
        else:
            fmt = "sbml" if path.lower().endswith(SBML_SUFFIXES) else "biopepa"
    if fmt == "sbml":
        return import_sbml(text)
    name = Path(path).stem if path != "-" else "model"
    return parse_model(text, name=name if name.isidentifier() else "model")


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in-format", choices=["biopepa", "sbml"],
                        help="override input format detection")

    ap = argparse.ArgumentParser(prog="epinarr",
                                 description="Bio-PEPA / SBML model toolkit")
    ap.add_argument("--version", action="version", version=f"epinarr {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("parse", parents=[common], help="check syntax")
    p.add_argument("file")

    p = sub.add_parser("export", parents=[common], help="write SBML")
    p.add_argument("file")
    p.add_argument("-o", "--output")

    p = sub.add_parser("import", parents=[common], help="write .biopepa text")
    p.add_argument("file")
    p.add_argument("-o", "--output")

    p = sub.add_parser("narrate", parents=[common], help="write a narrative report")
    p.add_argument("file")
    p.add_argument("--format", choices=[f.value for f in Format], default="txt")
    p.add_argument("-o", "--output")

    p = sub.add_parser("validate", parents=[common], help="list model issues")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("summary", parents=[common], help="print component counts")
    p.add_argument("file")

    p = sub.add_parser("diff", parents=[common], help="compare two models")
    p.add_argument("reference")
    p.add_argument("candidate")
    p.add_argument("--json", action="store_true")
    p.add_argument("--tolerance", type=float, default=0.0)

    p = sub.add_parser("simulate", parents=[common], help="run ODE or SSA simulation")
    p.add_argument("file")
    p.add_argument("--mode", choices=["ode", "ssa"], required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--output-every", type=float)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", metavar="PREFIX")
    return ap


def _cmd_simulate(args, model: Model, say) -> int:
    cfg = SimConfig(args.t_end, dt=args.dt, output_every=args.output_every,
                    replicates=args.replicates, seed=args.seed)
    if args.mode == "ode":
        _emit(trajectory_csv(simulate_ode(model, cfg)),
              None if args.output is None else f"{args.output}.csv")
        return EXIT_OK
    runs = simulate_ssa(model, cfg)
    if args.output is None:
        if len(runs) > 1:
            say("several replicates need -o PREFIX; writing their mean", "warning")
            _emit(trajectory_csv(mean_trajectory(runs)), None)
        else:
            _emit(trajectory_csv(runs[0]), None)
        return EXIT_OK
    for k, run in enumerate(runs):
        _emit(trajectory_csv(run), f"{args.output}_r{k}.csv")
    if len(runs) > 1:
        _emit(trajectory_csv(mean_trajectory(runs)), f"{args.output}_mean.csv")
    return EXIT_OK


def _dispatch(args, say) -> int:
    cmd = args.command
    if cmd == "diff":
        ref = load_model(args.reference, args.in_format)
        cand = load_model(args.candidate, args.in_format)
        report = diff_models(ref, cand, tolerance=args.tolerance)
        sys.stdout.write(report.to_json() if args.json else report.to_text())
        return EXIT_OK if report.empty else EXIT_INVALID

    model = load_model(args.file, args.in_format)
    if cmd == "parse":
        return EXIT_OK
    if cmd == "summary":
        sys.stdout.write(summarize(model).to_text())
        return EXIT_OK
    if cmd == "validate":
        issues = validate(model)
        sys.stdout.write(issues_to_json(issues) if args.json else issues_to_text(issues))
        return EXIT_INVALID if errors(issues) else EXIT_OK
    if cmd == "export":
        lossy = lossy_roles(model)
        if lossy:
            say("SBML stores activator/inhibitor roles as generic modifiers: "
                + ", ".join(lossy), "warning")
        _emit(export_sbml(model), args.output)
        return EXIT_OK
    if cmd == "import":
        _emit(render_model(model), args.output)
        return EXIT_OK
    if cmd == "narrate":
        _emit(narrate(model, Format(args.format)), args.output)
        return EXIT_OK
    if cmd == "simulate":
        return _cmd_simulate(args, model, say)
    raise AssertionError(cmd)


def run(argv: Optional[Sequence[str]] = None) -> int:
    say = _Diagnostics()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args, say)
    except ValidationFailed as exc:
        for issue in exc.issues:
            say(issue.detail)
        return EXIT_INVALID
    except NonIntegerInitialAmount as exc:
        say(str(exc))
        return EXIT_INVALID
    except (ParseError, XmlError, SchemaError, UnresolvedReference, UnsupportedMathml) as exc:
        where = getattr(args, "file", None) or ""
        say(f"{where}: {exc}" if where else str(exc))
        return EXIT_SYNTAX
    except NumericalBlowup as exc:
        say(str(exc))
        return EXIT_NUMERIC
    except ValueError as exc:
        say(str(exc))
        return EXIT_SYNTAX
    except OSError as exc:
        say(f"{exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
