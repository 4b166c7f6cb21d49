"""Command line entry point.

Subcommands: validate (schema check a model file), verify (run verification
suites and emit a report), report (re-render a saved JSON report).  Exit
codes: 0 all checks passed, 1 at least one check failed, 2 model or usage
error.  Bundled model names (five_dim, ads3) resolve without a path.
"""

import argparse
import json
import os
import sys

from .model import ModelError, bundled_model_path, load_model
from .report import VerificationReport
from .suites import SUITES, SuiteConfig, run_suite


def _resolve_model(arg):
    if os.path.exists(arg):
        return arg
    candidate = bundled_model_path(arg.removesuffix(".json"))
    if candidate.is_file():
        return str(candidate)
    raise FileNotFoundError(f"no such model file or bundled model: {arg}")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="ncidirac",
        description="Construct and numerically verify the objects of "
                    "noncommutative integration of the Dirac equation on a "
                    "homogeneous space described by a declarative model file.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    val = sub.add_parser("validate", help="load and schema-check a model file")
    val.add_argument("model", help="model file path or bundled model name")

    ver = sub.add_parser("verify", help="run verification suites")
    ver.add_argument("model", help="model file path or bundled model name")
    ver.add_argument("--suite", default="all",
                     help=f"comma-separated subset of {','.join(SUITES)} or 'all'")
    ver.add_argument("--seed", type=int, default=None,
                     help="RNG seed (default: the model's verification seed)")
    ver.add_argument("--points", type=int, default=None,
                     help="sample points per check (default from model)")
    ver.add_argument("--jet-order", type=int, default=None,
                     help="jet truncation order (default from model)")
    ver.add_argument("--tolerance-scale", type=float, default=1.0,
                     help="multiply every upper-bound tolerance")
    ver.add_argument("--format", choices=("text", "json"), default="text")
    ver.add_argument("--timings", action="store_true",
                     help="include wall times in json output (breaks "
                          "byte-for-byte determinism)")
    ver.add_argument("-o", "--output", default=None, help="write report here")

    rep = sub.add_parser("report", help="re-render a saved JSON report")
    rep.add_argument("report", help="path to a JSON report")
    rep.add_argument("--format", choices=("text", "json"), default="text")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return {
            "validate": _cmd_validate,
            "verify": _cmd_verify,
            "report": _cmd_report,
        }[args.command](args)
    except (ModelError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _cmd_validate(args):
    model = load_model(_resolve_model(args.model))
    print(f"{model.name}: ok ({model.alg.dim}-dimensional algebra, "
          f"{len(model.split.m)}-dimensional space, "
          f"{model.gammas.dim}-component spinors)")
    return 0


def _cmd_verify(args):
    model = load_model(_resolve_model(args.model))
    suites = ("all" if args.suite == "all"
              else [s.strip() for s in args.suite.split(",") if s.strip()])
    if suites != "all" and not suites:
        print("error: empty suite selection", file=sys.stderr)
        return 2
    try:
        config = SuiteConfig(
            seed=args.seed if args.seed is not None
            else model.verification.get("seed", 7),
            points=args.points,
            jet_order=args.jet_order,
            tolerance_scale=args.tolerance_scale,
        )
        report = run_suite(model, suites, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = (report.to_json(include_timing=args.timings)
           if args.format == "json" else report.to_text())
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0 if report.all_passed else 1


def _cmd_report(args):
    with open(args.report) as fh:
        doc = json.load(fh)
    rep = VerificationReport(doc["model"], doc["suites"], doc["seed"])
    from .report import Check

    for c in doc["checks"]:
        resid = c["residual"]
        if isinstance(resid, list):
            resid = complex(*resid)
        rep.add(Check(c["id"], c["anchor"], resid, c.get("tolerance"),
                      mode=c.get("mode", "le"), detail=c.get("detail"),
                      samples=c.get("samples"),
                      worst_sample=c.get("worst_sample")))
    sys.stdout.write(rep.to_json() if args.format == "json" else rep.to_text())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
