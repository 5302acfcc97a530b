"""Command-line front end.

Exit status: 0 on success, 2 for bad arguments or input files, 1 when a
computation fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction

from .distortion import biased_ratio, exact_distortion
from .election import (
    InstanceError,
    dump_instance,
    gen_corpus,
    gen_radius_lb,
    gen_rcb_lb,
    gen_random,
    load_instance,
)
from .lp import LPError
from .metrics import BiasedVector
from .mixtures import RADIUS, RCB, distortion_bound_curve, minimize_bound
from .rules import parse_rule, radius, rcb

CSV_HEADER = ("instance_id", "rule", "distortion", "argmax_i_star")


class UsageError(Exception):
    pass


def _params(text: str) -> tuple[str, dict]:
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"expected name=value, got {item!r}")
        params[key.strip()] = value.strip()
    return kind.strip(), params


def generate(spec: str):
    """``random:m=4,n=5,seed=1`` | ``radius_lb:beta=7/10,size=5`` | ``rcb_lb:beta=3/5,T=5``."""
    kind, prm = _params(spec)
    try:
        if kind == "random":
            return gen_random(int(prm["m"]), int(prm["n"]), int(prm.get("seed", 0)))
        if kind == "radius_lb":
            return gen_radius_lb(Fraction(prm["beta"]), int(prm["size"]))
        if kind == "rcb_lb":
            return gen_rcb_lb(Fraction(prm["beta"]), int(prm["T"]))
    except KeyError as exc:
        raise UsageError(f"generator {kind!r} is missing parameter {exc.args[0]!r}") from exc
    raise UsageError(f"unknown generator {kind!r}")


def _instance(args):
    if args.instance is not None:
        with open(args.instance, encoding="utf-8") as fh:
            return load_instance(fh.read())
    return generate(args.generate)


def _size_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    lo_i = int(lo)
    return lo_i, int(hi) if hi else lo_i


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_gen(args, out):
    out.write(dump_instance(generate(args.spec)))


def cmd_winner(args, out):
    rule = parse_rule(args.rule)
    out.write(rule(_instance(args)).format() + "\n")


def cmd_distortion(args, out):
    E = _instance(args)
    D = parse_rule(args.rule)(E)
    report = exact_distortion(E, D, args.method)
    if args.report:
        out.write(report.to_text())
    else:
        out.write(f"{_fmt(report.value)} i_star={report.witness_i_star}\n")


def cmd_corpus(args, out):
    rule = parse_rule(args.rule)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    values = []
    corpus = gen_corpus(args.trials, _size_range(args.m), _size_range(args.n), args.seed)
    for i, (_, E) in enumerate(corpus):
        report = exact_distortion(E, rule(E), args.method)
        values.append(report.value)
        writer.writerow((i, str(rule), _fmt(report.value), report.witness_i_star))
    if values:
        sys.stderr.write(f"max {_fmt(max(values))} mean {_fmt(sum(values) / len(values))}\n")


def cmd_bounds(args, out):
    kinds = [RCB, RADIUS] if args.kind == "all" else [args.kind]
    for kind in kinds:
        if args.B is not None:
            out.write(f"{kind} B={_fmt(args.B)} bound={_fmt(distortion_bound_curve(args.B, kind))}\n")
        B, val = minimize_bound(kind)
        out.write(f"{kind} argmin B={_fmt(B)} bound={_fmt(val)}\n")


def cmd_lowerbound(args, out):
    beta = Fraction(args.beta)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("family", "size", "m", "k", "distortion", "two_level_ratio"))
    for size in args.sizes:
        if args.family == "radius":
            E = gen_radius_lb(beta, size)
            D = radius(E, beta)
        else:
            E = gen_rcb_lb(beta, size)
            D = rcb(E, beta)
        x = BiasedVector.of([0] + [2] * (E.m - 1), 0)
        report = exact_distortion(E, D, args.method)
        writer.writerow((args.family, size, E.m, E.k, _fmt(report.value), _fmt(biased_ratio(E, x, D))))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metric-distortion", description="Metric distortion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_instance(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--instance", help="instance file")
        src.add_argument("--generate", metavar="SPEC", help="generator spec, e.g. random:m=4,n=5,seed=1")

    def with_method(p):
        p.add_argument("--method", choices=("auto", "closure", "biased"), default="auto")

    p = sub.add_parser("gen", help="write a generated instance")
    p.add_argument("spec", help="generator spec")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("winner", help="print a rule's output distribution")
    p.add_argument("--rule", required=True)
    with_instance(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_winner)

    p = sub.add_parser("distortion", help="exact distortion of a rule on one instance")
    p.add_argument("--rule", required=True)
    with_instance(p)
    with_method(p)
    p.add_argument("--report", action="store_true", help="print the witness metric as well")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_distortion)

    p = sub.add_parser("corpus", help="distortion over a random corpus, as CSV")
    p.add_argument("--rule", required=True)
    p.add_argument("--m", default="4", help="candidates, N or LO-HI")
    p.add_argument("--n", default="5", help="voters, N or LO-HI")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    with_method(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("bounds", help="guaranteed distortion of the mixed rules")
    p.add_argument("--kind", choices=(RCB, RADIUS, "all"), default="all")
    p.add_argument("--B", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("lowerbound", help="distortion on the lower-bound families")
    p.add_argument("--family", choices=("radius", "rcb"), required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--sizes", type=int, nargs="+", required=True)
    with_method(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lowerbound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buf = io.StringIO()
    try:
        args.func(args, buf)
    except (UsageError, InstanceError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (LPError, ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"computation failed: {exc}\n")
        return 1
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
