"""Command-line driver producing reproducible JSON artifacts.

Every artifact embeds the schema version, the resolved config, the seed and
the library version; re-running a command with the same inputs yields
byte-identical output regardless of thread count.

Exit codes: 0 success, 1 precondition/validation failure, 2 indeterminate
(logarithmic precision cap), 3 window-insufficient.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import SCHEMA, __version__
from .constructions import (
    build_X,
    extract_uncovered_point,
    reindex_density_avoid,
    reindex_ln_avoid,
    thin_reindex,
    union_reindex_Mprime,
)
from .covers import (
    CoverAttempt,
    GeometricConstraint,
    LogarithmicConstraint,
    adversary_generate,
    corollary_witness,
    derive_subseed,
    validate,
)
from .exact import (
    Interval,
    PreconditionError,
    WindowInsufficientError,
    parse_rational,
    rational_to_json,
    seventh_power,
)
from .omega import density_estimate, density_exact, parse_omega_set
from .spacing import build_k_hierarchy, depth_for_terminals, place_intervals

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_INDETERMINATE = 2
EXIT_WINDOW = 3


def _artifact(command: str, config: dict, result: dict, seed: int | None = None) -> dict:
    body = {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "config": config,
        "result": result,
    }
    if seed is not None:
        body["seed"] = seed
    return body


def _emit(artifact: dict, output: str | None) -> None:
    text = json.dumps(artifact, sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _constraint(kind: str, eps: Fraction):
    if kind == "geometric":
        return GeometricConstraint(eps)
    if kind == "logarithmic":
        return LogarithmicConstraint(eps)
    raise PreconditionError(f"unknown constraint kind {kind!r}")


def cmd_spacing(args) -> int:
    m = args.m
    A = parse_omega_set(args.A)
    root = Interval(Fraction(0), seventh_power(m))
    count = args.count if args.count is not None else t_count_default(args.depth)
    depth = max(args.depth, depth_for_terminals(count))
    tree = build_k_hierarchy(root, m, depth)
    placed = place_intervals(tree, A, count)
    config = {
        "m": m,
        "A": args.A,
        "depth": args.depth,
        "count": count,
    }
    result = {"tree": tree.to_json(), "placed": placed.to_json()}
    _emit(_artifact("spacing", config, result), args.output)
    return EXIT_OK


def t_count_default(depth: int) -> int:
    from .spacing import t_value

    return t_value(depth) + 1


def cmd_density(args) -> int:
    s = parse_omega_set(args.set)
    report = density_estimate(s, args.window, samples=args.samples)
    config = {"set": args.set, "window": args.window, "samples": args.samples}
    result = {
        "exact": rational_to_json(density_exact(s)),
        "estimate": report.to_json(),
    }
    _emit(_artifact("density", config, result), args.output)
    return EXIT_OK


def cmd_check_cover(args) -> int:
    cover = CoverAttempt.from_json(json.loads(Path(args.input).read_text()))
    if args.constraint:
        eps = parse_rational(args.eps)
        cover = CoverAttempt(
            D=cover.D,
            intervals=cover.intervals,
            constraint=_constraint(args.constraint, eps),
            window_end=cover.window_end,
        )
    report = validate(cover, precision_cap=args.precision_cap)
    config = {
        "input": args.input,
        "constraint": cover.constraint.to_json(),
        "precision_cap": args.precision_cap,
    }
    _emit(_artifact("check-cover", config, {"validation": report.to_json()}), args.output)
    if report.violations:
        return EXIT_PRECONDITION
    if report.indeterminate:
        return EXIT_INDETERMINATE
    return EXIT_OK


def cmd_build_x(args) -> int:
    x = build_X(args.depth, args.cutoff)
    config = {"depth": args.depth, "cutoff": args.cutoff}
    _emit(_artifact("build-x", config, {"x": x.to_json()}), args.output)
    return EXIT_OK


def cmd_challenge(args) -> int:
    eps = Fraction(1, 7)
    A = parse_omega_set(args.A)
    root = Interval(Fraction(0), seventh_power(args.m))
    count = args.window
    tree = build_k_hierarchy(root, args.m, depth_for_terminals(count))
    placed = place_intervals(tree, A, count)
    threshold = density_exact(A) / 4
    targets = [(p.a, p.interval) for p in placed.members]

    trials = []
    success = hypothesis_not_met = window_insufficient = 0
    for i in range(args.trials):
        sub = derive_subseed(args.seed, i)
        params = {
            "window_end": args.window,
            "m": args.m,
            "eps": eps,
            "budget": {"kind": args.budget},
            "targets": targets,
        }
        cover = adversary_generate(args.strategy, params, sub)
        entry: dict = {"trial": i, "indices": len(cover.intervals)}
        try:
            cert = corollary_witness(placed, cover, window=args.window, jobs=args.jobs)
            entry["witness"] = cert.witness
            entry["certificate_size"] = len(cert.checks)
            entry["hypothesis_ok"] = cert.hypothesis_ok
            entry["density_lower_estimate"] = rational_to_json(cert.density_lower_estimate)
            if cert.hypothesis_ok:
                success += 1
            else:
                hypothesis_not_met += 1
                entry["status"] = "hypothesis-not-met"
        except WindowInsufficientError as exc:
            window_insufficient += 1
            entry["status"] = "window-insufficient"
            entry["telemetry"] = exc.telemetry
        trials.append(entry)

    config = {
        "trials": args.trials,
        "strategy": args.strategy,
        "budget": args.budget,
        "m": args.m,
        "A": args.A,
        "window": args.window,
    }
    result = {
        "witness_success": success,
        "hypothesis_not_met": hypothesis_not_met,
        "window_insufficient": window_insufficient,
        "density_threshold": rational_to_json(threshold),
        "trials": trials,
    }
    _emit(_artifact("challenge", config, result, seed=args.seed), args.output)
    return EXIT_OK if window_insufficient == 0 else EXIT_WINDOW


def cmd_reindex(args) -> int:
    eps = parse_rational(args.eps)
    if args.op == "thin":
        cover = CoverAttempt.from_json(json.loads(Path(args.input).read_text()))
        out = thin_reindex(cover, args.k, eps)
        result = {"cover": out.to_json()}
    elif args.op == "union":
        inputs = [
            CoverAttempt.from_json(json.loads(Path(p).read_text())) for p in args.inputs
        ]
        out = union_reindex_Mprime(inputs)
        result = {"cover": out.to_json()}
    elif args.op == "ln-avoid":
        D = parse_omega_set(args.avoid) if args.avoid else parse_omega_set("{}")
        source = CoverAttempt.from_json(json.loads(Path(args.input).read_text()))

        def factory(m: int) -> CoverAttempt:
            if source.constraint != LogarithmicConstraint(eps**m):
                raise PreconditionError(
                    f"input cover must carry Logarithmic(eps**{m}) for the derived m"
                )
            return source

        res = reindex_ln_avoid(factory, D, eps, args.count, window_end=args.window, m=args.m)
        result = res.to_json()
    elif args.op == "density-avoid":
        D = parse_omega_set(args.avoid) if args.avoid else parse_omega_set("{}")
        source = CoverAttempt.from_json(json.loads(Path(args.input).read_text()))
        m = args.m if args.m is not None else 4
        res = reindex_density_avoid(source, D, eps, m, window_end=args.window)
        result = res.to_json()
    else:
        raise PreconditionError(f"unknown re-index op {args.op!r}")
    config = {
        "op": args.op,
        "eps": args.eps,
        "k": getattr(args, "k", None),
        "m": getattr(args, "m", None),
        "count": getattr(args, "count", None),
        "window": getattr(args, "window", None),
        "avoid": getattr(args, "avoid", None),
    }
    _emit(_artifact("reindex", config, result), args.output)
    return EXIT_OK


def cmd_extract(args) -> int:
    x = build_X(args.depth, args.cutoff)
    cover = CoverAttempt.from_json(json.loads(Path(args.input).read_text()))
    chain = extract_uncovered_point(x, cover, args.depth)
    config = {"depth": args.depth, "cutoff": args.cutoff, "input": args.input}
    result = {"chain": chain.to_json(), "replay_ok": chain.replay(cover)}
    _emit(_artifact("extract", config, result), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microcover",
        description="exact interval-combinatorics constructions with certified witnesses",
    )
    parser.add_argument("--jobs", type=int, default=1, help="worker threads (never changes results)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spacing", help="build the K-hierarchy and placed family")
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--A", default="(w+1)")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_spacing)

    p = sub.add_parser("density", help="exact + empirical density of an omega-set")
    p.add_argument("--set", required=True)
    p.add_argument("--window", type=int, default=2**20)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("check-cover", help="validate a cover attempt file")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--constraint", choices=["geometric", "logarithmic"], default=None)
    p.add_argument("--eps", default="1/7")
    p.add_argument("--precision-cap", type=int, default=256)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_check_cover)

    p = sub.add_parser("build-x", help="materialize the nested construction")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--cutoff", type=int, default=64)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_build_x)

    p = sub.add_parser("challenge", help="seeded adversary trials against the witness search")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--strategy", choices=["greedy-hit", "density-budget", "random"], default="density-budget")
    p.add_argument("--budget", choices=["sqrt", "unbounded"], default="sqrt")
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--A", default="(w+1)")
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_challenge)

    p = sub.add_parser("reindex", help="cover re-indexing transforms")
    p.add_argument("--op", choices=["thin", "union", "ln-avoid", "density-avoid"], required=True)
    p.add_argument("-i", "--input", default=None)
    p.add_argument("--inputs", nargs="*", default=[])
    p.add_argument("--eps", default="1/7")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--window", type=int, default=10**4)
    p.add_argument("--avoid", default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_reindex)

    p = sub.add_parser("extract", help="uncovered-point chain against a cover file")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--cutoff", type=int, default=256)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_extract)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WindowInsufficientError as exc:
        print(f"window-insufficient: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
