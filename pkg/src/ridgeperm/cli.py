"""Command-line front end: ``test``, ``simulate`` and ``presets``.

Exit codes: 0 success, 2 bad input, 3 degenerate statistic.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import DegenerateStatistic, InputError, UnknownPreset
from .io import build_scenario, ingest_csv, read_scenario_file, to_json, to_tsv
from .methods import Method, MethodSpec, run_method
from .perm import COMBINERS, TransformKind
from .presets import PRESETS
from .sim import run_scenario

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3


def _split_names(values: list[str]) -> list[str]:
    return [name.strip() for v in values for name in v.split(",") if name.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridgeperm",
        description="Permutation tests for regression coefficients with ridge-residualised nuisance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test one coefficient (or all, with npc) on a CSV file")
    t.add_argument("data", help="CSV file with a header row")
    t.add_argument("--y", required=True, help="outcome column")
    t.add_argument("--x", action="append", required=True,
                   help="covariate(s) of interest; repeat or comma-separate")
    t.add_argument("--z", action="append", default=None,
                   help="nuisance columns (default: every other column)")
    t.add_argument("--method", default=Method.FLHD_SEMIPARTIAL.value, choices=[m.value for m in Method])
    t.add_argument("--w", type=int, default=20_000, help="number of transformations, identity included")
    t.add_argument("--seed", type=int, default=0)
    kind = t.add_mutually_exclusive_group()
    kind.add_argument("--permute", dest="kind", action="store_const", const=TransformKind.PERMUTATION)
    kind.add_argument("--flip", dest="kind", action="store_const", const=TransformKind.SIGN_FLIP)
    t.set_defaults(kind=TransformKind.PERMUTATION)
    t.add_argument("--lambda", dest="lam", type=float, default=None, help="fixed outcome penalty")
    t.add_argument("--lambda-x", dest="lam_x", type=float, default=None, help="fixed covariate penalty")
    t.add_argument("--folds", type=int, default=10)
    t.add_argument("--psi", default="max_abs", choices=sorted(COMBINERS), help="npc combining function")
    t.add_argument("--alpha", type=float, default=None, help="also report reject = p <= alpha")
    t.add_argument("--standardize", action="store_true", help="scale every column to unit sd")
    t.add_argument("--format", choices=("json", "tsv"), default="json")
    t.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("simulate", help="estimate rejection rates for a preset or scenario file")
    s.add_argument("scenario", help="preset name or path to a 'key = value' scenario file")
    s.add_argument("--mode", choices=("level", "power"), default=None)
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--w", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--beta", default=None, help="effect vector, e.g. '1.5' or '3,2,1'")
    s.add_argument("--alpha", default=None, help="comma-separated cutoffs")
    s.add_argument("--methods", default=None, help="comma-separated method names")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any other scenario field")
    s.add_argument("--full-scale", action="store_true", help="10^4 replicates, 2*10^4 transformations")
    s.add_argument("--jobs", type=int, default=1)

    sub.add_parser("presets", help="list the built-in scenarios")
    return parser


def cmd_test(args, out=sys.stdout) -> int:
    interest = _split_names(args.x)
    nuisance = _split_names(args.z) if args.z else None
    data = ingest_csv(args.data, args.y, interest, nuisance, standardize=args.standardize)
    method = Method(args.method)
    if method is not Method.FLHD_NPC and data.d != 1:
        raise InputError(f"{method.value} tests one covariate; got {data.d} (use --method npc for a joint test)")
    if args.alpha is not None and not 0.0 < args.alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {args.alpha}")
    spec = MethodSpec(
        method,
        w=args.w,
        seed=args.seed,
        kind=args.kind,
        lam=args.lam,
        lam_x=args.lam_x,
        psi=args.psi,
        col=None if method is Method.FLHD_NPC else 0,
        folds=args.folds,
    )
    outcome = run_method(data, spec, n_jobs=args.jobs)
    record = outcome.record()
    record.update(n=data.n, d=data.d, q=data.q)
    if args.alpha is not None:
        record.update(alpha=args.alpha, reject=outcome.p_value <= args.alpha)
    out.write(to_json(record) if args.format == "json" else to_tsv(record))
    return EXIT_OK


def cmd_simulate(args, out=sys.stdout) -> int:
    if args.scenario in PRESETS:
        entries = {"preset": args.scenario}
    elif Path(args.scenario).is_file():
        entries = read_scenario_file(args.scenario)
    else:
        raise UnknownPreset(f"{args.scenario!r} is neither a preset nor a file; known presets: {', '.join(PRESETS)}")
    if args.full_scale:
        entries.setdefault("reps", "10000")
        entries.setdefault("w", "20000")
    for item in args.set:
        key, eq, value = item.partition("=")
        if not eq:
            raise InputError(f"--set expects KEY=VALUE, got {item!r}")
        entries[key.strip()] = value.strip()
    for key, value in (("reps", args.reps), ("w", args.w), ("seed", args.seed), ("beta", args.beta),
                       ("alphas", args.alpha), ("methods", args.methods), ("mode", args.mode)):
        if value is not None:
            entries[key] = str(value)
    scenario = build_scenario(entries)
    table = run_scenario(scenario, n_jobs=args.jobs)
    out.write(table.to_tsv())
    for message in table.errors:
        print(f"warning: {message}", file=sys.stderr)
    return EXIT_OK


def cmd_presets(args, out=sys.stdout) -> int:
    width = max(len(name) for name in PRESETS)
    for name, (description, _) in PRESETS.items():
        out.write(f"{name:<{width}}  {description}\n")
    return EXIT_OK


_COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "presets": cmd_presets}


def main(argv=None, out=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if out is None else out
    try:
        return _COMMANDS[args.command](args, out)
    except DegenerateStatistic as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
