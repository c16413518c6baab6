"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import REPORT_FORMATS, ExperimentConfig, emit_report, generate_instance, run_experiment
from .errors import ConfigError, OptAssignError
from .mechanisms import MECHANISMS, run_mechanism
from .model import (
    COMPLETENESS_POLICIES,
    Instance,
    UtilityProfile,
    compare_profiles,
    read_matching_csv,
    utility_profile,
    write_matching_csv,
)
from .verify import is_weakly_stable
from .weights import WEIGHT_FN_KINDS

EXIT_OK, EXIT_UNSTABLE, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class _UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"0..9"`` (inclusive), ``"3"`` or ``"0,2,5"``."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            elif part:
                seeds.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds or min(seeds) < 0:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    return seeds


def parse_tie_mode(text: str) -> tuple[str, int]:
    """``strict`` or ``tied:K`` (K = max group size, default 2)."""
    if text == "strict":
        return "strict", 2
    if text == "tied":
        return "tied", 2
    if text.startswith("tied:"):
        try:
            k = int(text[5:])
        except ValueError:
            k = 0
        if k >= 1:
            return "tied", k
    raise argparse.ArgumentTypeError(f"tie mode must be 'strict' or 'tied:K', got {text!r}")


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if v < 0 or v >= 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="optassign",
        description="Student-optimal school assignment by maximum-weight matching.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a random instance as JSON")
    g.add_argument("--students", type=int, required=True)
    g.add_argument("--schools", type=int, required=True)
    g.add_argument("--total-seats", type=int, default=None)
    g.add_argument("--capacities", default="equal-split",
                   help="'equal-split' or comma-separated per-school capacities")
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--tie-mode", type=parse_tie_mode, default=("strict", 2))
    g.add_argument("-o", "--output", type=Path, help="output file (default stdout)")

    s = sub.add_parser("solve", help="compute a matching for an instance")
    s.add_argument("instance", type=Path)
    s.add_argument("--mechanism", choices=MECHANISMS, default="student-optimal")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--weight-fn", choices=WEIGHT_FN_KINDS, default="exp-minus-one")
    s.add_argument("--policy", choices=COMPLETENESS_POLICIES, default="complete")
    s.add_argument("-o", "--output", type=Path, help="matching CSV (default stdout)")

    v = sub.add_parser("verify", help="check a matching for weak stability")
    v.add_argument("instance", type=Path)
    v.add_argument("matching", type=Path)
    v.add_argument("--policy", choices=COMPLETENESS_POLICIES, default="complete")

    b = sub.add_parser("bench", help="run the experiment protocol and write reports")
    b.add_argument("--config", type=Path, help="JSON config (flags override it)")
    b.add_argument("--students", type=int)
    b.add_argument("--schools", type=int)
    b.add_argument("--total-seats", type=int)
    b.add_argument("--seeds", type=parse_seeds)
    b.add_argument("--mechanism", action="append", choices=MECHANISMS,
                   help="repeatable; default student-optimal and serial-dictatorship")
    b.add_argument("--weight-fn", choices=WEIGHT_FN_KINDS)
    b.add_argument("--tie-mode", type=parse_tie_mode)
    b.add_argument("--no-timing", action="store_true",
                   help="leave durations blank so reports are byte-reproducible")
    b.add_argument("--threads", type=int, help="worker threads (default OPTASSIGN_THREADS)")
    b.add_argument("--out-dir", type=Path, default=Path("reports"))
    b.add_argument("--format", action="append", choices=REPORT_FORMATS,
                   help="repeatable; default all formats")

    c = sub.add_parser("compare", help="compare the utility profiles of two matchings")
    c.add_argument("first", type=Path)
    c.add_argument("second", type=Path)
    c.add_argument("--instance", type=Path,
                   help="instance JSON; without it the CSV rank column is used")
    c.add_argument("--policy", choices=COMPLETENESS_POLICIES, default="complete")
    return p


def _gen(args) -> int:
    caps = args.capacities
    if caps != "equal-split":
        try:
            caps = tuple(int(x) for x in caps.split(","))
        except ValueError:
            raise _UsageError(f"bad capacities {args.capacities!r}") from None
    tie_mode, k = args.tie_mode
    cfg = ExperimentConfig(
        args.students, args.schools, seeds=(args.seed,), capacities=caps,
        total_seats=args.total_seats, tie_mode=tie_mode, max_group_size=k, mechanisms=(),
    )
    text = generate_instance(cfg, args.seed).to_json()
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _solve(args) -> int:
    instance = Instance.load(args.instance, policy=args.policy)
    matching = run_mechanism(args.mechanism, instance, args.seed, args.weight_fn)
    text = write_matching_csv(instance, matching)
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    profile = utility_profile(instance, matching)
    print(f"profile {list(profile.counts)}  Q = {profile.digits()}", file=sys.stderr)
    return EXIT_OK


def _verify(args) -> int:
    instance = Instance.load(args.instance, policy=args.policy)
    report = is_weakly_stable(instance, read_matching_csv(args.matching))
    print(report)
    return EXIT_OK if report.stable else EXIT_UNSTABLE


def _profile_from_csv(path: Path) -> list[int]:
    import csv

    with path.open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return [int(r["rank"]) for r in rows]
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{path}: rank column missing or malformed") from None


def _compare(args) -> int:
    if args.instance:
        instance = Instance.load(args.instance, policy=args.policy)
        p1 = utility_profile(instance, read_matching_csv(args.first))
        p2 = utility_profile(instance, read_matching_csv(args.second))
    else:
        r1, r2 = _profile_from_csv(args.first), _profile_from_csv(args.second)
        if not r1 or not r2:
            raise ConfigError("matching CSVs must contain at least one row")
        z = max(r1 + r2)
        p1 = UtilityProfile(tuple(r1.count(k) for k in range(1, z + 1)), len(r1))
        p2 = UtilityProfile(tuple(r2.count(k) for k in range(1, z + 1)), len(r2))
    order = compare_profiles(p1, p2)
    print(f"{args.first}: {list(p1.counts)}  Q = {p1.digits()}")
    print(f"{args.second}: {list(p2.counts)}  Q = {p2.digits()}")
    print(order.name.capitalize())
    return EXIT_OK


def _bench(args) -> int:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
    overrides = {
        "n_students": args.students,
        "n_schools": args.schools,
        "total_seats": args.total_seats,
        "seeds": args.seeds,
        "mechanisms": args.mechanism,
        "weight_fn": args.weight_fn,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.tie_mode:
        data["tie_mode"], data["max_group_size"] = args.tie_mode
    if args.no_timing:
        data["timing"] = False
    if "n_students" not in data or "n_schools" not in data:
        raise _UsageError("bench needs --students and --schools (or a config file)")
    config = ExperimentConfig.from_dict(data)
    report = run_experiment(config, threads=args.threads)
    paths = emit_report(report, args.out_dir, formats=args.format or REPORT_FORMATS)
    for mech, means in report.mean_counts().items():
        head = ", ".join(f"{x:g}" for x in means[:5])
        dur = report.mean_duration_ms()[mech]
        dur_s = "" if dur is None else f"  mean {dur:.2f} ms"
        print(f"{mech}: mean counts by rank [{head}{', ...' if len(means) > 5 else ''}]{dur_s}")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return EXIT_OK


COMMANDS = {"gen": _gen, "solve": _solve, "verify": _verify, "bench": _bench, "compare": _compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"optassign: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OptAssignError as exc:
        print(f"optassign: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"optassign: IO_ERROR: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
