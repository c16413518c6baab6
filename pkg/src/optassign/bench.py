"""Seeded instance generation, the experiment protocol and report emission."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, OptAssignError, ReportIOError
from .lapsolve import max_weight_assignment
from .mechanisms import MECHANISMS, run_mechanism
from .model import Instance, Ordering, School, UtilityProfile, compare_profiles, utility_profile
from .plotting import duration_chart, rank_histogram_chart
from .verify import blocking_pairs
from .weights import WEIGHT_FN_KINDS

__all__ = [
    "DominanceError",
    "ExperimentConfig",
    "REFERENCE_CONFIGS",
    "RunRecord",
    "RunReport",
    "emit_report",
    "generate_instance",
    "run_experiment",
    "thread_count",
]

log = logging.getLogger(__name__)

REPORT_FORMATS = ("csv", "json", "svg")
CSV_HEADER = ["mechanism", "seed", "rank", "count", "duration_ms"]


class DominanceError(OptAssignError, AssertionError):
    """The student-optimal profile lost to a baseline on some seed."""

    code = "DOMINANCE_VIOLATED"


@dataclass(frozen=True)
class ExperimentConfig:
    n_students: int
    n_schools: int
    seeds: tuple[int, ...] = tuple(range(10))
    # "equal-split" or an explicit list of per-school capacities
    capacities: str | tuple[int, ...] = "equal-split"
    # equal-split only; defaults to n_students
    total_seats: int | None = None
    tie_mode: str = "strict"
    max_group_size: int = 2
    mechanisms: tuple[str, ...] = ("student-optimal", "serial-dictatorship")
    weight_fn: str = "exp-minus-one"
    # off: durations are left blank so reports are byte-reproducible
    timing: bool = True

    def __post_init__(self):
        for name in ("seeds", "mechanisms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not isinstance(self.capacities, str):
            object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        self.validate()

    def validate(self) -> None:
        if self.n_students < 1 or self.n_schools < 1:
            raise ConfigError("n_students and n_schools must be >= 1")
        if any(int(s) < 0 for s in self.seeds):
            raise ConfigError("seeds must be nonnegative")
        if self.tie_mode not in ("strict", "tied"):
            raise ConfigError(f"tie_mode must be 'strict' or 'tied', got {self.tie_mode!r}")
        if self.tie_mode == "tied" and self.max_group_size < 1:
            raise ConfigError("max_group_size must be >= 1")
        bad = [m for m in self.mechanisms if m not in MECHANISMS]
        if bad:
            raise ConfigError(f"unknown mechanisms: {', '.join(bad)}")
        if self.weight_fn not in WEIGHT_FN_KINDS:
            raise ConfigError(f"unknown weight function {self.weight_fn!r}")
        caps = self.capacity_list()
        if any(c < 1 for c in caps):
            raise ConfigError("every capacity must be >= 1")
        if sum(caps) < self.n_students:
            raise ConfigError(f"{sum(caps)} seats cannot hold {self.n_students} students")

    def capacity_list(self) -> list[int]:
        if self.capacities == "equal-split":
            total = self.n_students if self.total_seats is None else self.total_seats
            if total % self.n_schools:
                raise ConfigError(
                    f"equal-split needs {self.n_schools} schools to divide {total} seats"
                )
            return [total // self.n_schools] * self.n_schools
        if isinstance(self.capacities, str):
            raise ConfigError(f"unknown capacity mode {self.capacities!r}")
        if len(self.capacities) != self.n_schools:
            raise ConfigError(
                f"{len(self.capacities)} capacities given for {self.n_schools} schools"
            )
        return list(self.capacities)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["mechanisms"] = list(self.mechanisms)
        if not isinstance(self.capacities, str):
            d["capacities"] = list(self.capacities)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


# The three settings of the original experiments.
REFERENCE_CONFIGS = {
    "100/5": ExperimentConfig(100, 5),
    "1000/5": ExperimentConfig(1000, 5),
    "10000/50": ExperimentConfig(10000, 50),
}


def _ids(prefix: str, n: int) -> list[str]:
    width = len(str(n))
    return [f"{prefix}{i:0{width}d}" for i in range(1, n + 1)]


def generate_instance(config: ExperimentConfig, seed: int) -> Instance:
    """Random preferences over all schools, deterministic per (config, seed).

    strict: each list is an independent uniform permutation of the schools.
    tied: the permutation is cut into consecutive groups whose sizes are drawn
    uniformly from ``[1, max_group_size]`` (the last group takes the remainder).
    """
    caps = config.capacity_list()
    n, m = config.n_students, config.n_schools
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    orders = rng.permuted(np.tile(np.arange(m), (n, 1)), axis=1)
    school_ids = _ids("h", m)
    student_ids = _ids("s", n)
    prefs = {}
    if config.tie_mode == "strict":
        for sid, row in zip(student_ids, orders.tolist()):
            prefs[sid] = [[school_ids[h]] for h in row]
    else:
        sizes = rng.integers(1, config.max_group_size + 1, size=(n, m))
        for sid, row, sz in zip(student_ids, orders.tolist(), sizes.tolist()):
            groups, i, g = [], 0, 0
            while i < m:
                k = sz[g]
                groups.append([school_ids[h] for h in row[i:i + k]])
                i += k
                g += 1
            prefs[sid] = groups
    schools = [School(h, c) for h, c in zip(school_ids, caps)]
    return Instance(schools, prefs)


@dataclass(frozen=True)
class RunRecord:
    mechanism: str
    seed: int
    counts: tuple[int, ...]
    duration_ms: float | None
    stable: bool

    @property
    def max_rank(self) -> int:
        return max(k for k, c in enumerate(self.counts, 1) if c)


@dataclass
class RunReport:
    config: ExperimentConfig
    runs: list[RunRecord] = field(default_factory=list)

    def records(self, mechanism: str) -> list[RunRecord]:
        return [r for r in self.runs if r.mechanism == mechanism]

    def mean_counts(self) -> dict[str, list[float]]:
        out = {}
        for mech in self.config.mechanisms:
            recs = self.records(mech)
            if not recs:
                continue
            z = max(len(r.counts) for r in recs)
            out[mech] = [
                sum(r.counts[k] if k < len(r.counts) else 0 for r in recs) / len(recs)
                for k in range(z)
            ]
        return out

    def mean_duration_ms(self) -> dict[str, float | None]:
        out = {}
        for mech in self.config.mechanisms:
            ds = [r.duration_ms for r in self.records(mech)]
            out[mech] = None if not ds or None in ds else sum(ds) / len(ds)
        return out

    def to_dict(self) -> dict:
        durations = self.mean_duration_ms()
        return {
            "config": self.config.to_dict(),
            "runs": [
                {
                    "mechanism": r.mechanism,
                    "seed": r.seed,
                    "counts": list(r.counts),
                    "max_rank": r.max_rank,
                    "stable": r.stable,
                    "duration_ms": r.duration_ms,
                }
                for r in self.runs
            ],
            "aggregates": {
                mech: {"mean_counts": means, "mean_duration_ms": durations[mech]}
                for mech, means in self.mean_counts().items()
            },
        }


def thread_count() -> int:
    """Worker threads from ``OPTASSIGN_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get("OPTASSIGN_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"OPTASSIGN_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("OPTASSIGN_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def warm_up() -> None:
    """Load the compiled solver kernel so the first timed run does not pay for it."""
    max_weight_assignment([[1, 0], [0, 1]])


def _run_seed(config: ExperimentConfig, seed: int) -> list[RunRecord]:
    instance = generate_instance(config, seed)
    out = []
    for mech in config.mechanisms:
        t0 = time.perf_counter()
        matching = run_mechanism(mech, instance, seed, config.weight_fn)
        elapsed = (time.perf_counter() - t0) * 1000.0
        instance.check_matching(matching)
        profile = utility_profile(instance, matching)
        stable = not blocking_pairs(instance, matching)
        out.append(
            RunRecord(
                mech,
                int(seed),
                profile.counts,
                round(elapsed, 3) if config.timing else None,
                stable,
            )
        )
        log.debug("seed %s %s %s %.1f ms", seed, mech, profile.counts[:5], elapsed)
    _check_dominance(instance, out)
    return out


def _check_dominance(instance: Instance, records: Sequence[RunRecord]) -> None:
    so = [r for r in records if r.mechanism == "student-optimal"]
    if not so:
        return
    best = UtilityProfile(so[0].counts, instance.n_students)
    for r in records:
        if r.mechanism == "student-optimal":
            continue
        other = UtilityProfile(r.counts, instance.n_students)
        if compare_profiles(best, other) is Ordering.LESS:
            raise DominanceError(
                f"seed {r.seed}: student-optimal {best.counts} < {r.mechanism} {other.counts}"
            )


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> RunReport:
    """Run every mechanism on every seed; rows come back ordered by (mechanism, seed).

    Only the mechanism call is timed.  Any mechanism error or dominance
    violation aborts the whole run.
    """
    config.validate()
    if "student-optimal" in config.mechanisms:
        warm_up()
    threads = thread_count() if threads is None else max(1, threads)
    seeds = list(config.seeds)
    if threads == 1 or len(seeds) <= 1:
        per_seed = [_run_seed(config, s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_seed = list(pool.map(lambda s: _run_seed(config, s), seeds))
    mech_order = {m: i for i, m in enumerate(config.mechanisms)}
    runs = [r for recs in per_seed for r in recs]
    runs.sort(key=lambda r: (mech_order[r.mechanism], seeds.index(r.seed)))
    return RunReport(config, runs)


def report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.runs:
        dur = "" if r.duration_ms is None else f"{r.duration_ms:.3f}"
        for k, c in enumerate(r.counts, 1):
            w.writerow([r.mechanism, r.seed, k, c, dur])
    return buf.getvalue()


def report_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"


def emit_report(
    report: RunReport, out_dir, formats: Sequence[str] = REPORT_FORMATS, stem: str = "report"
) -> dict[str, Path]:
    """Write the requested formats into ``out_dir`` and return their paths.

    csv: long form ``mechanism,seed,rank,count,duration_ms``.
    json: config, per-run rows and per-mechanism means.
    svg: per-rank mean counts per mechanism (plus a duration chart when timed).
    """
    bad = [f for f in formats if f not in REPORT_FORMATS]
    if bad:
        raise ConfigError(f"unknown report formats: {', '.join(bad)}")
    out_dir = Path(out_dir)
    paths: dict[str, Path] = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            paths["csv"] = out_dir / f"{stem}.csv"
            paths["csv"].write_text(report_csv(report), encoding="utf-8")
        if "json" in formats:
            paths["json"] = out_dir / f"{stem}.json"
            paths["json"].write_text(report_json(report), encoding="utf-8")
        if "svg" in formats:
            cfg = report.config
            title = f"{cfg.n_students} students, {cfg.n_schools} schools, {len(cfg.seeds)} seeds"
            means = report.mean_counts()
            deepest = max((r.max_rank for r in report.runs), default=1)
            paths["svg"] = rank_histogram_chart(
                means, out_dir / f"{stem}_utility.svg", title=title, max_rank=deepest
            )
            durations = report.mean_duration_ms()
            if durations and all(v is not None for v in durations.values()):
                paths["timing_svg"] = duration_chart(
                    durations, out_dir / f"{stem}_timing.svg", title=title
                )
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {out_dir}: {exc}") from exc
    return paths
