"""Correctness oracles: weak stability and brute-force optima for small instances.

Schools hold no preferences of their own.  Stability is judged under the
symmetric reading: school ``h`` ranks student ``s`` exactly as ``s`` ranks ``h``.
So ``(s, h)`` blocks when ``s`` strictly prefers ``h`` to its own school and
``h`` either has a free seat or holds some ``s'`` with ``r(s', h) > r(s, h)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InstanceTooLargeError, ShapeError
from .lapsolve import Assignment
from .model import Instance, Matching, UtilityProfile, utility_profile
from .weights import WeightMatrix

__all__ = [
    "ENUMERATION_LIMIT",
    "BlockingPair",
    "StabilityReport",
    "blocking_pairs",
    "enumerate_complete_matchings",
    "is_weakly_stable",
    "oracle_max_weight",
    "oracle_student_optimal",
]

# 9! = 362 880 seat orderings at most
ENUMERATION_LIMIT = 9


@dataclass(frozen=True, order=True)
class BlockingPair:
    student: str
    school: str
    # None when the school has a free seat
    displaced: str | None = None


@dataclass(frozen=True)
class StabilityReport:
    blocking_pairs: tuple[BlockingPair, ...]

    @property
    def stable(self) -> bool:
        return not self.blocking_pairs

    def __bool__(self):
        return self.stable

    def __str__(self):
        if self.stable:
            return "Stable"
        lines = [f"Unstable ({len(self.blocking_pairs)} blocking pairs)"]
        for bp in self.blocking_pairs:
            held = "free seat" if bp.displaced is None else f"displaces {bp.displaced}"
            lines.append(f"  ({bp.student}, {bp.school}) {held}")
        return "\n".join(lines)


def blocking_pairs(instance: Instance, matching: Matching) -> list[BlockingPair]:
    """All blocking pairs sorted by (student, school)."""
    instance.check_matching(matching)
    ranks = instance.rank_array
    n, m = ranks.shape
    unlisted = instance.z + 1
    eff = np.where(ranks == 0, unlisted, ranks)
    students = instance.student_ids
    schools = instance.school_ids

    assigned = np.array([instance.school_position(matching[s]) for s in students], dtype=np.int64)
    rows = np.arange(n)
    current = eff[rows, assigned]
    load = np.bincount(assigned, minlength=m)
    caps = np.array([sc.capacity for sc in instance.schools])
    free = load < caps

    # worst occupant rank per school; 0 where empty
    occ_rank = eff[rows, assigned]
    worst = np.zeros(m, dtype=np.int64)
    np.maximum.at(worst, assigned, occ_rank)

    better = (ranks > 0) & (eff < current[:, None])
    blocks = better & (free[None, :] | (worst[None, :] > eff))
    if not blocks.any():
        return []

    # pick the displaced occupant: worst rank, then smallest id
    displaced_of: dict[int, str] = {}
    for h in np.flatnonzero(blocks.any(axis=0)):
        if free[h]:
            continue
        occ = [i for i in np.flatnonzero(assigned == h)]
        worst_i = min(occ, key=lambda i: (-occ_rank[i], students[i]))
        displaced_of[int(h)] = students[worst_i]

    out = []
    for i, h in zip(*np.nonzero(blocks)):
        out.append(
            BlockingPair(students[i], schools[h], None if free[h] else displaced_of[int(h)])
        )
    out.sort(key=lambda bp: (bp.student, bp.school))
    return out


def is_weakly_stable(instance: Instance, matching: Matching) -> StabilityReport:
    return StabilityReport(tuple(blocking_pairs(instance, matching)))


def enumerate_complete_matchings(instance: Instance) -> Iterator[Matching]:
    """Every capacity-respecting matching of all students to listed schools, once each.

    Order: students in instance order pick schools in declaration order (odometer).
    """
    if instance.n_seats > ENUMERATION_LIMIT:
        raise InstanceTooLargeError(
            f"{instance.n_seats} seats exceed the enumeration limit of {ENUMERATION_LIMIT}"
        )
    students = instance.student_ids
    options = [
        [h for h in instance.school_ids if h in instance.ranks_of(s)] for s in students
    ]
    free = {sc.id: sc.capacity for sc in instance.schools}
    chosen: list[str] = []

    def rec(i):
        if i == len(students):
            yield Matching(zip(students, chosen))
            return
        for h in options[i]:
            if free[h]:
                free[h] -= 1
                chosen.append(h)
                yield from rec(i + 1)
                chosen.pop()
                free[h] += 1

    yield from rec(0)


def oracle_student_optimal(instance: Instance) -> tuple[UtilityProfile, list[Matching]]:
    """Lexicographically largest profile over all complete matchings, with all witnesses."""
    best = None
    witnesses: list[Matching] = []
    for m in enumerate_complete_matchings(instance):
        counts = utility_profile(instance, m).counts
        if best is None or counts > best:
            best, witnesses = counts, [m]
        elif counts == best:
            witnesses.append(m)
    if best is None:
        raise ValueError("instance admits no complete matching")
    return UtilityProfile(best, instance.n_students), witnesses


def oracle_max_weight(weight_matrix) -> tuple[int, list[Assignment]]:
    """Exact maximum total weight over all injective row -> column maps, with witnesses."""
    if isinstance(weight_matrix, WeightMatrix):
        values = weight_matrix.values
    else:
        values = np.asarray(weight_matrix, dtype=object)
    if values.ndim != 2:
        raise ShapeError("weight matrix must be 2-D")
    rows, cols = values.shape
    if rows > cols:
        raise ShapeError(f"{rows} rows cannot be assigned to {cols} columns")
    if cols > ENUMERATION_LIMIT:
        raise InstanceTooLargeError(
            f"{cols} columns exceed the enumeration limit of {ENUMERATION_LIMIT}"
        )
    table = [[int(x) for x in row] for row in values.tolist()]
    best = None
    witnesses: list[Assignment] = []
    for cols_chosen in itertools.permutations(range(cols), rows):
        total = sum(table[i][j] for i, j in enumerate(cols_chosen))
        if best is None or total > best:
            best, witnesses = total, [Assignment(cols_chosen, total)]
        elif total == best:
            witnesses.append(Assignment(cols_chosen, total))
    return best, witnesses
