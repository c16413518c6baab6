"""Assignment mechanisms: the student-optimal pipeline and two lottery baselines."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import IncompletePreferencesError, InstanceError
from .lapsolve import max_weight_assignment, seeded_permutation
from .model import Instance, Matching
from .weights import WeightFn, build_rank_matrix, build_weight_matrix

__all__ = [
    "MECHANISMS",
    "Lottery",
    "VacantSeatTable",
    "baseline_boston_rounds",
    "baseline_serial_dictatorship",
    "draw_lottery",
    "expand_vacant_seats",
    "run_mechanism",
    "student_optimal_matching",
    "tiebreak_preferences",
]

MECHANISMS = ("student-optimal", "serial-dictatorship", "boston-rounds")


@dataclass(frozen=True)
class VacantSeatTable:
    """Seats in school declaration order, each school a contiguous block."""

    seats: tuple[tuple[int, str], ...]

    def __len__(self):
        return len(self.seats)

    def owner(self, seat_index: int) -> str:
        return self.seats[seat_index][1]


def expand_vacant_seats(instance: Instance) -> VacantSeatTable:
    seats = []
    for sc in instance.schools:
        for _ in range(sc.capacity):
            seats.append((len(seats), sc.id))
    return VacantSeatTable(tuple(seats))


def student_optimal_matching(
    instance: Instance, weight_fn: str | WeightFn = "exp-minus-one", seed: int = 0
) -> Matching:
    """Stable, utility-maximal matching via a maximum-weight seat assignment.

    ``weight_fn`` is a ``WeightFn`` or one of ``"exp-minus-one"`` / ``"power-base"``,
    in which case it is bound to the instance's ``z`` and size.  ``seed`` picks
    among matchings of equal total weight.
    """
    if isinstance(weight_fn, str):
        weight_fn = WeightFn.for_instance(weight_fn, instance)
    seat_table = expand_vacant_seats(instance)
    ranks = build_rank_matrix(instance)
    weights = build_weight_matrix(ranks, weight_fn)
    assignment = max_weight_assignment(
        weights.school_weights, seed, column_groups=weights.seat_school
    )
    students = instance.student_ids
    return Matching(
        {students[i]: seat_table.owner(j) for i, j in enumerate(assignment.row_to_col)}
    )


@dataclass(frozen=True)
class Lottery:
    order: tuple[str, ...]
    seed: int

    def position(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.order)}


def draw_lottery(instance: Instance, seed: int) -> Lottery:
    """Random serial order of the students, deterministic per (student order, seed)."""
    students = instance.student_ids
    perm = seeded_permutation(len(students), seed)
    return Lottery(tuple(students[i] for i in perm), int(seed))


def _student_entropy(seed: int, student: str) -> list[int]:
    digest = hashlib.sha256(student.encode("utf-8")).digest()
    return [int(seed), int.from_bytes(digest[:8], "little")]


def tiebreak_preferences(instance: Instance, lottery: Lottery) -> Instance:
    """Split every tie-group into singletons.

    Group ``g`` of a student is shuffled with entropy ``[lottery.seed, h(student), g]``
    where ``h`` is the first 8 bytes (little-endian) of SHA-256 of the id, so a
    student's strict list does not depend on the other students.
    """
    if instance.is_strict():
        return instance
    prefs = {}
    for sid, groups in instance.preferences.items():
        flat = []
        for gi, group in enumerate(groups):
            if len(group) == 1:
                flat.append((group[0],))
                continue
            perm = seeded_permutation(len(group), _student_entropy(lottery.seed, sid) + [gi])
            flat.extend((group[k],) for k in perm)
        prefs[sid] = flat
    return Instance(instance.schools, prefs, policy=instance.policy)


def _require_strict(instance: Instance) -> None:
    if not instance.is_strict():
        raise InstanceError("baseline mechanisms need strict preferences; call tiebreak_preferences")


def baseline_serial_dictatorship(strict_instance: Instance, lottery: Lottery) -> Matching:
    """Students in lottery order each take their best school with a free seat."""
    _require_strict(strict_instance)
    free = {sc.id: sc.capacity for sc in strict_instance.schools}
    pairs = {}
    for sid in lottery.order:
        for (h,) in strict_instance.preferences[sid]:
            if free[h] > 0:
                free[h] -= 1
                pairs[sid] = h
                break
        else:
            raise IncompletePreferencesError(
                f"student {sid!r} exhausted their list while seats remain elsewhere"
            )
    return Matching(pairs)


def baseline_boston_rounds(strict_instance: Instance, lottery: Lottery) -> Matching:
    """Immediate acceptance: round ``k`` applicants take free seats in lottery order."""
    _require_strict(strict_instance)
    free = {sc.id: sc.capacity for sc in strict_instance.schools}
    prefs = strict_instance.preferences
    pairs = {}
    unassigned = list(lottery.order)
    k = 0
    while unassigned:
        if all(k >= len(prefs[s]) for s in unassigned):
            raise IncompletePreferencesError(
                f"students {', '.join(unassigned[:5])} exhausted their lists"
            )
        still = []
        # lottery order doubles as each school's admission order
        for sid in unassigned:
            if k < len(prefs[sid]):
                (h,) = prefs[sid][k]
                if free[h] > 0:
                    free[h] -= 1
                    pairs[sid] = h
                    continue
            still.append(sid)
        unassigned = still
        k += 1
    return Matching(pairs)


def run_mechanism(
    name: str, instance: Instance, seed: int = 0, weight_fn: str | WeightFn = "exp-minus-one"
) -> Matching:
    """Dispatch by CLI name; baselines draw their lottery and tie-break from ``seed``."""
    if name == "student-optimal":
        return student_optimal_matching(instance, weight_fn, seed)
    if name not in MECHANISMS:
        raise ValueError(f"unknown mechanism {name!r}; choose from {', '.join(MECHANISMS)}")
    lottery = draw_lottery(instance, seed)
    strict = tiebreak_preferences(instance, lottery)
    if name == "serial-dictatorship":
        return baseline_serial_dictatorship(strict, lottery)
    return baseline_boston_rounds(strict, lottery)
