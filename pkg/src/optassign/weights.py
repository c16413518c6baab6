"""Rank-to-weight transforms and the rank/weight matrices over vacant seats.

A transform ``w`` is usable for the reduction when, for any student ``s``
holding school ``h'`` and any student ``s'`` holding school ``h``,

    r(s, h) < r(s, h')  and  r(s, h) < r(s', h)  =>  w(r(s, h)) > w(r(s', h)) + w(r(s, h'))

with ``w >= 0``.  Since ``w`` only sees ranks, the tightest instance puts both
``r(s', h)`` and ``r(s, h')`` at ``k + 1`` for ``r(s, h) = k``, which gives the
adjacent check ``w(k) > 2 * w(k + 1)``.  That check plus ``w(z) >= 0`` forces
``w`` to be strictly decreasing, so any deeper pair sums to even less and the
full condition follows.  ``validate_weight_fn`` therefore runs in O(z).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    IncompletePreferencesError,
    InvalidWeightFnError,
    WeightOverflowError,
    ZTooLargeError,
)
from .model import Instance

__all__ = [
    "ACCUMULATOR_LIMIT",
    "WEIGHT_FN_KINDS",
    "RankMatrix",
    "Violation",
    "WeightFn",
    "WeightMatrix",
    "build_rank_matrix",
    "build_weight_matrix",
    "validate_weight_fn",
    "weight_exp_minus_one",
    "weight_power_base",
]

# Sums of up to n_students weights must stay below this.
ACCUMULATOR_LIMIT = 2**63
WEIGHT_LIMIT = 2**63 - 1

WEIGHT_FN_KINDS = ("exp-minus-one", "power-base")


def _check_rank(rank: int, z: int) -> None:
    if z < 1 or not 1 <= rank <= z:
        raise ValueError(f"rank must satisfy 1 <= rank <= z, got rank={rank}, z={z}")


def weight_exp_minus_one(rank: int, z: int) -> int:
    """``2**(z - rank) - 1``."""
    if z > 63:
        raise ZTooLargeError(f"z={z} exceeds 63; 2**(z-1) - 1 overflows 64-bit weights")
    _check_rank(rank, z)
    return 2 ** (z - rank) - 1


def weight_power_base(rank: int, z: int, n_students: int) -> int:
    """``(n_students + 1)**(z - rank)``."""
    _check_rank(rank, z)
    if n_students < 1:
        raise ValueError("n_students must be >= 1")
    if (n_students + 1) ** (z - 1) > WEIGHT_LIMIT:
        raise WeightOverflowError(
            f"({n_students}+1)**({z}-1) exceeds the 64-bit weight domain"
        )
    return (n_students + 1) ** (z - rank)


@dataclass(frozen=True)
class WeightFn:
    """One of the two named weight families, bound to ``z`` (and ``n`` for power-base)."""

    kind: str
    z: int
    n_students: int | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_FN_KINDS:
            raise InvalidWeightFnError(
                f"unknown weight function {self.kind!r}; choose from {', '.join(WEIGHT_FN_KINDS)}"
            )
        if self.z < 1:
            raise InvalidWeightFnError("z must be >= 1")
        if self.kind == "power-base" and (self.n_students is None or self.n_students < 1):
            raise InvalidWeightFnError("power-base needs n_students >= 1")
        # surfaces Z_TOO_LARGE / WEIGHT_OVERFLOW at construction
        self(1)

    @classmethod
    def for_instance(cls, kind: str, instance: Instance) -> "WeightFn":
        n = instance.n_students if kind == "power-base" else None
        return cls(kind, instance.z, n)

    def __call__(self, rank: int) -> int:
        if self.kind == "exp-minus-one":
            return weight_exp_minus_one(rank, self.z)
        return weight_power_base(rank, self.z, self.n_students)

    def table(self) -> list[int]:
        """``[w(1), ..., w(z)]``."""
        return [self(k) for k in range(1, self.z + 1)]


@dataclass(frozen=True)
class Violation:
    """First rank ``k`` where ``w(k) > 2 * w(k + 1)`` fails (or ``w(z) < 0`` at ``k = z``)."""

    rank: int


def validate_weight_fn(w: Callable[[int], int], z: int) -> Violation | None:
    """Return ``None`` when ``w`` satisfies the exchange condition on ranks ``1..z``."""
    prev = w(1)
    for k in range(1, z):
        nxt = w(k + 1)
        if not prev > 2 * nxt:
            return Violation(k)
        prev = nxt
    if prev < 0:
        return Violation(z)
    return None


@dataclass(frozen=True, eq=False)
class RankMatrix:
    """Ranks of students (rows) over vacant seats (columns).

    Stored compactly: ``school_ranks[i, h]`` is the rank student ``i`` gives
    school ``h`` and ``seat_school[j]`` is the school owning seat ``j``.
    ``values`` materializes the dense students x seats array.
    """

    school_ranks: np.ndarray
    seat_school: np.ndarray
    z: int
    student_ids: tuple[str, ...] = ()
    school_ids: tuple[str, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.school_ranks.shape[0], self.seat_school.shape[0])

    @property
    def values(self) -> np.ndarray:
        return self.school_ranks[:, self.seat_school]


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Integer weights over students x seats, stored compactly like ``RankMatrix``."""

    school_weights: np.ndarray
    seat_school: np.ndarray
    weight_fn: WeightFn | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.school_weights.shape[0], self.seat_school.shape[0])

    @property
    def values(self) -> np.ndarray:
        return self.school_weights[:, self.seat_school]


def seat_owner_array(instance: Instance) -> np.ndarray:
    """Seat -> school position; schools in declaration order, contiguous blocks."""
    caps = np.array([sc.capacity for sc in instance.schools], dtype=np.int64)
    return np.repeat(np.arange(len(caps), dtype=np.int64), caps)


def build_rank_matrix(instance: Instance) -> RankMatrix:
    ranks = instance.rank_array
    if (ranks == 0).any():
        i = int(np.argwhere(ranks == 0)[0, 0])
        raise IncompletePreferencesError(
            f"student {instance.student_ids[i]!r} does not rank every school"
        )
    return RankMatrix(
        school_ranks=ranks,
        seat_school=seat_owner_array(instance),
        z=instance.z,
        student_ids=instance.student_ids,
        school_ids=instance.school_ids,
    )


def build_weight_matrix(rank_matrix: RankMatrix, weight_fn: WeightFn) -> WeightMatrix:
    """Apply ``weight_fn`` to every rank and check the accumulator bound.

    Raises:
        InvalidWeightFnError: ``weight_fn`` fails validation for ``rank_matrix.z``.
        WeightOverflowError: ``n_students * w(1)`` would not fit below 2**63.
    """
    z = rank_matrix.z
    if weight_fn.z < z:
        raise InvalidWeightFnError(f"weight function built for z={weight_fn.z}, matrix has z={z}")
    violation = validate_weight_fn(weight_fn, weight_fn.z)
    if violation is not None:
        raise InvalidWeightFnError(
            f"{weight_fn.kind} violates w(k) > 2*w(k+1) at rank {violation.rank}"
        )
    table = weight_fn.table()
    n = rank_matrix.shape[0]
    if n * table[0] >= ACCUMULATOR_LIMIT:
        raise WeightOverflowError(
            f"{n} students x w(1)={table[0]} overflows the 64-bit accumulator"
        )
    lookup = np.array([0] + table, dtype=np.int64)
    weights = lookup[rank_matrix.school_ranks]
    weights.setflags(write=False)
    return WeightMatrix(weights, rank_matrix.seat_school, weight_fn)
