"""Core domain types: instances, preference ranks, matchings and utility profiles.

Preferences are stored as ordered tie-groups.  The rank of a school for a
student is the 1-based index of the group containing it, so ``b: (A B) C``
gives ``rank(b, A) == rank(b, B) == 1`` and ``rank(b, C) == 2``.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    IncompletePreferencesError,
    InstanceError,
    MatchingError,
    ProfileShapeMismatch,
    UnknownIdError,
    UnrankedPairError,
)

__all__ = [
    "COMPLETENESS_POLICIES",
    "Instance",
    "Matching",
    "Ordering",
    "School",
    "UtilityProfile",
    "compare_profiles",
    "rank",
    "read_matching_csv",
    "utility_profile",
    "utility_scalar_digits",
    "write_matching_csv",
    "z_max",
]

# "complete": every student ranks every school (default).
# "complete-with-tail": unlisted schools are appended as one final tie-group.
# "partial": short lists are kept; solvers that need full rows will refuse them.
COMPLETENESS_POLICIES = ("complete", "complete-with-tail", "partial")

_ID_RE = re.compile(r"^[^\s,]+$")


def _check_id(value, what: str) -> str:
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise InstanceError(
            f"{what} id must be a nonempty string without commas or whitespace, got {value!r}"
        )
    return value


@dataclass(frozen=True)
class School:
    id: str
    capacity: int

    def __post_init__(self):
        _check_id(self.id, "school")
        if isinstance(self.capacity, bool) or not isinstance(self.capacity, (int, np.integer)):
            raise InstanceError(f"capacity of school {self.id!r} must be an integer")
        if self.capacity < 1:
            raise InstanceError(f"capacity of school {self.id!r} must be >= 1, got {self.capacity}")
        object.__setattr__(self, "capacity", int(self.capacity))


class Instance:
    """A school-choice market: schools with capacities, students with tie-grouped lists.

    Args:
        schools: schools in declaration order (this order fixes seat order).
        preferences: student id -> sequence of tie-groups, most preferred first.
        policy: one of ``COMPLETENESS_POLICIES``.

    Raises:
        InstanceError: malformed ids, duplicate entries, or more students than seats.
        UnknownIdError: a preference list names a school that does not exist.
        IncompletePreferencesError: a list is short under the ``complete`` policy.
    """

    def __init__(
        self,
        schools: Iterable[School],
        preferences: Mapping[str, Sequence[Sequence[str]]],
        policy: str = "complete",
    ):
        if policy not in COMPLETENESS_POLICIES:
            raise InstanceError(f"unknown completeness policy {policy!r}")
        schools = tuple(schools)
        if not schools:
            raise InstanceError("instance needs at least one school")
        school_index = {}
        for i, sc in enumerate(schools):
            if not isinstance(sc, School):
                raise InstanceError(f"expected School, got {type(sc).__name__}")
            if sc.id in school_index:
                raise InstanceError(f"duplicate school id {sc.id!r}")
            school_index[sc.id] = i

        prefs = {}
        for sid, groups in preferences.items():
            _check_id(sid, "student")
            prefs[sid] = _normalize_groups(sid, groups, school_index, policy)

        if not prefs:
            raise InstanceError("instance needs at least one student")
        seats = sum(sc.capacity for sc in schools)
        if len(prefs) > seats:
            raise InstanceError(
                f"{len(prefs)} students exceed the {seats} available seats"
            )

        self._schools = schools
        self._school_index = MappingProxyType(school_index)
        self._prefs = MappingProxyType(prefs)
        self._ranks = MappingProxyType(
            {
                sid: MappingProxyType({h: k for k, g in enumerate(gs, 1) for h in g})
                for sid, gs in prefs.items()
            }
        )
        self._student_index = MappingProxyType({s: i for i, s in enumerate(prefs)})
        self.policy = policy

    # -- accessors -------------------------------------------------------

    @property
    def schools(self) -> tuple[School, ...]:
        return self._schools

    @property
    def preferences(self) -> Mapping[str, tuple[tuple[str, ...], ...]]:
        return self._prefs

    @property
    def student_ids(self) -> tuple[str, ...]:
        return tuple(self._prefs)

    @property
    def school_ids(self) -> tuple[str, ...]:
        return tuple(sc.id for sc in self._schools)

    @property
    def n_students(self) -> int:
        return len(self._prefs)

    @property
    def n_seats(self) -> int:
        return sum(sc.capacity for sc in self._schools)

    def capacity(self, school: str) -> int:
        return self._schools[self.school_position(school)].capacity

    def school_position(self, school: str) -> int:
        try:
            return self._school_index[school]
        except KeyError:
            raise UnknownIdError(f"unknown school {school!r}") from None

    def student_position(self, student: str) -> int:
        try:
            return self._student_index[student]
        except KeyError:
            raise UnknownIdError(f"unknown student {student!r}") from None

    def ranks_of(self, student: str) -> Mapping[str, int]:
        """School -> rank for one student (listed schools only)."""
        try:
            return self._ranks[student]
        except KeyError:
            raise UnknownIdError(f"unknown student {student!r}") from None

    def rank(self, student: str, school: str) -> int:
        ranks = self.ranks_of(student)
        self.school_position(school)
        try:
            return ranks[school]
        except KeyError:
            raise UnrankedPairError(
                f"school {school!r} is not on the list of student {student!r}"
            ) from None

    def is_complete(self) -> bool:
        m = len(self._schools)
        return all(len(r) == m for r in self._ranks.values())

    def is_strict(self) -> bool:
        return all(len(g) == 1 for gs in self._prefs.values() for g in gs)

    @cached_property
    def z(self) -> int:
        return max(len(gs) for gs in self._prefs.values())

    @cached_property
    def rank_array(self) -> np.ndarray:
        """Dense ``(n_students, n_schools)`` rank table; 0 marks an unlisted school."""
        out = np.zeros((self.n_students, len(self._schools)), dtype=np.int64)
        for i, sid in enumerate(self._prefs):
            for h, k in self._ranks[sid].items():
                out[i, self._school_index[h]] = k
        out.setflags(write=False)
        return out

    # -- matching checks --------------------------------------------------

    def check_matching(self, matching: "Matching") -> None:
        """Raise unless ``matching`` assigns every student within capacity."""
        pairs = matching.pairs
        for s, h in pairs.items():
            self.student_position(s)
            self.school_position(h)
        missing = [s for s in self._prefs if s not in pairs]
        if missing:
            raise MatchingError(f"students left unassigned: {', '.join(missing[:5])}")
        load = matching.school_loads()
        for sc in self._schools:
            if load.get(sc.id, 0) > sc.capacity:
                raise MatchingError(
                    f"school {sc.id!r} holds {load[sc.id]} students, capacity {sc.capacity}"
                )

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schools": [{"id": sc.id, "capacity": sc.capacity} for sc in self._schools],
            "students": [
                {"id": sid, "preferences": [list(g) for g in gs]}
                for sid, gs in self._prefs.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=None, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping, policy: str = "complete") -> "Instance":
        try:
            schools = [School(d["id"], d["capacity"]) for d in data["schools"]]
            prefs = {}
            for d in data["students"]:
                sid = d["id"]
                if sid in prefs:
                    raise InstanceError(f"duplicate student id {sid!r}")
                prefs[sid] = d["preferences"]
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance document: {exc!r}") from None
        return cls(schools, prefs, policy=policy)

    @classmethod
    def from_json(cls, text: str, policy: str = "complete") -> "Instance":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data, policy=policy)

    @classmethod
    def load(cls, path, policy: str = "complete") -> "Instance":
        return cls.from_json(Path(path).read_text(encoding="utf-8"), policy=policy)

    def dump(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    # -- dunder -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self._schools == other._schools and list(self._prefs.items()) == list(
            other._prefs.items()
        )

    def __hash__(self):
        return hash((self._schools, tuple(self._prefs.items())))

    def __repr__(self):
        return (
            f"Instance(n_students={self.n_students}, n_schools={len(self._schools)}, "
            f"n_seats={self.n_seats}, z={self.z})"
        )


def _normalize_groups(sid, groups, school_index, policy) -> tuple[tuple[str, ...], ...]:
    if isinstance(groups, (str, bytes)) or not isinstance(groups, Sequence):
        raise InstanceError(f"preferences of {sid!r} must be a list of tie-groups")
    groups = [list(g) if not isinstance(g, str) else [g] for g in groups]
    # trailing "( )" groups carry no schools and are dropped
    while groups and not groups[-1]:
        groups.pop()
    seen = set()
    out = []
    for g in groups:
        if not g:
            raise InstanceError(f"student {sid!r} has an empty tie-group before a nonempty one")
        for h in g:
            if h not in school_index:
                raise UnknownIdError(f"student {sid!r} lists unknown school {h!r}")
            if h in seen:
                raise InstanceError(f"student {sid!r} lists school {h!r} more than once")
            seen.add(h)
        out.append(tuple(g))
    if len(seen) < len(school_index):
        if policy == "complete":
            raise IncompletePreferencesError(
                f"student {sid!r} ranks {len(seen)} of {len(school_index)} schools"
            )
        if policy == "complete-with-tail":
            out.append(tuple(h for h in school_index if h not in seen))
    if not out:
        raise InstanceError(f"student {sid!r} has an empty preference list")
    return tuple(out)


def rank(instance: Instance, student: str, school: str) -> int:
    """1-based index of the tie-group holding ``school`` on ``student``'s list."""
    return instance.rank(student, school)


def z_max(instance: Instance) -> int:
    """Largest rank used by any student."""
    return instance.z


class Matching:
    """Student -> school assignment.  Immutable and hashable."""

    __slots__ = ("_pairs", "_hash")

    def __init__(self, pairs: Mapping[str, str] | Iterable[tuple[str, str]]):
        pairs = dict(pairs)
        self._pairs = MappingProxyType(dict(sorted(pairs.items())))
        self._hash = hash(frozenset(pairs.items()))

    @property
    def pairs(self) -> Mapping[str, str]:
        return self._pairs

    def __getitem__(self, student: str) -> str:
        return self._pairs[student]

    def __len__(self):
        return len(self._pairs)

    def __iter__(self):
        return iter(self._pairs.items())

    def school_loads(self) -> dict[str, int]:
        load: dict[str, int] = {}
        for h in self._pairs.values():
            load[h] = load.get(h, 0) + 1
        return load

    def occupants(self) -> dict[str, list[str]]:
        occ: dict[str, list[str]] = {}
        for s, h in self._pairs.items():
            occ.setdefault(h, []).append(s)
        return occ

    def __eq__(self, other):
        if not isinstance(other, Matching):
            return NotImplemented
        return self._pairs == other._pairs

    def __hash__(self):
        return self._hash

    def __repr__(self):
        body = ", ".join(f"({s}, {h})" for s, h in self._pairs.items())
        return f"Matching({{{body}}})"


def write_matching_csv(instance: Instance, matching: Matching, dest=None) -> str:
    """Serialize as ``student_id,school_id,rank`` rows sorted by student id.

    Returns the CSV text; also writes it when ``dest`` is a path or text stream.
    """
    instance.check_matching(matching)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["student_id", "school_id", "rank"])
    for s, h in sorted(matching.pairs.items()):
        w.writerow([s, h, instance.rank(s, h)])
    text = buf.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    elif dest is not None:
        dest.write(text)
    return text


def read_matching_csv(src: str | Path | IO[str]) -> Matching:
    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="utf-8")
    else:
        text = src.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]][:2] != ["student_id", "school_id"]:
        raise MatchingError("matching CSV must start with header student_id,school_id,rank")
    pairs = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) < 2:
            raise MatchingError(f"line {lineno}: expected student_id,school_id[,rank]")
        s, h = row[0].strip(), row[1].strip()
        if s in pairs:
            raise MatchingError(f"line {lineno}: student {s!r} assigned twice")
        pairs[s] = h
    return Matching(pairs)


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class UtilityProfile:
    """Rank histogram ``(q_1, ..., q_z)``: ``q_k`` students matched at rank ``k``.

    The histogram is the digit vector of the preference utility written in
    base ``n_students + 1``; digits are bounded by ``n_students`` so no carry
    ever occurs and numeric order equals lexicographic order on ``counts``.
    """

    counts: tuple[int, ...]
    n_students: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts:
            raise ProfileShapeMismatch("profile needs at least one rank")
        if any(c < 0 or c > self.n_students for c in counts):
            raise ProfileShapeMismatch(f"counts {counts} outside [0, {self.n_students}]")
        if sum(counts) != self.n_students:
            raise ProfileShapeMismatch(
                f"counts {counts} sum to {sum(counts)}, expected {self.n_students}"
            )

    @property
    def z(self) -> int:
        return len(self.counts)

    @property
    def base(self) -> int:
        return self.n_students + 1

    @property
    def max_rank(self) -> int:
        """Deepest rank with a nonzero count."""
        return max(k for k, c in enumerate(self.counts, 1) if c)

    def digits(self) -> str:
        return utility_scalar_digits(self)

    def _cmp(self, other) -> int:
        return int(compare_profiles(self, other))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0


def utility_profile(instance: Instance, matching: Matching) -> UtilityProfile:
    instance.check_matching(matching)
    counts = [0] * instance.z
    for s, h in matching.pairs.items():
        counts[instance.rank(s, h) - 1] += 1
    return UtilityProfile(tuple(counts), instance.n_students)


def utility_scalar_digits(profile: UtilityProfile | Sequence[int], n_students: int | None = None) -> str:
    """Render the utility as its base-(n+1) digit string, e.g. ``"300 (base 4)"``.

    Also accepts a bare digit vector plus ``n_students``, which is not checked
    against the histogram invariants.  Bases above 10 have multi-character
    digits, so digits are then joined by ``:``.
    """
    if isinstance(profile, UtilityProfile):
        counts, base = profile.counts, profile.base
    else:
        if n_students is None:
            raise TypeError("n_students is required with a bare digit vector")
        counts, base = tuple(int(c) for c in profile), n_students + 1
    sep = "" if base <= 10 else ":"
    return f"{sep.join(str(c) for c in counts)} (base {base})"


def compare_profiles(p1: UtilityProfile, p2: UtilityProfile) -> Ordering:
    if p1.z != p2.z or p1.n_students != p2.n_students:
        raise ProfileShapeMismatch(
            f"cannot compare profiles with (z, n) = ({p1.z}, {p1.n_students}) "
            f"and ({p2.z}, {p2.n_students})"
        )
    if p1.counts == p2.counts:
        return Ordering.EQUAL
    return Ordering.GREATER if p1.counts > p2.counts else Ordering.LESS
