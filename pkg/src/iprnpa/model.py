"""Domain types for the integrated patient-to-room / nurse-to-patient problem.

Shifts are 1-based and chronological: day ``d`` owns shifts ``3d-2`` (early),
``3d-1`` (late) and ``3d`` (night).  A patient occupies whole days: admission
happens before an early shift and discharge after a night shift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

EARLY, LATE, NIGHT = "early", "late", "night"
SHIFT_TYPES = (EARLY, LATE, NIGHT)
MAX_AGE = 129  # keeps age groups <= 12 so the big-M of the age rows stays valid


def shift_type(s: int, num_shifts: Optional[int] = None) -> str:
    if s < 1 or (num_shifts is not None and s > num_shifts):
        raise ValueError(f"shift index {s} out of range")
    return SHIFT_TYPES[(s - 1) % 3]


def day_of(s: int) -> int:
    if s < 1:
        raise ValueError(f"shift index {s} out of range")
    return (s + 2) // 3


def shifts_of_day(d: int) -> tuple[int, int, int]:
    if d < 1:
        raise ValueError(f"day {d} out of range")
    return (3 * d - 2, 3 * d - 1, 3 * d)


@dataclass(frozen=True)
class ShiftCalendar:
    num_days: int

    def __post_init__(self):
        if self.num_days < 1:
            raise ValueError("num_days must be positive")

    @property
    def S(self) -> int:
        return 3 * self.num_days

    @property
    def shifts(self) -> range:
        return range(1, self.S + 1)

    @property
    def days(self) -> range:
        return range(1, self.num_days + 1)

    def early_shifts(self) -> list[int]:
        return [3 * d - 2 for d in self.days]

    def late_shifts(self) -> list[int]:
        return [3 * d - 1 for d in self.days]

    def night_shifts(self) -> list[int]:
        return [3 * d for d in self.days]

    def shift_type(self, s: int) -> str:
        return shift_type(s, self.S)


@dataclass(frozen=True)
class Room:
    id: str
    num_beds: int
    equipment: frozenset = frozenset()


@dataclass(frozen=True)
class AdditionalRoom:
    id: str


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric room-to-room distances plus additional-room-to-room distances."""

    room_room: Mapping[tuple[str, str], float]
    add_room: Mapping[tuple[str, str], float]

    def rr(self, r: str, r2: str) -> float:
        if r == r2:
            return 0.0
        return self.room_room[(r, r2)]

    def ar(self, a: str, r: str) -> float:
        return self.add_room[(a, r)]


@dataclass(frozen=True)
class Patient:
    id: str
    gender: str
    age: int
    adshift: int
    dishift: int
    skillreq: Mapping[int, int] = field(default_factory=dict)
    workload: Mapping[int, float] = field(default_factory=dict)
    equipment_req: Mapping[int, frozenset] = field(default_factory=dict)
    prev_room: Optional[str] = None
    prev_nurses: frozenset = frozenset()

    @property
    def agegroup(self) -> int:
        return self.age // 10

    def in_ward(self, s: int) -> bool:
        return self.adshift <= s <= self.dishift

    def first_day(self) -> int:
        return 1 if self.adshift == 0 else day_of(self.adshift)

    def last_day(self, num_days: int) -> int:
        return day_of(min(self.dishift, 3 * num_days))

    def stay_days(self, num_days: int) -> range:
        return range(self.first_day(), self.last_day(num_days) + 1)

    def stay_shifts(self, num_days: int) -> range:
        return range(3 * self.first_day() - 2, 3 * self.last_day(num_days) + 1)


def in_ward(p: Patient, s: int) -> bool:
    return p.in_ward(s)


@dataclass(frozen=True)
class Nurse:
    id: str
    skill: int
    shifts: frozenset
    maxload: Mapping[int, float] = field(default_factory=dict)

    def works(self, s: int) -> bool:
        return s in self.shifts


@dataclass(frozen=True)
class WalkWeights:
    circular: Mapping[int, float]
    star: Mapping[int, float]


@dataclass(frozen=True)
class ObjectiveWeights:
    transfers: float = 11.0
    inconvenience: float = 1.0
    gender: float = 5.0
    equipment: float = 5.0
    continuity: float = 1.0
    skill_load_fair: float = 5.0
    nurses_per_room: float = 2.0
    walking: float = 0.05
    heterogeneity: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Instance:
    num_days: int
    rooms: tuple[Room, ...]
    additional_rooms: tuple[AdditionalRoom, ...]
    distances: DistanceMatrix
    patients: tuple[Patient, ...]
    nurses: tuple[Nurse, ...]
    walk_weights: WalkWeights
    weights: ObjectiveWeights = ObjectiveWeights()
    equipment_types: tuple[str, ...] = ()
    name: str = ""

    @cached_property
    def calendar(self) -> ShiftCalendar:
        return ShiftCalendar(self.num_days)

    @property
    def S(self) -> int:
        return 3 * self.num_days

    @cached_property
    def room_by_id(self) -> dict[str, Room]:
        return {r.id: r for r in self.rooms}

    @cached_property
    def patient_by_id(self) -> dict[str, Patient]:
        return {p.id: p for p in self.patients}

    @cached_property
    def nurse_by_id(self) -> dict[str, Nurse]:
        return {n.id: n for n in self.nurses}

    @cached_property
    def room_ids(self) -> list[str]:
        return sorted(self.room_by_id)

    @cached_property
    def patient_ids(self) -> list[str]:
        return sorted(self.patient_by_id)

    @cached_property
    def nurse_ids(self) -> list[str]:
        return sorted(self.nurse_by_id)

    @cached_property
    def additional_ids(self) -> list[str]:
        return sorted(a.id for a in self.additional_rooms)

    @cached_property
    def nurses_on(self) -> dict[int, list[str]]:
        """Sorted ids of nurses rostered on each shift."""
        out: dict[int, list[str]] = {s: [] for s in range(1, self.S + 1)}
        for n in self.nurses:
            for s in n.shifts:
                if s in out:
                    out[s].append(n.id)
        for s in out:
            out[s].sort()
        return out

    def patients_on_day(self, d: int) -> list[str]:
        s = 3 * d - 2
        return [pid for pid in self.patient_ids if self.patient_by_id[pid].in_ward(s)]

    @property
    def total_beds(self) -> int:
        return sum(r.num_beds for r in self.rooms)


@dataclass(frozen=True)
class Solution:
    """``room_of[(patient, day)]`` and ``nurse_of[(patient, shift)]``."""

    room_of: Mapping[tuple[str, int], str]
    nurse_of: Mapping[tuple[str, int], str]


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    message: str = ""


def _finite_nonneg(v) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v) and v >= 0


def _check_keys(got: Iterable[int], want: Iterable[int]) -> bool:
    return set(got) == set(want)


def validate_instance(inst: Instance) -> list[Violation]:
    """Return every broken instance invariant; an empty list means valid."""
    out: list[Violation] = []

    def bad(fld: str, rule: str, msg: str = "") -> None:
        out.append(Violation(fld, rule, msg))

    if inst.num_days < 1:
        bad("num_days", "positive")
        return out
    S = inst.S
    E = set(inst.equipment_types)

    room_ids = [r.id for r in inst.rooms]
    if len(set(room_ids)) != len(room_ids):
        bad("rooms", "unique-ids")
    for r in inst.rooms:
        if not isinstance(r.num_beds, int) or not 1 <= r.num_beds <= 4:
            bad(f"rooms[{r.id}].num_beds", "range-1..4", str(r.num_beds))
        if not set(r.equipment) <= E:
            bad(f"rooms[{r.id}].equipment", "subset-of-universe")
    add_ids = [a.id for a in inst.additional_rooms]
    if len(set(add_ids)) != len(add_ids):
        bad("additional_rooms", "unique-ids")
    if set(add_ids) & set(room_ids):
        bad("additional_rooms", "disjoint-from-rooms")

    rr = inst.distances.room_room
    for r in room_ids:
        for r2 in room_ids:
            if r == r2:
                if rr.get((r, r), 0.0) != 0:
                    bad(f"distances[{r},{r}]", "zero-diagonal")
                continue
            v = rr.get((r, r2))
            if v is None:
                bad(f"distances[{r},{r2}]", "defined")
            elif not _finite_nonneg(v):
                bad(f"distances[{r},{r2}]", "finite-nonnegative")
            elif rr.get((r2, r)) != v:
                bad(f"distances[{r},{r2}]", "symmetric")
    for a in add_ids:
        for r in room_ids:
            v = inst.distances.add_room.get((a, r))
            if v is None:
                bad(f"distances[{a},{r}]", "defined")
            elif not _finite_nonneg(v):
                bad(f"distances[{a},{r}]", "finite-nonnegative")

    nurse_ids = {n.id for n in inst.nurses}
    if len(nurse_ids) != len(inst.nurses):
        bad("nurses", "unique-ids")
    for n in inst.nurses:
        f = f"nurses[{n.id}]"
        if n.skill not in (1, 2, 3):
            bad(f + ".skill", "in-1..3", str(n.skill))
        if any(not 1 <= s <= S for s in n.shifts):
            bad(f + ".shifts", "in-calendar")
        days = [day_of(s) for s in n.shifts if s >= 1]
        if len(days) != len(set(days)):
            bad(f + ".shifts", "one-shift-per-day")
        if not _check_keys(n.maxload, n.shifts):
            bad(f + ".maxload", "defined-on-shifts")
        elif any(not (_finite_nonneg(v) and v > 0) for v in n.maxload.values()):
            bad(f + ".maxload", "positive")

    pids = [p.id for p in inst.patients]
    if len(set(pids)) != len(pids):
        bad("patients", "unique-ids")
    for p in inst.patients:
        f = f"patients[{p.id}]"
        if p.gender not in ("F", "M"):
            bad(f + ".gender", "F-or-M", str(p.gender))
        if not isinstance(p.age, int) or p.age < 0:
            bad(f + ".age", "nonnegative-integer")
        elif p.age > MAX_AGE:
            bad(f + ".age", f"at-most-{MAX_AGE}")
        if not (p.adshift == 0 or (1 <= p.adshift <= S and p.adshift % 3 == 1)):
            bad(f + ".adshift", "zero-or-early")
            continue
        if not (p.dishift == S + 1 or (1 <= p.dishift <= S and p.dishift % 3 == 0)):
            bad(f + ".dishift", "night-or-S+1")
            continue
        if not p.adshift < p.dishift:
            bad(f + ".adshift", "before-dishift")
            continue
        if p.adshift == 0:
            if p.prev_room is None:
                bad(f + ".prev_room", "required-when-adshift-0")
            elif p.prev_room not in inst.room_by_id:
                bad(f + ".prev_room", "references-room")
        elif p.prev_room is not None:
            bad(f + ".prev_room", "only-when-adshift-0")
        if not set(p.prev_nurses) <= nurse_ids:
            bad(f + ".prev_nurses", "references-nurses")
        stay = list(p.stay_shifts(inst.num_days))
        day_shifts = [s for s in stay if s % 3 != 0]
        early = [s for s in stay if s % 3 == 1]
        if not _check_keys(p.skillreq, day_shifts):
            bad(f + ".skillreq", "defined-on-stay-day-shifts")
        elif any(v not in (0, 1, 2) for v in p.skillreq.values()):
            bad(f + ".skillreq", "in-0..2")
        if not _check_keys(p.workload, stay):
            bad(f + ".workload", "defined-on-stay")
        elif any(not _finite_nonneg(v) for v in p.workload.values()):
            bad(f + ".workload", "finite-nonnegative")
        if not _check_keys(p.equipment_req, early):
            bad(f + ".equipment_req", "defined-on-stay-early-shifts")
        elif any(not set(v) <= E for v in p.equipment_req.values()):
            bad(f + ".equipment_req", "subset-of-universe")

    ww = inst.walk_weights
    for s in range(1, S + 1):
        for name, m in (("circular", ww.circular), ("star", ww.star)):
            if s not in m or not _finite_nonneg(m[s]):
                bad(f"walk_weights.{name}[{s}]", "defined-nonnegative")

    for k, v in inst.weights.as_dict().items():
        if not _finite_nonneg(v):
            bad(f"objective_weights.{k}", "finite-nonnegative")

    if out:
        return out

    beds = inst.total_beds
    for d in range(1, inst.num_days + 1):
        count = sum(1 for p in inst.patients if p.in_ward(3 * d - 2))
        if count > beds:
            bad(f"day[{d}]", "bed-capacity", f"{count} patients on {beds} beds")
        if count:
            for s in shifts_of_day(d):
                if not inst.nurses_on[s]:
                    bad(f"shift[{s}]", "nurse-on-duty", f"{count} patients, no nurse")
    return out
