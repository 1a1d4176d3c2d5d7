"""Seeded random instances: rooms, patients, workloads, nurses and rosters.

Every draw comes from one ``numpy.random.Generator`` seeded per instance, so
``(config, seed)`` fully determines the output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from .model import (AdditionalRoom, DistanceMatrix, Instance, Nurse, ObjectiveWeights, Patient,
                    Room, WalkWeights, validate_instance)
from .roster import (RosterRequest, automatic_nurse_count, make_skills, solve_roster,
                     uniform_requirement)

SKILL_MIX = {3: {3: 0.2, 2: 0.6, 1: 0.2}, 2: {2: 0.8, 1: 0.2}}
MAXLOAD = {1: 10.0, 2: 12.5, 3: 15.0}
WALK_PRESET = {1: (2.0, 1.0), 2: (1.0, 1.0), 0: (0.5, 2.0)}  # shift % 3 -> (circular, star)
SKILLREQ_START = (0.2, 0.5, 0.3)  # probabilities of starting at level 2, 1, 0
DECAY = 0.1


@dataclass(frozen=True)
class GenConfig:
    room_mix: Mapping[int, int] = field(default_factory=lambda: {2: 15})  # beds -> room count
    weeks: int = 2
    days_per_week: int = 7
    occupancy: float = 0.85
    equipment_types: tuple[str, ...] = ("oxygen", "monitor")
    room_equipment_prob: float = 0.5
    patient_equipment_prob: float = 0.25
    skill_levels: int = 3
    additional_rooms: int = 1
    nurse_mode: str = "automatic"  # or "manual"
    num_nurses: Optional[int] = None
    max_shifts_per_week: int = 5
    patients_per_nurse: float = 5.0
    min_nurses_day: int = 1
    min_nurses_night: int = 1
    carry_over: float = 0.5  # share of day-1 patients already on the ward
    num_instances: int = 1
    seed: int = 0
    name: str = "generated"

    def __post_init__(self):
        if not 0 < self.occupancy <= 1:
            raise ValueError("occupancy must lie in (0, 1]")
        if self.additional_rooms < 1:
            raise ValueError("at least one additional room is required")
        if self.skill_levels not in (2, 3):
            raise ValueError("skill_levels must be 2 or 3")
        if self.nurse_mode not in ("automatic", "manual"):
            raise ValueError("nurse_mode must be 'automatic' or 'manual'")
        if self.nurse_mode == "manual" and not self.num_nurses:
            raise ValueError("manual nurse mode needs num_nurses")
        if any(b not in (1, 2, 3, 4) or c < 0 for b, c in self.room_mix.items()):
            raise ValueError("room_mix maps bed counts 1..4 to nonnegative room counts")
        if self.weeks < 1 or not 1 <= self.days_per_week <= 7:
            raise ValueError("weeks >= 1 and days_per_week in 1..7")
        if not 0 <= self.carry_over <= 1:
            raise ValueError("carry_over must lie in [0, 1]")

    @property
    def num_days(self) -> int:
        return self.weeks * self.days_per_week

    @property
    def total_beds(self) -> int:
        return sum(b * c for b, c in self.room_mix.items())

    @property
    def max_shifts(self) -> int:
        return self.max_shifts_per_week * self.weeks

    @classmethod
    def from_dict(cls, doc: dict) -> "GenConfig":
        doc = dict(doc)
        if "room_mix" in doc:
            doc["room_mix"] = {int(k): int(v) for k, v in doc["room_mix"].items()}
        if "equipment_types" in doc:
            doc["equipment_types"] = tuple(doc["equipment_types"])
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def _preset(name: str, mix: dict, **kw) -> GenConfig:
    return GenConfig(room_mix=mix, name=name, **kw)


PRESETS: dict[str, GenConfig] = {
    "30beds-var1": _preset("30beds-var1", {2: 15}),
    "30beds-var2": _preset("30beds-var2", {3: 10}),
    "30beds-var3": _preset("30beds-var3", {1: 3, 2: 5, 3: 3, 4: 2}),
    "60beds-var1": _preset("60beds-var1", {2: 30}),
    "60beds-var2": _preset("60beds-var2", {3: 20}),
    "60beds-var3": _preset("60beds-var3", {1: 6, 2: 10, 3: 6, 4: 4}),
    "realward": _preset("realward", {1: 4, 2: 10, 3: 2, 4: 1}, weeks=1, days_per_week=5,
                        skill_levels=2, min_nurses_night=2),
}


def preset(name: str, **overrides) -> GenConfig:
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(cfg, **overrides) if overrides else cfg


# samplers -------------------------------------------------------------------

def sample_workload(agegroup: int, los_shifts: int, rng: np.random.Generator) -> list[float]:
    """Clamped gamma start, then 10% decay per shift with a floor of 1."""
    if los_shifts < 1:
        raise ValueError("los_shifts must be >= 1")
    w = min(5.0, max(1.0, float(rng.gamma(3.0, 0.5 + agegroup / 10))))
    out = [w]
    for _ in range(los_shifts - 1):
        w = max(1.0, w * (1 - DECAY))
        out.append(w)
    return out


def sample_skillreq(n_day_shifts: int, rng: np.random.Generator) -> list[int]:
    """Nonincreasing levels over the stay's day shifts, one step at a time."""
    level = int(rng.choice([2, 1, 0], p=SKILLREQ_START))
    steps = min(int(rng.integers(0, level + 1)), n_day_shifts - 1)
    drops = set(rng.choice(np.arange(1, n_day_shifts), size=steps, replace=False).tolist()) if steps else set()
    out = []
    for i in range(n_day_shifts):
        if i in drops:
            level -= 1
        out.append(level)
    return out


def sample_equipment(n_days: int, types, prob: float, rng: np.random.Generator) -> list[frozenset]:
    """Required equipment per stay day; each item is dropped at most once, never re-added."""
    needed = [e for e in types if rng.random() < prob]
    until = {e: int(rng.integers(1, n_days + 1)) for e in needed}  # kept on days [0, until)
    return [frozenset(e for e in needed if i < until[e]) for i in range(n_days)]


def sample_patient_attributes(rng: np.random.Generator) -> tuple[str, int, int]:
    """(gender, age, los_days): age group uniform on 2..9, LOS uniform on 1..5."""
    gender = "F" if rng.random() < 0.5 else "M"
    group = int(rng.integers(2, 10))
    age = 10 * group + int(rng.integers(0, 10))
    los = int(rng.integers(1, 6))
    return gender, age, los


def corridor_distances(room_ids, add_ids, spacing: float = 4.0, width: float = 3.0) -> DistanceMatrix:
    """Rooms on both sides of one corridor, additional rooms at its midpoint."""
    pos = {r: ((i // 2) * spacing, i % 2) for i, r in enumerate(room_ids)}
    mid = ((len(room_ids) - 1) // 2 // 2) * spacing + spacing / 2
    rr = {}
    for r in room_ids:
        for r2 in room_ids:
            if r != r2:
                (x, a), (x2, b) = pos[r], pos[r2]
                rr[(r, r2)] = round(abs(x - x2) + (width if a != b else 0.0), 6)
    ar = {}
    for j, a in enumerate(add_ids):
        for r in room_ids:
            x, side = pos[r]
            ar[(a, r)] = round(abs(x - mid) + width * side + 1.0 + j * spacing, 6)
    return DistanceMatrix(rr, ar)


def shift_requirement(cfg: GenConfig, night: bool) -> dict[int, int]:
    """Per-shift nurses by level, sized from the expected patient count."""
    patients = cfg.occupancy * cfg.total_beds
    k = max(cfg.min_nurses_night if night else cfg.min_nurses_day,
            math.ceil(patients / cfg.patients_per_nurse - 1e-9))
    if cfg.skill_levels == 3:
        a = max(1, int(0.2 * k))
        c = int(0.2 * k) if k - a > 0 else 0
        return {l: v for l, v in ((3, a), (2, k - a - c), (1, c)) if v > 0}
    c = int(0.2 * k)
    return {l: v for l, v in ((2, k - c), (1, c)) if v > 0}


def build_roster(cfg: GenConfig, seed: Optional[int], node_budget: int = 20_000):
    """Nurse skills and roster for the configured mode."""
    req = uniform_requirement(cfg.num_days, shift_requirement(cfg, False), shift_requirement(cfg, True))
    mix = SKILL_MIX[cfg.skill_levels]
    if cfg.nurse_mode == "manual":
        skills = make_skills(cfg.num_nurses, mix)
        roster = solve_roster(RosterRequest(skills, req, cfg.max_shifts, cfg.num_days), seed,
                              node_budget=10 * node_budget)
    else:
        _, roster, skills = automatic_nurse_count(req, mix, cfg.num_days, cfg.max_shifts, seed,
                                                  node_budget=node_budget)
    return skills, roster


# generation -------------------------------------------------------------------

def _make_patient(pid: str, rng, cfg: GenConfig, first_day: int, carried: bool,
                  prev_room=None, prev_nurses=frozenset()) -> tuple[Patient, int]:
    D = cfg.num_days
    gender, age, los = sample_patient_attributes(rng)
    last = min(first_day + los - 1, D)
    n_days = last - first_day + 1
    s0 = 3 * first_day - 2
    day_shifts = [s for d in range(first_day, last + 1) for s in (3 * d - 2, 3 * d - 1)]
    sk = sample_skillreq(len(day_shifts), rng)
    wl = sample_workload(age // 10, 3 * n_days, rng)
    eq = sample_equipment(n_days, cfg.equipment_types, cfg.patient_equipment_prob, rng)
    p = Patient(
        id=pid, gender=gender, age=age,
        adshift=0 if carried else s0, dishift=3 * last,
        skillreq=dict(zip(day_shifts, sk)),
        workload={s0 + i: w for i, w in enumerate(wl)},
        equipment_req={3 * d - 2: eq[d - first_day] for d in range(first_day, last + 1)},
        prev_room=prev_room, prev_nurses=frozenset(prev_nurses),
    )
    return p, los


def generate_instance(cfg: GenConfig, seed: Optional[int] = None) -> Instance:
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    D = cfg.num_days
    beds = cfg.total_beds
    target = round(cfg.occupancy * beds)
    if beds == 0 or target < 1:
        raise ValueError("occupancy target is unreachable with the configured rooms")

    sizes = [b for b in sorted(cfg.room_mix) for _ in range(cfg.room_mix[b])]
    width = max(2, len(str(len(sizes))))
    rooms = []
    for i, b in enumerate(sizes, 1):
        eq = frozenset(e for e in cfg.equipment_types if rng.random() < cfg.room_equipment_prob)
        rooms.append(Room(f"r{i:0{width}d}", b, eq))
    adds = [AdditionalRoom(f"a{j}") for j in range(1, cfg.additional_rooms + 1)]
    dist = corridor_distances([r.id for r in rooms], [a.id for a in adds])

    skills, roster = build_roster(cfg, int(rng.integers(0, 2**31)))
    nurses = tuple(Nurse(n, skills[n], frozenset(roster.get(n, ())),
                         {s: MAXLOAD[skills[n]] for s in sorted(roster.get(n, ()))})
                   for n in sorted(skills))
    nurse_list = [n.id for n in nurses]

    patients: list[Patient] = []
    counts = [0] * (D + 2)

    def pid() -> str:
        return f"p{len(patients) + 1:04d}"

    def add(p: Patient) -> None:
        patients.append(p)
        for d in range(p.first_day(), p.last_day(D) + 1):
            counts[d] += 1

    carried = int(round(cfg.carry_over * target))
    free = {r.id: r.num_beds for r in rooms}
    order = [r.id for r in rooms]
    for _ in range(carried):
        open_rooms = [r for r in order if free[r] > 0]
        room = open_rooms[int(rng.integers(0, len(open_rooms)))]
        free[room] -= 1
        k = int(rng.integers(0, min(2, len(nurse_list)) + 1))
        prev = rng.choice(nurse_list, size=k, replace=False).tolist() if k else []
        add(_make_patient(pid(), rng, cfg, 1, True, room, prev)[0])
    for d in range(1, D + 1):
        while counts[d] < target:
            add(_make_patient(pid(), rng, cfg, d, False)[0])

    w_circ = {s: WALK_PRESET[s % 3][0] for s in range(1, 3 * D + 1)}
    w_star = {s: WALK_PRESET[s % 3][1] for s in range(1, 3 * D + 1)}
    inst = Instance(
        num_days=D, rooms=tuple(rooms), additional_rooms=tuple(adds), distances=dist,
        patients=tuple(patients), nurses=nurses, walk_weights=WalkWeights(w_circ, w_star),
        weights=ObjectiveWeights(), equipment_types=tuple(cfg.equipment_types),
        name=f"{cfg.name}-s{seed}",
    )
    bad = validate_instance(inst)
    if bad:  # generator bug, not user error
        raise AssertionError(f"generated instance is invalid: {bad[:3]}")
    return inst


def generate_instances(cfg: GenConfig, seed: Optional[int] = None) -> list[Instance]:
    """``cfg.num_instances`` instances with consecutive seeds."""
    base = cfg.seed if seed is None else seed
    return [generate_instance(cfg, base + i) for i in range(cfg.num_instances)]


# real-data completion -----------------------------------------------------------

def fill_missing_real_data(inst: Instance, seed: int = 0) -> tuple[Instance, list[str]]:
    """Fill absent skill requirements and workloads; report structural infeasibility.

    Fields that are already complete are left exactly as given.
    """
    rng = np.random.default_rng(seed)
    D = inst.num_days
    out = []
    for p in sorted(inst.patients, key=lambda q: q.id):
        shifts = list(p.stay_shifts(D))
        day_shifts = [s for s in shifts if s % 3 != 0]
        upd = {}
        if any(s not in p.skillreq for s in day_shifts):
            sk = sample_skillreq(len(day_shifts), rng) if day_shifts else []
            upd["skillreq"] = dict(zip(day_shifts, sk))
        if any(s not in p.workload for s in shifts):
            upd["workload"] = dict(zip(shifts, sample_workload(p.agegroup, len(shifts), rng)))
        out.append(replace(p, **upd) if upd else p)
    filled = replace(inst, patients=tuple(out))

    report = []
    for d in range(1, D + 1):
        here = len(filled.patients_on_day(d))
        if here > filled.total_beds:
            report.append(f"day {d}: {here} patients for {filled.total_beds} beds")
    on = filled.nurses_on
    for s in range(1, 3 * D + 1):
        if any(p.in_ward(s) for p in filled.patients) and not on[s]:
            report.append(f"shift {s}: patients on the ward but no nurse on duty")
    return filled, report
