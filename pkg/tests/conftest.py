from __future__ import annotations

import itertools
import sys

from iprnpa.model import (AdditionalRoom, DistanceMatrix, Instance, Nurse, ObjectiveWeights, Patient, Room,
                          Solution, WalkWeights)


def patient(pid, num_days=1, gender="F", age=40, adshift=1, dishift=None, skill=0, load=1.0,
            equip=frozenset(), prev_room=None, prev_nurses=()):
    """Patient with uniform skill requirement, workload and equipment over its stay."""
    dishift = 3 * num_days if dishift is None else dishift
    first = 1 if adshift == 0 else (adshift + 2) // 3
    last = (min(dishift, 3 * num_days) + 2) // 3
    stay = range(3 * first - 2, 3 * last + 1)
    return Patient(pid, gender, age, adshift, dishift,
                   skillreq={s: skill for s in stay if s % 3 != 0},
                   workload={s: load for s in stay},
                   equipment_req={s: frozenset(equip) for s in stay if s % 3 == 1},
                   prev_room=prev_room, prev_nurses=frozenset(prev_nurses))


def shift_nurses(num_days=1, skill=3, maxload=10.0, per_shift=1):
    """``per_shift`` nurses on every shift, each working one shift per day."""
    out = []
    for k in range(3):
        for j in range(per_shift):
            shifts = frozenset(3 * d - 2 + k for d in range(1, num_days + 1))
            out.append(Nurse(f"n{k * per_shift + j + 1}", skill, shifts, {s: maxload for s in shifts}))
    return tuple(out)


def build(patients=(), rooms=(("r1", 2),), num_days=1, nurses=None, rr=None, ar=None, adds=("a1",),
          circular=1.0, star=0.0, weights=ObjectiveWeights(), name="hand"):
    rooms = tuple(Room(r[0], r[1], frozenset(r[2]) if len(r) > 2 else frozenset()) for r in rooms)
    ids = [r.id for r in rooms]
    rr = dict(rr or {})
    for a, b in itertools.permutations(ids, 2):
        rr.setdefault((a, b), rr.get((b, a), 1.0))
    ar = dict(ar or {})
    for a in adds:
        for r in ids:
            ar.setdefault((a, r), 1.0)
    S = 3 * num_days
    equip = sorted({e for r in rooms for e in r.equipment}
                   | {e for p in patients for v in p.equipment_req.values() for e in v})
    return Instance(num_days, rooms, tuple(AdditionalRoom(a) for a in adds), DistanceMatrix(rr, ar),
                    tuple(patients), shift_nurses(num_days) if nurses is None else tuple(nurses),
                    WalkWeights({s: circular for s in range(1, S + 1)}, {s: star for s in range(1, S + 1)}),
                    weights, tuple(equip), name)


def solution(room_of=None, nurse_of=None):
    return Solution(dict(room_of or {}), dict(nurse_of or {}))


def day_nurses(pid, day, triple):
    return {(pid, 3 * day - 2 + k): n for k, n in enumerate(triple)}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        status, detail = results.get(number, ("FAIL", "not run"))
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
