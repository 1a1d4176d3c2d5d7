"""Exact scoring of a fixed assignment.

Auxiliary quantities of the integer model (age-group extremes, gender flags,
``in_room`` indicators, violation slacks) are never stored; each function
computes the tight value a minimizing solver would settle on for the given
room and nurse assignment.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, field
from itertools import combinations

from .model import Instance, Solution


class SolutionStructureError(ValueError):
    """The solution names patients, rooms, nurses, days or shifts that do not exist."""


@dataclass(frozen=True)
class HardViolation:
    family: str
    shift: int
    ids: tuple[str, ...]


@dataclass
class FeasibilityReport:
    violations: list[HardViolation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations


class InfeasibleSolutionError(ValueError):
    def __init__(self, report: FeasibilityReport):
        self.report = report
        first = report.violations[0]
        super().__init__(
            f"{len(report.violations)} hard violation(s), first: {first.family} at shift "
            f"{first.shift} ({', '.join(first.ids)})"
        )


@dataclass(frozen=True)
class ObjectiveBreakdown:
    transfers: int = 0
    inconvenience: float = 0.0
    gender_mix: int = 0
    equipment_viol: int = 0
    continuity: int = 0
    skill_viol: int = 0
    load_viol: float = 0.0
    fairness_shift: float = 0.0
    fairness_overall: float = 0.0
    nurses_per_room: int = 0
    walking: float = 0.0
    weighted_total: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [(LABELS[k], v) for k, v in self.as_dict().items()]
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label:<{width}}  {_fmt(v):>14}" for label, v in rows) + "\n"


LABELS = {
    "transfers": "Transfers",
    "inconvenience": "Inconvenience",
    "gender_mix": "Gender mixing",
    "equipment_viol": "Equipment",
    "continuity": "Continuity of care",
    "skill_viol": "Skill violations",
    "load_viol": "Load violations",
    "fairness_shift": "Fairness (shift)",
    "fairness_overall": "Fairness (overall)",
    "nurses_per_room": "Nurses per room",
    "walking": "Walking distances",
    "weighted_total": "Weighted total",
}


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else f"{v:.6f}"


def check_structure(inst: Instance, sol: Solution) -> None:
    rooms, pats, nurses = inst.room_by_id, inst.patient_by_id, inst.nurse_by_id
    for (p, d), r in sol.room_of.items():
        if p not in pats or r not in rooms or not 1 <= d <= inst.num_days:
            raise SolutionStructureError(f"room_of entry ({p}, {d}) -> {r} is dangling")
    for (p, s), n in sol.nurse_of.items():
        if p not in pats or n not in nurses or not 1 <= s <= inst.S:
            raise SolutionStructureError(f"nurse_of entry ({p}, {s}) -> {n} is dangling")


def check_feasibility(inst: Instance, sol: Solution) -> FeasibilityReport:
    check_structure(inst, sol)
    rep = FeasibilityReport()
    add = rep.violations.append
    for (p, d) in sorted(sol.room_of):
        if not inst.patient_by_id[p].in_ward(3 * d - 2):
            add(HardViolation("room-outside-stay", 3 * d - 2, (p,)))
    for (p, s) in sorted(sol.nurse_of):
        if not inst.patient_by_id[p].in_ward(s):
            add(HardViolation("nurse-outside-stay", s, (p,)))
    for p in inst.patient_ids:
        pat = inst.patient_by_id[p]
        for d in pat.stay_days(inst.num_days):
            if (p, d) not in sol.room_of:
                add(HardViolation("room-assignment", 3 * d - 2, (p,)))
        for s in pat.stay_shifts(inst.num_days):
            n = sol.nurse_of.get((p, s))
            if n is None:
                add(HardViolation("nurse-assignment", s, (p,)))
            elif s not in inst.nurse_by_id[n].shifts:
                add(HardViolation("nurse-roster", s, (p, n)))
    occ = occupancy(sol)
    for (r, d), ps in sorted(occ.items()):
        if len(ps) > inst.room_by_id[r].num_beds:
            add(HardViolation("room-capacity", 3 * d - 2, (r, *sorted(ps))))
    return rep


def require_feasible(inst: Instance, sol: Solution) -> None:
    rep = check_feasibility(inst, sol)
    if rep.violations:
        raise InfeasibleSolutionError(rep)


def occupancy(sol: Solution) -> dict[tuple[str, int], list[str]]:
    occ: dict[tuple[str, int], list[str]] = defaultdict(list)
    for (p, d), r in sol.room_of.items():
        occ[(r, d)].append(p)
    return occ


def eval_transfers(inst: Instance, sol: Solution) -> int:
    count = 0
    for p in inst.patients:
        days = list(p.stay_days(inst.num_days))
        if p.adshift == 0 and sol.room_of[(p.id, 1)] != p.prev_room:
            count += 1
        for d in days[1:]:
            if sol.room_of[(p.id, d)] != sol.room_of[(p.id, d - 1)]:
                count += 1
    return count


def eval_inconvenience(inst: Instance, sol: Solution) -> float:
    total = 0
    for ps in occupancy(sol).values():
        groups = [inst.patient_by_id[p].agegroup for p in ps]
        total += max(groups) - min(groups)
    return float(total)


def eval_gender_mix(inst: Instance, sol: Solution) -> int:
    count = 0
    for ps in occupancy(sol).values():
        if len({inst.patient_by_id[p].gender for p in ps}) > 1:
            count += 1
    return count


def eval_equipment(inst: Instance, sol: Solution) -> int:
    count = 0
    for (p, d), r in sol.room_of.items():
        need = inst.patient_by_id[p].equipment_req.get(3 * d - 2, frozenset())
        if not set(need) <= set(inst.room_by_id[r].equipment):
            count += 1
    return count


def eval_continuity(inst: Instance, sol: Solution) -> int:
    seen: dict[str, set[str]] = defaultdict(set)
    for (p, _s), n in sol.nurse_of.items():
        seen[p].add(n)
    return sum(len(ns - set(inst.patient_by_id[p].prev_nurses)) for p, ns in seen.items())


def eval_skill_violations(inst: Instance, sol: Solution) -> int:
    count = 0
    for (p, s), n in sol.nurse_of.items():
        if s % 3 == 0:
            continue
        req = inst.patient_by_id[p].skillreq.get(s, 0)
        if req >= 2 and inst.nurse_by_id[n].skill < req:
            count += 1
    return count


def nurse_loads(inst: Instance, sol: Solution) -> dict[tuple[str, int], float]:
    """Absolute workload per rostered (nurse, shift); unassigned shifts carry 0."""
    load = {(n.id, s): 0.0 for n in inst.nurses for s in n.shifts}
    for (p, s), n in sorted(sol.nurse_of.items()):
        load[(n, s)] = load.get((n, s), 0.0) + inst.patient_by_id[p].workload[s]
    return load


def relative_loads(inst: Instance, sol: Solution) -> dict[tuple[str, int], float]:
    rel = {(n.id, s): 0.0 for n in inst.nurses for s in n.shifts}
    for (p, s), n in sorted(sol.nurse_of.items()):
        rel[(n, s)] += inst.patient_by_id[p].workload[s] / inst.nurse_by_id[n].maxload[s]
    return rel


def eval_load_violations(inst: Instance, sol: Solution) -> float:
    total = 0.0
    for (n, s), load in sorted(nurse_loads(inst, sol).items()):
        total += max(0.0, load - inst.nurse_by_id[n].maxload[s])
    return total


def eval_fairness(inst: Instance, sol: Solution) -> tuple[float, float]:
    rel = relative_loads(inst, sol)
    per_shift = 0.0
    for s in range(1, inst.S + 1):
        on = inst.nurses_on[s]
        for n, n2 in combinations(on, 2):
            # both ordered pairs: max(0, a-b) + max(0, b-a)
            per_shift += abs(rel[(n, s)] - rel[(n2, s)])
    totals = {n: 0.0 for n in inst.nurse_ids}
    for (n, s), v in sorted(rel.items()):
        totals[n] += v
    overall = 0.0
    for n, n2 in combinations(inst.nurse_ids, 2):
        overall += abs(totals[n] - totals[n2])
    return per_shift, overall


def visited_rooms(inst: Instance, sol: Solution) -> dict[tuple[str, int], set[str]]:
    """Rooms holding at least one of the nurse's patients, per (nurse, shift)."""
    vis: dict[tuple[str, int], set[str]] = defaultdict(set)
    for (p, s), n in sol.nurse_of.items():
        vis[(n, s)].add(sol.room_of[(p, (s + 2) // 3)])
    return vis


def eval_nurses_per_room(inst: Instance, sol: Solution) -> int:
    return sum(len(rs) for rs in visited_rooms(inst, sol).values())


def walking_distance(inst: Instance, s: int, rooms) -> float:
    """Walking distance of one nurse on shift ``s`` who visits ``rooms``."""
    rooms = sorted(rooms)
    dist = inst.distances
    circ = 0.0
    for r, r2 in combinations(rooms, 2):
        circ += dist.rr(r, r2)
    star = 0.0
    for a in inst.additional_ids:
        for r in rooms:
            star += dist.ar(a, r)
    return inst.walk_weights.circular[s] * circ + inst.walk_weights.star[s] * star


def eval_walking(inst: Instance, sol: Solution) -> float:
    total = 0.0
    for (n, s), rooms in sorted(visited_rooms(inst, sol).items()):
        total += walking_distance(inst, s, rooms)
    return total


def weighted_total(inst: Instance, b: ObjectiveBreakdown) -> float:
    w = inst.weights
    return (
        w.transfers * b.transfers
        + w.inconvenience * b.inconvenience
        + w.gender * b.gender_mix
        + w.equipment * b.equipment_viol
        + w.continuity * b.continuity
        + w.skill_load_fair * (b.skill_viol + b.load_viol + b.fairness_shift + b.fairness_overall)
        + w.nurses_per_room * b.nurses_per_room
        + w.walking * b.walking
    )


def eval_total(inst: Instance, sol: Solution) -> ObjectiveBreakdown:
    require_feasible(inst, sol)
    fs, fo = eval_fairness(inst, sol)
    b = ObjectiveBreakdown(
        transfers=eval_transfers(inst, sol),
        inconvenience=eval_inconvenience(inst, sol),
        gender_mix=eval_gender_mix(inst, sol),
        equipment_viol=eval_equipment(inst, sol),
        continuity=eval_continuity(inst, sol),
        skill_viol=eval_skill_violations(inst, sol),
        load_viol=eval_load_violations(inst, sol),
        fairness_shift=fs,
        fairness_overall=fo,
        nurses_per_room=eval_nurses_per_room(inst, sol),
        walking=eval_walking(inst, sol),
    )
    return ObjectiveBreakdown(**{**b.as_dict(), "weighted_total": weighted_total(inst, b)})
