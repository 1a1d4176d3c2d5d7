"""Exact reference solver for tiny instances, plus helpers used to test the rest.

:func:`enumerate_optimal` runs a depth-first branch and bound: first every
capacity-respecting room plan, then nurse choices shift by shift.  The bound
is the cost of everything already fixed (all terms are nonnegative and only
grow, except fairness, which is counted once a shift or the whole plan is
complete) plus, for every shift not yet staffed, the cheapest shift-local cost
it can still reach.  Ties are broken towards the lexicographically smallest
solution encoding, so the result does not depend on the search order.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .evaluator import ObjectiveBreakdown, eval_total, walking_distance
from .mipexport import ModelFile, complete_point
from .model import (AdditionalRoom, DistanceMatrix, Instance, Nurse, ObjectiveWeights, Patient, Room,
                    Solution, WalkWeights, shifts_of_day)

DEFAULT_MAX_NODES = 10 ** 7
TIE_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    def __init__(self, nodes: int, limit: int):
        self.nodes = nodes
        self.limit = limit
        super().__init__(f"search visited more than {limit} nodes; no optimum is claimed")


class MipPointError(ValueError):
    """Solution and model do not describe the same index sets."""


@dataclass(frozen=True)
class OracleStats:
    nodes: int
    leaves: int
    room_plans: int


def encode(sol: Solution) -> tuple:
    """Canonical ordering key of a solution."""
    return (tuple(sol.room_of[k] for k in sorted(sol.room_of)),
            tuple(sol.nurse_of[k] for k in sorted(sol.nurse_of)))


class _Oracle:
    def __init__(self, inst: Instance, max_nodes: int, prune: bool, leaf_hook):
        self.inst = inst
        self.w = inst.weights
        self.max_nodes = max_nodes
        self.prune = prune
        self.leaf_hook = leaf_hook
        self.nodes = 0
        self.leaves = 0
        self.room_plans = 0
        self.best = math.inf
        self.best_sol: Optional[Solution] = None
        self.best_key = None
        D = inst.num_days
        self.day_patients = {d: inst.patients_on_day(d) for d in range(1, D + 1)}
        self.shift_list = [s for d in range(1, D + 1) if self.day_patients[d] for s in shifts_of_day(d)]

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise BudgetExceeded(self.nodes, self.max_nodes)

    def cut(self, bound: float) -> bool:
        return self.prune and bound > self.best + TIE_TOL * (1.0 + abs(self.best))

    # -- room plans ---------------------------------------------------------------
    def room_terms(self, d: int, plan: dict) -> float:
        """Transfer, age spread, gender and equipment cost of day ``d``."""
        inst, w = self.inst, self.w
        cost = 0.0
        occ: dict[str, list] = {}
        for p in self.day_patients[d]:
            r = plan[(p, d)]
            pat = inst.patient_by_id[p]
            occ.setdefault(r, []).append(pat)
            if d == 1 and pat.adshift == 0:
                cost += w.transfers * (r != pat.prev_room)
            elif d > pat.first_day():
                cost += w.transfers * (r != plan[(p, d - 1)])
            need = set(pat.equipment_req.get(3 * d - 2, ()))
            cost += w.equipment * (not need <= set(inst.room_by_id[r].equipment))
        for r, pats in occ.items():
            groups = [q.agegroup for q in pats]
            cost += w.inconvenience * (max(groups) - min(groups))
            cost += w.gender * (len({q.gender for q in pats}) > 1)
        return cost

    def rooms(self, d: int, i: int, plan: dict, free: dict, cost: float) -> None:
        inst = self.inst
        if d > inst.num_days:
            self.room_plans += 1
            self.staff(plan, cost)
            return
        pats = self.day_patients[d]
        if i == len(pats):
            c = cost + self.room_terms(d, plan)
            if self.cut(c):
                return
            self.rooms(d + 1, 0, plan, {r.id: r.num_beds for r in inst.rooms}, c)
            return
        p = pats[i]
        for r in inst.room_ids:
            if free[r] == 0:
                continue
            self.tick()
            plan[(p, d)] = r
            free[r] -= 1
            self.rooms(d, i + 1, plan, free, cost)
            free[r] += 1
            del plan[(p, d)]

    # -- nurse choices ------------------------------------------------------------
    def shift_options(self, s: int, plan: dict):
        """Every assignment of the shift's patients to its nurses with its local cost."""
        inst, w = self.inst, self.w
        d = (s + 2) // 3
        pats = self.day_patients[d]
        nurses = inst.nurses_on[s]
        out = []
        for combo in itertools.product(nurses, repeat=len(pats)):
            load = {n: 0.0 for n in nurses}
            vis = {n: set() for n in nurses}
            skill = 0
            for p, n in zip(pats, combo):
                pat = inst.patient_by_id[p]
                load[n] += pat.workload[s]
                vis[n].add(plan[(p, d)])
                if s % 3 != 0:
                    req = pat.skillreq.get(s, 0)
                    skill += int(req >= 2 and inst.nurse_by_id[n].skill < req)
            ml = {n: inst.nurse_by_id[n].maxload[s] for n in nurses}
            rel = {n: load[n] / ml[n] for n in nurses}
            excess = sum(max(0.0, load[n] - ml[n]) for n in nurses)
            fair = sum(abs(rel[a] - rel[b]) for a, b in itertools.combinations(nurses, 2))
            npr = sum(len(v) for v in vis.values())
            walk = sum(walking_distance(inst, s, v) for v in vis.values() if v)
            local = (w.skill_load_fair * (skill + excess + fair) + w.nurses_per_room * npr
                     + w.walking * walk)
            out.append((local, tuple(zip(pats, combo)), rel))
        return out

    def staff(self, plan: dict, room_cost: float) -> None:
        opts = [self.shift_options(s, plan) for s in self.shift_list]
        mins = [min(o[0] for o in os_) for os_ in opts]
        rest = [0.0] * (len(opts) + 1)
        for k in range(len(opts) - 1, -1, -1):
            rest[k] = rest[k + 1] + mins[k]
        if self.cut(room_cost + rest[0]):
            return
        inst = self.inst
        ever = {p: set(inst.patient_by_id[p].prev_nurses) for p in inst.patient_ids}
        total = {n: 0.0 for n in inst.nurse_ids}
        chosen: list = []
        self.dfs_shift(0, opts, rest, plan, room_cost, 0.0, ever, total, chosen)

    def dfs_shift(self, k, opts, rest, plan, acc, cont, ever, total, chosen) -> None:
        if k == len(opts):
            self.leaf(plan, acc, cont, total, chosen)
            return
        s = self.shift_list[k]
        for local, pairs, rel in opts[k]:
            self.tick()
            new = [(p, n) for p, n in pairs if n not in ever[p]]
            c2 = cont + self.w.continuity * len(new)
            if self.cut(acc + local + c2 + rest[k + 1]):
                continue
            for p, n in new:
                ever[p].add(n)
            for n, v in rel.items():
                total[n] += v
            chosen.append((s, pairs))
            self.dfs_shift(k + 1, opts, rest, plan, acc + local, c2, ever, total, chosen)
            chosen.pop()
            for n, v in rel.items():
                total[n] -= v
            for p, n in new:
                ever[p].discard(n)

    def leaf(self, plan, acc, cont, total, chosen) -> None:
        self.leaves += 1
        nurses = self.inst.nurse_ids
        overall = sum(abs(total[a] - total[b]) for a, b in itertools.combinations(nurses, 2))
        cost = acc + cont + self.w.skill_load_fair * overall
        if self.prune and cost > self.best + TIE_TOL * (1.0 + abs(self.best)):
            return
        sol = Solution(dict(plan), {(p, s): n for s, pairs in chosen for p, n in pairs})
        if self.leaf_hook is not None:
            self.leaf_hook(sol, cost)
        key = encode(sol)
        tol = TIE_TOL * (1.0 + abs(self.best)) if math.isfinite(self.best) else 0.0
        if self.best_sol is None or cost < self.best - tol:
            self.best, self.best_sol, self.best_key = cost, sol, key
        elif cost <= self.best + tol and key < self.best_key:
            self.best, self.best_sol, self.best_key = min(cost, self.best), sol, key


def enumerate_optimal(inst: Instance, max_nodes: int = DEFAULT_MAX_NODES, prune: bool = True,
                      incumbent: Optional[float] = None,
                      leaf_hook: Optional[Callable[[Solution, float], None]] = None,
                      with_stats: bool = False):
    """Exact minimizer of the weighted total; raises :class:`BudgetExceeded`
    rather than returning an unproven answer.

    ``incumbent`` is an upper bound on the optimum (for example the greedy
    cost); it only tightens pruning.  ``leaf_hook(solution, cost)`` sees every
    complete solution the search scores.
    """
    o = _Oracle(inst, max_nodes, prune, leaf_hook)
    if incumbent is not None and prune:
        o.best = incumbent + 1e-6
    o.rooms(1, 0, {}, {r.id: r.num_beds for r in inst.rooms}, 0.0)
    if o.best_sol is None:
        if incumbent is not None and prune:  # bound was wrong; search again without it
            return enumerate_optimal(inst, max_nodes, prune, None, leaf_hook, with_stats)
        raise ValueError("instance has no feasible solution (not enough beds)")
    b = eval_total(inst, o.best_sol)
    if with_stats:
        return o.best_sol, b, OracleStats(o.nodes, o.leaves, o.room_plans)
    return o.best_sol, b


# -- MIP point check ------------------------------------------------------------------


@dataclass(frozen=True)
class MipPointResult:
    feasible: bool
    objective: float
    violated: tuple

    def __iter__(self):
        yield self.feasible
        yield self.objective


def check_mip_point(model: ModelFile, sol: Solution, inst: Optional[Instance] = None) -> MipPointResult:
    """Tight completion of ``sol`` checked against every row of ``model``."""
    inst = inst or model.instance
    if inst is None:
        raise MipPointError("the model carries no instance; pass it explicitly")
    point = complete_point(inst, sol)
    names = set(model.var_names())
    if names != set(point):
        extra = sorted(set(point) - names)[:3]
        missing = sorted(names - set(point))[:3]
        raise MipPointError(f"variable sets differ (unknown {extra}, uncovered {missing})")
    bad = model.violated_rows(point)
    return MipPointResult(not bad, model.objective_value(point), tuple(bad))


# -- fixtures and samplers ----------------------------------------------------------------


def random_feasible_solution(inst: Instance, rng: random.Random) -> Solution:
    """Uniformly random rooms within capacity and random rostered nurses."""
    room_of = {}
    for d in range(1, inst.num_days + 1):
        free = {r.id: r.num_beds for r in inst.rooms}
        for p in inst.patients_on_day(d):
            options = [r for r in inst.room_ids if free[r] > 0]
            if not options:
                raise ValueError(f"day {d}: more patients than beds")
            r = rng.choice(options)
            free[r] -= 1
            room_of[(p, d)] = r
    nurse_of = {}
    for p in inst.patients:
        for s in p.stay_shifts(inst.num_days):
            nurse_of[(p.id, s)] = rng.choice(inst.nurses_on[s])
    return Solution(room_of, nurse_of)


def tiny_instance(seed: int, max_rooms: int = 2, max_patients: int = 4, max_days: int = 2,
                  max_nurses: int = 6, max_per_shift: int = 2) -> Instance:
    """Small random instance for exhaustive checks."""
    rng = random.Random(seed)
    D = rng.randint(1, max_days)
    S = 3 * D
    nrooms = rng.randint(1, max_rooms)
    equip = ("eq1", "eq2")
    rooms = tuple(Room(f"r{j}", rng.randint(1, 2), frozenset(e for e in equip if rng.random() < 0.5))
                  for j in range(1, nrooms + 1))
    beds = sum(r.num_beds for r in rooms)
    rr = {}
    for a, b in itertools.combinations([r.id for r in rooms], 2):
        rr[(a, b)] = rr[(b, a)] = float(rng.randint(1, 10))
    ar = {("a1", r.id): float(rng.randint(1, 10)) for r in rooms}

    # roster: one shift per day, 1..max_per_shift nurses per shift
    pool = [f"n{i}" for i in range(1, max_nurses + 1)]
    shifts: dict[str, set] = {n: set() for n in pool}
    for d in range(1, D + 1):
        free = pool[:]
        rng.shuffle(free)
        for s in shifts_of_day(d):
            k = rng.randint(1, max_per_shift)
            k = min(k, len(free) - (3 * d - s))  # leave one nurse for each later shift of the day
            k = max(k, 1)
            for _ in range(k):
                shifts[free.pop()].add(s)
    used = [n for n in pool if shifts[n]]
    nurses = tuple(Nurse(n, rng.randint(1, 3), frozenset(shifts[n]),
                         {s: rng.choice((2.0, 3.0, 4.0, 6.0)) for s in sorted(shifts[n])}) for n in used)

    patients = []
    count = [0] * (D + 1)
    for i in range(1, rng.randint(1, max_patients) + 1):
        first = rng.randint(1, D)
        last = rng.randint(first, D)
        if any(count[d] >= beds for d in range(first, last + 1)):
            continue
        for d in range(first, last + 1):
            count[d] += 1
        carried = first == 1 and rng.random() < 0.3
        stay = range(3 * first - 2, 3 * last + 1)
        dishift = S + 1 if last == D and rng.random() < 0.3 else 3 * last
        patients.append(Patient(
            id=f"p{i}", gender=rng.choice("FM"), age=rng.randint(20, 99),
            adshift=0 if carried else 3 * first - 2, dishift=dishift,
            skillreq={s: rng.choice((0, 1, 2)) for s in stay if s % 3 != 0},
            workload={s: float(rng.randint(1, 5)) for s in stay},
            equipment_req={s: frozenset(e for e in equip if rng.random() < 0.3) for s in stay if s % 3 == 1},
            prev_room=rng.choice(rooms).id if carried else None,
            prev_nurses=frozenset(rng.sample(used, rng.randint(0, 1))) if carried else frozenset(),
        ))
    walk = WalkWeights({s: float(rng.choice((0.5, 1.0, 2.0))) for s in range(1, S + 1)},
                       {s: float(rng.choice((0.5, 1.0, 2.0))) for s in range(1, S + 1)})
    return Instance(D, rooms, (AdditionalRoom("a1"),), DistanceMatrix(rr, ar), tuple(patients), nurses,
                    walk, ObjectiveWeights(), equip, name=f"tiny-{seed}")
