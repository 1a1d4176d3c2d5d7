"""Native construction of nurse rosters.

Rules enforced (``assign[n, s]`` is 1 when nurse ``n`` works shift ``s``):

* at most one shift per day,
* per shift and skill level ``l``: at least ``skill_nurses[s][l]`` rostered
  nurses with skill >= ``l``, and at least ``sum_l skill_nurses[s][l]`` in total,
* at most ``max_shifts`` shifts per nurse over the horizon,
* after a night shift only another night shift (or a day off) the next day,
* no early shift the day after a late shift.

Terms that reach past the horizon are dropped.  The search fills days in order
(night, then late, then early) with exhaustive backtracking under a node budget.
Every shift receives exactly its required total, which is the least number of
assignments the coverage rules allow.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Optional

LEVELS = (1, 2, 3)

Roster = dict  # nurse id -> frozenset of shift indices


class RosterInfeasible(RuntimeError):
    def __init__(self, shift: Optional[int], level: Optional[int], reason: str):
        self.shift = shift
        self.level = level
        self.reason = reason
        where = f"shift {shift}" + (f", level {level}" if level is not None else "")
        super().__init__(f"{reason} ({where})" if shift is not None else reason)


@dataclass(frozen=True)
class RosterRequest:
    nurse_skills: Mapping[str, int]
    skill_nurses: Mapping[int, Mapping[int, int]]  # shift -> level -> count
    max_shifts: int
    num_days: int

    @property
    def S(self) -> int:
        return 3 * self.num_days

    def required(self, s: int, level: int) -> int:
        return int(self.skill_nurses.get(s, {}).get(level, 0))

    def total_required(self, s: int) -> int:
        return sum(self.required(s, l) for l in LEVELS)

    def at_least(self, s: int, level: int) -> int:
        """Nurses with skill >= ``level`` that shift ``s`` needs, counting stricter levels too."""
        return max(self.required(s, l) for l in LEVELS if l >= level)


def uniform_requirement(num_days: int, per_shift: Mapping[int, int],
                        night: Optional[Mapping[int, int]] = None) -> dict[int, dict[int, int]]:
    """Same level counts on every shift (optionally different on nights)."""
    out = {}
    for s in range(1, 3 * num_days + 1):
        src = night if (night is not None and s % 3 == 0) else per_shift
        out[s] = {int(l): int(c) for l, c in src.items() if c}
    return out


def parse_per_shift(text: str) -> dict[int, int]:
    """Parse ``"3:1,2:2,1:1"`` into ``{3: 1, 2: 2, 1: 1}``."""
    out: dict[int, int] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        level, _, count = part.partition(":")
        lvl, cnt = int(level), int(count)
        if lvl not in LEVELS or cnt < 0:
            raise ValueError(f"bad requirement {part!r}")
        out[lvl] = out.get(lvl, 0) + cnt
    return out


def check_roster(req: RosterRequest, roster: Mapping[str, frozenset]) -> list[str]:
    """Literal check of the rostering rules; returns human-readable violations."""
    S = req.S
    out = []

    def assign(n: str, s: int) -> int:
        return int(s in roster.get(n, ()))

    for n in req.nurse_skills:
        if any(not 1 <= s <= S for s in roster.get(n, ())):
            out.append(f"{n}: shift outside horizon")
    for n in roster:
        if n not in req.nurse_skills:
            out.append(f"{n}: unknown nurse")
    for n in req.nurse_skills:
        for s in range(1, S + 1, 3):  # one shift per day
            if assign(n, s) + assign(n, s + 1) + assign(n, s + 2) > 1:
                out.append(f"{n}: more than one shift on day {(s + 2) // 3}")
        if sum(assign(n, s) for s in range(1, S + 1)) > req.max_shifts:
            out.append(f"{n}: more than {req.max_shifts} shifts")
        for s in range(3, S + 1, 3):  # after night
            terms = [assign(n, s)] + [assign(n, t) for t in (s + 1, s + 2) if t <= S]
            if sum(terms) > 1:
                out.append(f"{n}: works the day after night shift {s}")
        for s in range(2, S + 1, 3):  # after late
            if s + 2 <= S and assign(n, s) + assign(n, s + 2) > 1:
                out.append(f"{n}: early shift {s + 2} after late shift {s}")
    for s in range(1, S + 1):
        for l in LEVELS:
            have = sum(assign(n, s) for n, k in req.nurse_skills.items() if k >= l)
            if have < req.required(s, l):
                out.append(f"shift {s}: {have} nurses with skill >= {l}, need {req.required(s, l)}")
        total = sum(assign(n, s) for n in req.nurse_skills)
        if total < req.total_required(s):
            out.append(f"shift {s}: {total} nurses, need {req.total_required(s)}")
    return out


class _Search:
    def __init__(self, req: RosterRequest, seed: Optional[int], node_budget: int):
        self.req = req
        self.nurses = sorted(req.nurse_skills)
        self.skill = dict(req.nurse_skills)
        rng = random.Random(seed) if seed is not None else None
        self.tie = {n: (rng.random() if rng else 0.0, n) for n in self.nurses}
        self.budget = node_budget
        self.nodes = 0
        self.used = {n: 0 for n in self.nurses}
        self.prev_type = {n: None for n in self.nurses}  # shift type worked yesterday
        self.today: dict[str, int] = {}
        self.assigned: dict[str, set] = {n: set() for n in self.nurses}
        self.deepest = (-1, None, None)  # (position, shift, level)
        self.exhausted = False

    # shift order within a day: night first (most restrictive for tomorrow)
    def order(self):
        out = []
        for d in range(1, self.req.num_days + 1):
            out.extend([3 * d, 3 * d - 1, 3 * d - 2])
        return out

    def allowed(self, n: str, s: int) -> bool:
        if n in self.today or self.used[n] >= self.req.max_shifts:
            return False
        t = s % 3
        prev = self.prev_type[n]
        if prev == 0 and t != 0:
            return False
        if prev == 2 and t == 1:
            return False
        return True

    def options_today(self, n: str, s: int) -> int:
        day = (s + 2) // 3
        return sum(1 for t in (3 * day - 2, 3 * day - 1, 3 * day)
                   if t not in self.filled_today and self.allowed(n, t))

    def priority(self, n: str, s: int):
        t = s % 3
        prev = self.prev_type[n]
        keep_pattern = 0 if (t == 0 and prev == 0) or (t == 2 and prev == 2) else 1
        # nurses whose remaining shifts barely fit into the remaining days go first
        slack = self.req.num_days - (s + 2) // 3 + 1 - (self.req.max_shifts - self.used[n])
        return (max(slack, 0), keep_pattern, self.options_today(n, s), self.used[n],
                self.skill[n], self.tie[n])

    def selections(self, s: int, pos: int):
        req = self.req
        total = req.total_required(s)
        cands = sorted((n for n in self.nurses if self.allowed(n, s)),
                       key=lambda n: self.priority(n, s))
        seen = set()
        levels = [l for l in sorted(LEVELS, reverse=True) if req.required(s, l) > 0]

        def rec(li: int, chosen: tuple):
            if li == len(levels):
                rest = [n for n in cands if n not in chosen]
                k = total - len(chosen)
                if k < 0:
                    return
                for extra in combinations(rest, k):
                    sel = frozenset(chosen + extra)
                    if sel not in seen:
                        seen.add(sel)
                        yield sel
                return
            l = levels[li]
            need = req.required(s, l) - sum(1 for n in chosen if self.skill[n] >= l)
            if need <= 0:
                yield from rec(li + 1, chosen)
                return
            pool = [n for n in cands if n not in chosen and self.skill[n] >= l]
            if len(pool) < need:
                if pos >= self.deepest[0]:
                    self.deepest = (pos, s, l)
                return
            for pick in combinations(pool, need):
                yield from rec(li + 1, chosen + pick)

        if len(cands) < total and pos >= self.deepest[0]:
            self.deepest = (pos, s, None)
        yield from rec(0, ())

    def capacity_ok(self, pos: int, order) -> bool:
        remaining = sum(self.req.total_required(s) for s in order[pos:])
        days_left = self.req.num_days - (order[pos] + 2) // 3 + 1 if pos < len(order) else 0
        room = {n: min(self.req.max_shifts - self.used[n], days_left) for n in self.nurses}
        if sum(room.values()) < remaining:
            return False
        for l in LEVELS[1:]:
            need = sum(self.req.at_least(s, l) for s in order[pos:])
            if sum(c for n, c in room.items() if self.skill[n] >= l) < need:
                return False
        if order[pos] % 3 == 0:  # first slot of a day: can each shift still be staffed?
            day = (order[pos] + 2) // 3
            free = [n for n in self.nurses if self.used[n] < self.req.max_shifts]
            if len(free) < sum(self.req.total_required(s) for s in (3 * day - 2, 3 * day - 1, 3 * day)):
                return False
            for s in (3 * day - 2, 3 * day - 1, 3 * day):
                ok = [n for n in free if self.allowed(n, s)]
                if len(ok) < self.req.total_required(s):
                    return False
                for l in LEVELS:
                    if sum(1 for n in ok if self.skill[n] >= l) < self.req.required(s, l):
                        return False
            rested = [n for n in free if self.prev_type[n] != 0]  # nurses off a night shift only work nights
            if len(rested) < self.req.total_required(3 * day - 2) + self.req.total_required(3 * day - 1):
                return False
            for l in LEVELS[1:]:  # one shift per day, so each level needs distinct nurses
                need = sum(self.req.at_least(s, l) for s in (3 * day - 2, 3 * day - 1, 3 * day))
                if sum(1 for n in free if self.skill[n] >= l) < need:
                    return False
                need = self.req.at_least(3 * day - 2, l) + self.req.at_least(3 * day - 1, l)
                if sum(1 for n in rested if self.skill[n] >= l) < need:
                    return False
        return True

    def run(self) -> bool:
        order = self.order()
        self.filled_today: set[int] = set()
        return self._dfs(0, order)

    def _dfs(self, pos: int, order) -> bool:
        if pos == len(order):
            return True
        if self.nodes >= self.budget:
            self.exhausted = True
            return False
        s = order[pos]
        new_day = s % 3 == 0
        saved_prev = None
        saved_today = None
        if new_day:
            saved_prev = dict(self.prev_type)
            saved_today = (self.today, self.filled_today)
            if pos > 0:
                for n in self.nurses:
                    self.prev_type[n] = self.today[n] % 3 if n in self.today else None
            self.today, self.filled_today = {}, set()
        if not self.capacity_ok(pos, order):
            if new_day:
                self.prev_type = saved_prev
                self.today, self.filled_today = saved_today
            return False
        for sel in self.selections(s, pos):
            self.nodes += 1
            if self.nodes > self.budget:
                self.exhausted = True
                break
            for n in sel:
                self.today[n] = s
                self.used[n] += 1
                self.assigned[n].add(s)
            self.filled_today.add(s)
            if self._dfs(pos + 1, order):
                return True
            self.filled_today.discard(s)
            for n in sel:
                del self.today[n]
                self.used[n] -= 1
                self.assigned[n].discard(s)
            if self.exhausted:
                break
        if new_day:
            self.prev_type = saved_prev
            self.today, self.filled_today = saved_today
        return False


def _distinct_windows(num_days: int):
    """Shift triples that the rest rules force onto pairwise distinct nurses."""
    for d in range(1, num_days + 1):
        e, l, n = 3 * d - 2, 3 * d - 1, 3 * d
        yield (e, l, n)
        if d < num_days:
            yield (l, n, n + 1)
            yield (n, n + 1, n + 2)


def _precheck(req: RosterRequest) -> None:
    nurses = req.nurse_skills
    for s in range(1, req.S + 1):
        for l in sorted(LEVELS, reverse=True):
            have = sum(1 for k in nurses.values() if k >= l)
            if have < req.required(s, l):
                raise RosterInfeasible(s, l, f"only {have} nurses with skill >= {l}")
        if len(nurses) < req.total_required(s):
            raise RosterInfeasible(s, None, "fewer nurses than required on one shift")
    for d in range(1, req.num_days + 1):
        day = sum(req.total_required(s) for s in (3 * d - 2, 3 * d - 1, 3 * d))
        if day > len(nurses):
            raise RosterInfeasible(3 * d - 2, None, f"day {d} needs {day} distinct nurses")
        for l in LEVELS[1:]:
            need = sum(req.at_least(s, l) for s in (3 * d - 2, 3 * d - 1, 3 * d))
            have = sum(1 for k in nurses.values() if k >= l)
            if need > have:
                raise RosterInfeasible(3 * d - 2, l, f"day {d} needs {need} distinct nurses with skill >= {l}")
    for w in _distinct_windows(req.num_days):
        if sum(req.total_required(s) for s in w) > len(nurses):
            raise RosterInfeasible(w[0], None, f"shifts {w} need more distinct nurses than exist")
        for l in LEVELS[1:]:
            need = sum(req.at_least(s, l) for s in w)
            have = sum(1 for k in nurses.values() if k >= l)
            if need > have:
                raise RosterInfeasible(w[0], l, f"shifts {w} need {need} distinct nurses with skill >= {l}")
    total = sum(req.total_required(s) for s in range(1, req.S + 1))
    if total > len(nurses) * req.max_shifts:
        raise RosterInfeasible(None, None, "total demand exceeds nurses x max_shifts")
    for l in LEVELS[1:]:
        need = sum(req.at_least(s, l) for s in range(1, req.S + 1))
        have = sum(1 for k in nurses.values() if k >= l)
        if need > have * req.max_shifts:
            raise RosterInfeasible(None, l, f"demand for skill >= {l} exceeds those nurses x max_shifts")


def solve_roster(req: RosterRequest, seed: Optional[int] = None,
                 node_budget: int = 200_000) -> Roster:
    """Feasible roster or :class:`RosterInfeasible` naming the first uncoverable spot."""
    if req.max_shifts < 1 or req.num_days < 1:
        raise ValueError("max_shifts and num_days must be positive")
    _precheck(req)
    search = _Search(req, seed, node_budget)
    if search.run():
        return {n: frozenset(search.assigned[n]) for n in search.nurses}
    _, s, l = search.deepest
    reason = "node budget exhausted" if search.exhausted else "no roster satisfies the rules"
    raise RosterInfeasible(s, l, reason)


def apportion(num: int, mix: Mapping[int, float]) -> dict[int, int]:
    """Largest-remainder split of ``num`` nurses over skill levels."""
    total = sum(mix.values())
    if num < 0 or total <= 0 or not math.isclose(total, 1.0, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError("skill mix must be nonnegative and sum to 1")
    quotas = {l: num * p for l, p in mix.items()}
    base = {l: math.floor(q) for l, q in quotas.items()}
    left = num - sum(base.values())
    for l in sorted(mix, key=lambda l: (-(quotas[l] - base[l]), -l))[:left]:
        base[l] += 1
    return base


def nurse_ids(num: int) -> list[str]:
    width = max(2, len(str(num)))
    return [f"n{i:0{width}d}" for i in range(1, num + 1)]


def make_skills(num: int, mix: Mapping[int, float]) -> dict[str, int]:
    """Nurse id -> skill, highest skills on the lowest ids."""
    counts = apportion(num, mix)
    levels = [l for l in sorted(counts, reverse=True) for _ in range(counts[l])]
    return dict(zip(nurse_ids(num), levels))


def automatic_nurse_count(base_req: Mapping[int, Mapping[int, int]], skill_mix: Mapping[int, float],
                          num_days: int, max_shifts: int, seed: Optional[int] = None,
                          node_budget: int = 200_000) -> tuple[int, Roster, dict[str, int]]:
    """Smallest nurse count with a feasible roster, scanning up from a lower bound."""
    total = sum(sum(v.values()) for v in base_req.values())
    if total == 0:
        return 0, {}, {}
    lower = math.ceil(total / max_shifts)
    for d in range(1, num_days + 1):
        lower = max(lower, sum(sum(base_req.get(s, {}).values()) for s in (3 * d - 2, 3 * d - 1, 3 * d)))
    cap = 10 * lower
    for num in range(lower, cap + 1):
        skills = make_skills(num, skill_mix)
        req = RosterRequest(skills, base_req, max_shifts, num_days)
        try:
            return num, solve_roster(req, seed, node_budget), skills
        except RosterInfeasible:
            continue
    raise RosterInfeasible(None, None, f"no feasible roster up to {cap} nurses")
