"""Greedy day-by-day construction of joint room and nurse assignments.

Each day every in-ward patient is fixed to a room and an (early, late, night)
nurse triple.  Candidates live in a contribution table holding the marginal
change of the weighted objective, plus a discharge-similarity term that pulls
patients with close discharge shifts into the same room.  The cheapest entry
is fixed, the table is refreshed, and the loop repeats until the day is done.

The table is stored in factored form:

* ``A[p, r]``   room-only terms (transfer, age spread, gender, equipment,
  heterogeneity); ``inf`` for fixed patients and full rooms,
* ``B_k[p, n]`` nurse-only terms of shift ``k`` (continuity, skill, load,
  per-shift fairness, overall fairness against unchanged nurses),
* ``C_k[n, r]`` nurse-room terms of shift ``k`` (nurses per room, walking),
* ``D[p, e, l, n]`` the overall-fairness correction for the pairs inside a
  triple, whose relative totals move together.

An entry's value is ``A + (B_e + C_e) + (B_l + C_l) + (B_n + C_n) + D``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from . import kernels
from .evaluator import ObjectiveBreakdown, eval_total
from .model import Instance, Solution, shifts_of_day

INF = math.inf


class HeuristicInfeasible(RuntimeError):
    def __init__(self, day: int, reason: str):
        self.day = day
        self.reason = reason
        super().__init__(f"day {day}: {reason}")


# -- heterogeneity ---------------------------------------------------------------


class HeterogeneityMatrix:
    """Log discharge-shift distance between patients; upper triangle only."""

    def __init__(self, values: dict[tuple[str, str], float]):
        self.values = values

    def __call__(self, p: str, q: str) -> float:
        if p == q:
            return 0.0
        return self.values[(p, q) if p < q else (q, p)]


def het_value(dishift_a: int, dishift_b: int) -> float:
    diff = abs(dishift_a - dishift_b)
    return 0.0 if diff == 0 else math.log(diff)


def build_het_matrix(patients) -> HeterogeneityMatrix:
    ps = sorted(patients, key=lambda p: p.id)
    vals = {}
    for i, p in enumerate(ps):
        for q in ps[i + 1:]:
            vals[(p.id, q.id)] = het_value(p.dishift, q.dishift)
    return HeterogeneityMatrix(vals)


# -- partial state ---------------------------------------------------------------


@dataclass
class PartialState:
    inst: Instance
    room_of: dict = field(default_factory=dict)
    nurse_of: dict = field(default_factory=dict)
    occupants: dict = field(default_factory=dict)  # (room, day) -> [patients]
    load: dict = field(default_factory=dict)  # (nurse, shift) -> absolute load
    rel: dict = field(default_factory=dict)  # (nurse, shift) -> relative load
    total: dict = field(default_factory=dict)  # nurse -> summed relative load
    ever: dict = field(default_factory=dict)  # patient -> nurses so far
    visited: dict = field(default_factory=dict)  # (nurse, shift) -> rooms

    def __post_init__(self):
        for n in self.inst.nurses:
            self.total.setdefault(n.id, 0.0)
            for s in n.shifts:
                self.load.setdefault((n.id, s), 0.0)
                self.rel.setdefault((n.id, s), 0.0)
                self.visited.setdefault((n.id, s), set())

    def room_free(self, r: str, d: int) -> bool:
        return len(self.occupants.get((r, d), ())) < self.inst.room_by_id[r].num_beds

    def apply(self, p: str, triple: tuple[str, str, str], r: str, d: int) -> None:
        inst = self.inst
        pat = inst.patient_by_id[p]
        if (p, d) in self.room_of:
            raise ValueError(f"patient {p} already fixed on day {d}")
        if not self.room_free(r, d):
            raise ValueError(f"room {r} is full on day {d}")
        self.room_of[(p, d)] = r
        self.occupants.setdefault((r, d), []).append(p)
        for s, n in zip(shifts_of_day(d), triple):
            self.nurse_of[(p, s)] = n
            wl = pat.workload[s]
            self.load[(n, s)] += wl
            delta = wl / inst.nurse_by_id[n].maxload[s]
            self.rel[(n, s)] += delta
            self.total[n] += delta
            self.visited[(n, s)].add(r)
            self.ever.setdefault(p, set()).add(n)

    def solution(self) -> Solution:
        return Solution(dict(self.room_of), dict(self.nurse_of))


# -- reference scalar contribution -----------------------------------------------


def _pair_excess(vals: dict, pairs) -> float:
    return sum(max(0.0, vals[u] - vals[v]) for u, v in pairs)


def calc_contribution(p: str, ncomb: tuple[str, str, str], r: str, st: PartialState,
                      H: HeterogeneityMatrix, day: int) -> float:
    """Weighted objective change of fixing patient ``p`` to ``ncomb`` and ``r`` on ``day``.

    Computed from scratch on the partial state; the factored table must agree.
    """
    inst = st.inst
    w = inst.weights
    pat = inst.patient_by_id[p]
    early = 3 * day - 2
    occ = st.occupants.get((r, day), [])

    transfer = 0
    if day == 1 and pat.adshift == 0:
        transfer = int(r != pat.prev_room)
    elif day > pat.first_day():
        transfer = int(r != st.room_of[(p, day - 1)])

    groups = [inst.patient_by_id[q].agegroup for q in occ]
    before = (max(groups) - min(groups)) if groups else 0
    after = max(groups + [pat.agegroup]) - min(groups + [pat.agegroup])
    inconv = after - before

    genders = {inst.patient_by_id[q].gender for q in occ}
    gender = int(len(genders) == 1 and pat.gender not in genders)

    need = set(pat.equipment_req.get(early, ()))
    equip = int(not need <= set(inst.room_by_id[r].equipment))

    het = max((H(p, q) for q in occ), default=0.0)

    known = st.ever.get(p, set()) | set(pat.prev_nurses)
    continuity = len(set(ncomb) - known)

    skill = 0
    load = 0.0
    fair_shift = 0.0
    npr = 0
    walk = 0.0
    new_total = dict(st.total)
    for k, (s, n) in enumerate(zip(shifts_of_day(day), ncomb)):
        nurse = inst.nurse_by_id[n]
        if k < 2:
            req = pat.skillreq.get(s, 0)
            skill += int(req >= 2 and nurse.skill < req)
        wl = pat.workload[s]
        cur = st.load[(n, s)]
        load += max(0.0, cur + wl - nurse.maxload[s]) - max(0.0, cur - nurse.maxload[s])

        on = inst.nurses_on[s]
        pairs = [(n, m) for m in on if m != n] + [(m, n) for m in on if m != n]
        rel_before = {m: st.rel[(m, s)] for m in on}
        rel_after = dict(rel_before)
        rel_after[n] += wl / nurse.maxload[s]
        fair_shift += _pair_excess(rel_after, pairs) - _pair_excess(rel_before, pairs)
        new_total[n] += wl / nurse.maxload[s]

        vis = st.visited[(n, s)]
        if r not in vis:
            npr += 1
            walk += inst.walk_weights.circular[s] * sum(inst.distances.rr(r, q) for q in vis)
            walk += inst.walk_weights.star[s] * sum(inst.distances.ar(a, r) for a in inst.additional_ids)

    moved = set(ncomb)
    pairs = [(u, v) for u in inst.nurse_ids for v in inst.nurse_ids
             if u != v and (u in moved or v in moved)]
    fair_overall = _pair_excess(new_total, pairs) - _pair_excess(st.total, pairs)

    return (
        w.transfers * transfer
        + w.inconvenience * inconv
        + w.gender * gender
        + w.equipment * equip
        + w.continuity * continuity
        + w.skill_load_fair * (skill + load + fair_shift + fair_overall)
        + w.nurses_per_room * npr
        + w.walking * walk
        + w.heterogeneity * het
    )


# -- factored contribution table --------------------------------------------------


class ContributionTable:
    """Live table of marginal costs for one day.

    ``value``/``entries`` expose the logical map
    ``(patient, (early, late, night nurse), room) -> cost``.
    """

    def __init__(self, st: PartialState, H: HeterogeneityMatrix, day: int,
                 max_triples_per_patient: Optional[int] = None, backend: Optional[str] = None):
        inst = st.inst
        self.st, self.H, self.day = st, H, day
        self.shifts = shifts_of_day(day)
        self.patients = inst.patients_on_day(day)
        self.rooms = inst.room_ids
        self.nurses = [inst.nurses_on[s] for s in self.shifts]
        for s, ns in zip(self.shifts, self.nurses):
            if self.patients and not ns:
                raise HeuristicInfeasible(day, f"no nurse on duty in shift {s}")
        self.p_index = {p: i for i, p in enumerate(self.patients)}
        self.r_index = {r: j for j, r in enumerate(self.rooms)}
        self.n_index = [{n: a for a, n in enumerate(ns)} for ns in self.nurses]
        self._argmin = kernels.get_argmin(backend)
        self._prepare_static()
        self.A = np.empty((len(self.patients), len(self.rooms)))
        for j in range(len(self.rooms)):
            self._refresh_room(j)
        self.B = [None, None, None]
        self._delta = [None, None, None]
        self.C = [np.empty((len(ns), len(self.rooms))) for ns in self.nurses]
        for k in range(3):
            self._refresh_nurse_terms(k)
            for a in range(len(self.nurses[k])):
                self._refresh_nurse_room(k, a)
        self._refresh_sums()
        self.mask = None
        if max_triples_per_patient is not None:
            self.mask = self._cap_mask(max_triples_per_patient)

    # static per-day data
    def _prepare_static(self):
        inst = self.st.inst
        pats = [inst.patient_by_id[p] for p in self.patients]
        self.wl = [np.array([p.workload[s] for p in pats], dtype=float) for s in self.shifts]
        self.maxload = [
            np.array([inst.nurse_by_id[n].maxload[s] for n in ns], dtype=float)
            for s, ns in zip(self.shifts, self.nurses)
        ]
        self.skill_pen = []
        for k, (s, ns) in enumerate(zip(self.shifts, self.nurses)):
            pen = np.zeros((len(pats), len(ns)))
            if k < 2:
                for i, p in enumerate(pats):
                    req = p.skillreq.get(s, 0)
                    if req >= 2:
                        for a, n in enumerate(ns):
                            if inst.nurse_by_id[n].skill < req:
                                pen[i, a] = 1.0
            self.skill_pen.append(pen)
        self.all_nurses = inst.nurse_ids
        self.all_index = {n: i for i, n in enumerate(self.all_nurses)}
        self.star = np.array(
            [sum(inst.distances.ar(a, r) for a in inst.additional_ids) for r in self.rooms]
        )
        R = len(self.rooms)
        self.dist = np.array([[inst.distances.rr(r, q) for q in self.rooms] for r in self.rooms]) \
            if R else np.zeros((0, 0))

    def _refresh_room(self, j: int) -> None:
        st, inst, w, d = self.st, self.st.inst, self.st.inst.weights, self.day
        r = self.rooms[j]
        full = not st.room_free(r, d)
        occ = st.occupants.get((r, d), [])
        groups = [inst.patient_by_id[q].agegroup for q in occ]
        genders = {inst.patient_by_id[q].gender for q in occ}
        spread = (max(groups) - min(groups)) if groups else 0
        equipment = set(inst.room_by_id[r].equipment)
        for i, p in enumerate(self.patients):
            if full or (p, d) in st.room_of:
                self.A[i, j] = INF
                continue
            pat = inst.patient_by_id[p]
            if d == 1 and pat.adshift == 0:
                tr = float(r != pat.prev_room)
            elif d > pat.first_day():
                tr = float(r != st.room_of[(p, d - 1)])
            else:
                tr = 0.0
            if groups:
                inc = max(max(groups), pat.agegroup) - min(min(groups), pat.agegroup) - spread
            else:
                inc = 0
            gen = float(len(genders) == 1 and pat.gender not in genders)
            eq = float(not set(pat.equipment_req.get(3 * d - 2, ())) <= equipment)
            het = max((self.H(p, q) for q in occ), default=0.0)
            self.A[i, j] = (w.transfers * tr + w.inconvenience * inc + w.gender * gen
                            + w.equipment * eq + w.heterogeneity * het)

    def _refresh_nurse_terms(self, k: int) -> None:
        st, inst, w = self.st, self.st.inst, self.st.inst.weights
        s, ns = self.shifts[k], self.nurses[k]
        P = len(self.patients)
        cont = np.zeros((P, len(ns)))
        for i, p in enumerate(self.patients):
            known = st.ever.get(p, set()) | set(inst.patient_by_id[p].prev_nurses)
            for a, n in enumerate(ns):
                if n not in known:
                    cont[i, a] = 1.0
        cur = np.array([st.load[(n, s)] for n in ns])
        M = self.maxload[k]
        wl = self.wl[k][:, None]
        load = np.maximum(0.0, cur + wl - M) - np.maximum(0.0, cur - M)
        delta = wl / M  # (P, Nk)
        rel = np.array([st.rel[(n, s)] for n in ns])
        # per-shift fairness against every other nurse of the shift
        diff = rel[:, None] - rel[None, :]  # (Nk, Nk): own - other
        grow = np.abs(diff[None, :, :] + delta[:, :, None]) - np.abs(diff)[None, :, :]
        eye = np.eye(len(ns), dtype=bool)
        fair_s = np.where(eye[None, :, :], 0.0, grow).sum(axis=2)
        # overall fairness against every other nurse, treated as unchanged
        tot = np.array([st.total[n] for n in self.all_nurses])
        own = np.array([st.total[n] for n in ns])
        diff_o = own[:, None] - tot[None, :]  # (Nk, N)
        grow_o = np.abs(diff_o[None, :, :] + delta[:, :, None]) - np.abs(diff_o)[None, :, :]
        selfmask = np.zeros((len(ns), len(self.all_nurses)), dtype=bool)
        for a, n in enumerate(ns):
            selfmask[a, self.all_index[n]] = True
        fair_o = np.where(selfmask[None, :, :], 0.0, grow_o).sum(axis=2)
        self.B[k] = w.continuity * cont + w.skill_load_fair * (self.skill_pen[k] + load + fair_s + fair_o)
        self._delta[k] = delta

    def _refresh_nurse_room(self, k: int, a: int) -> None:
        st, inst, w = self.st, self.st.inst, self.st.inst.weights
        s, n = self.shifts[k], self.nurses[k][a]
        vis = st.visited[(n, s)]
        vis_idx = [self.r_index[r] for r in sorted(vis)]
        new = np.array([0.0 if r in vis else 1.0 for r in self.rooms])
        circ = self.dist[:, vis_idx].sum(axis=1) if vis_idx else np.zeros(len(self.rooms))
        walk = new * (inst.walk_weights.circular[s] * circ + inst.walk_weights.star[s] * self.star)
        self.C[k][a] = w.nurses_per_room * new + w.walking * walk

    def _refresh_coupling(self) -> None:
        st, w = self.st, self.st.inst.weights
        T = [np.array([st.total[n] for n in ns]) for ns in self.nurses]
        De, Dl, Dn = self._delta
        P = len(self.patients)
        E, L, N = (len(ns) for ns in self.nurses)
        # (P, E, L, N) broadcast views
        x = [T[0][None, :, None, None], T[1][None, None, :, None], T[2][None, None, None, :]]
        dx = [De[:, :, None, None], Dl[:, None, :, None], Dn[:, None, None, :]]

        def pair(i, j):
            xi, di, xj, dj = x[i], dx[i], x[j], dx[j]
            return ((np.abs(xi + di - xj - dj) - np.abs(xi + di - xj))
                    - np.abs(xi - xj - dj)) + np.abs(xi - xj)

        D = (pair(0, 1) + pair(0, 2)) + pair(1, 2)
        self.D = np.ascontiguousarray(
            w.skill_load_fair * np.broadcast_to(D, (P, E, L, N)), dtype=float)

    def _refresh_sums(self) -> None:
        self.U = [np.ascontiguousarray(self.B[k][:, :, None] + self.C[k][None, :, :]) for k in range(3)]
        self._refresh_coupling()

    def _cap_mask(self, k: int) -> np.ndarray:
        vals = kernels.materialize(self.A, *self.U, self.D)
        P, R, E, L, N = vals.shape
        flat = vals.reshape(P, R, E * L * N)
        order = np.argsort(flat, axis=2, kind="stable")[:, :, :k]
        mask = np.zeros((P, R, E * L * N), dtype=np.uint8)
        np.put_along_axis(mask, order, 1, axis=2)
        return mask.reshape(P, R, E, L, N)

    # logical table view
    def _locate(self, p, ncomb, r):
        i = self.p_index.get(p)
        j = self.r_index.get(r)
        idx = [self.n_index[k].get(n) for k, n in enumerate(ncomb)]
        if i is None or j is None or None in idx:
            return None
        return (i, j, *idx)

    def value(self, p: str, ncomb: tuple[str, str, str], r: str) -> Optional[float]:
        loc = self._locate(p, ncomb, r)
        if loc is None:
            return None
        i, j, e, l, n = loc
        if self.mask is not None and not self.mask[i, j, e, l, n]:
            return None
        v = (((self.A[i, j] + self.U[0][i, e, j]) + self.U[1][i, l, j]) + self.U[2][i, n, j]) + self.D[i, e, l, n]
        return None if v == INF else float(v)

    def entries(self) -> dict:
        vals = kernels.materialize(self.A, *self.U, self.D, self.mask)
        out = {}
        for i, j, e, l, n in zip(*np.nonzero(np.isfinite(vals))):
            key = (self.patients[i], (self.nurses[0][e], self.nurses[1][l], self.nurses[2][n]), self.rooms[j])
            out[key] = float(vals[i, j, e, l, n])
        return out

    def __len__(self) -> int:
        return len(self.entries())

    def argmin(self):
        """Cheapest entry as ``(patient, triple, room, value)``; ties go to the
        lexicographically smallest (patient, room, early, late, night) ids."""
        hit = self._argmin(self.A, self.U[0], self.U[1], self.U[2], self.D, self.mask)
        if hit is None:
            return None
        i, j, e, l, n, v = hit
        return (self.patients[i], (self.nurses[0][e], self.nurses[1][l], self.nurses[2][n]),
                self.rooms[j], v)

    def fix(self, p: str, ncomb: tuple[str, str, str], r: str) -> None:
        """Apply the chosen entry to the partial state and refresh affected terms."""
        if self.value(p, ncomb, r) is None:
            raise KeyError(f"({p}, {ncomb}, {r}) is not in the table")
        self.st.apply(p, ncomb, r, self.day)
        i, j = self.p_index[p], self.r_index[r]
        self.A[i, :] = INF
        self._refresh_room(j)
        for k, n in enumerate(ncomb):
            self._refresh_nurse_terms(k)
            self._refresh_nurse_room(k, self.n_index[k][n])
        self._refresh_sums()


def calculate_contribution_table(st: PartialState, H: HeterogeneityMatrix, day: int,
                                 **kw) -> ContributionTable:
    return ContributionTable(st, H, day, **kw)


def update_table(tbl: ContributionTable, chosen, st: Optional[PartialState] = None) -> ContributionTable:
    p, ncomb, r = chosen[:3]
    if st is not None and st is not tbl.st:
        raise ValueError("table belongs to a different partial state")
    tbl.fix(p, ncomb, r)
    return tbl


# -- driver ----------------------------------------------------------------------


@dataclass
class HeuristicResult:
    solution: Solution
    breakdown: ObjectiveBreakdown
    wall_ms: float
    fixes: int


def run_heuristic(inst: Instance, max_triples_per_patient: Optional[int] = None,
                  backend: Optional[str] = None,
                  on_fix: Optional[Callable[[ContributionTable, tuple], None]] = None) -> HeuristicResult:
    t0 = time.perf_counter()
    H = build_het_matrix(inst.patients)
    st = PartialState(inst)
    fixes = 0
    for d in range(1, inst.num_days + 1):
        tbl = ContributionTable(st, H, d, max_triples_per_patient, backend)
        for _ in range(len(tbl.patients)):
            best = tbl.argmin()
            if best is None:
                raise HeuristicInfeasible(d, "not enough free beds for the in-ward patients")
            tbl.fix(*best[:3])
            fixes += 1
            if on_fix is not None:
                on_fix(tbl, best)
    sol = st.solution()
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return HeuristicResult(sol, eval_total(inst, sol), wall_ms, fixes)


def solve_heuristic(inst: Instance, seed: Optional[int] = None, **kw) -> tuple[Solution, ObjectiveBreakdown]:
    """Greedy solution and its score.

    The construction is deterministic; ``seed`` is accepted for interface
    symmetry with the other solvers and has no effect.
    """
    res = run_heuristic(inst, **kw)
    return res.solution, res.breakdown
