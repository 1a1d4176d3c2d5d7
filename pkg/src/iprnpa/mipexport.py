"""Linear-model export: the integrated MIP, its room and nurse submodels, and the
nurse-rostering BIP.

Models are built as :class:`ModelFile` objects and written as LP text
(``Minimize`` / ``Subject To`` / ``Bounds`` / ``Binaries`` / ``End``) or MPS.
Coefficients are printed with ``repr`` so that reading a file back and writing
it again reproduces it byte for byte.

Variable and row names follow ``family[index][index]...``.  The header of every
file lists the size of each family next to the closed-form count it must equal.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .evaluator import check_feasibility, check_structure
from .model import Instance, Solution, validate_instance
from .roster import LEVELS, RosterRequest

BIG_M_AGE = 12
_NAME_OK = re.compile(r"^[A-Za-z0-9_.\[\]]+$")
FULL, PRA, NPA, ROSTER = "full", "pra", "npa", "roster"


class ExportError(ValueError):
    """The model cannot be built for the given input."""


class ModelFormatError(ValueError):
    """An LP file does not follow the grammar written by :func:`write_lp`."""


@dataclass
class Variable:
    name: str
    kind: str = "continuous"  # or "binary"
    lb: float = 0.0
    ub: Optional[float] = None


@dataclass
class Constraint:
    name: str
    terms: list  # [(variable name, coefficient)]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass
class ModelFile:
    name: str
    comments: list = field(default_factory=list)
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    sense: str = "minimize"
    instance: Optional[Instance] = field(default=None, repr=False, compare=False)

    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def row(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def objective_value(self, point: Mapping[str, float]) -> float:
        return math.fsum(c * point[v] for v, c in self.objective)

    def violated_rows(self, point: Mapping[str, float], tol: float = 1e-7) -> list[str]:
        out = []
        for c in self.constraints:
            lhs = math.fsum(a * point[v] for v, a in c.terms)
            slack = tol * (1.0 + abs(c.rhs))
            if ((c.sense == "<=" and lhs > c.rhs + slack) or (c.sense == ">=" and lhs < c.rhs - slack)
                    or (c.sense == "=" and abs(lhs - c.rhs) > slack)):
                out.append(c.name)
        for v in self.variables:
            x = point[v.name]
            if x < v.lb - tol or (v.ub is not None and x > v.ub + tol):
                out.append(f"bound:{v.name}")
            if v.kind == "binary" and min(abs(x), abs(x - 1)) > tol:
                out.append(f"integrality:{v.name}")
        return out


def family(name: str) -> str:
    return name.split("[", 1)[0]


def family_counts(model: ModelFile) -> tuple[dict[str, int], dict[str, int]]:
    """(variables per family, rows per family)."""
    vs: dict[str, int] = {}
    rs: dict[str, int] = {}
    for v in model.variables:
        vs[family(v.name)] = vs.get(family(v.name), 0) + 1
    for c in model.constraints:
        rs[family(c.name)] = rs.get(family(c.name), 0) + 1
    return vs, rs


def header_counts(model: ModelFile) -> tuple[dict[str, int], dict[str, int]]:
    """Counts declared in the header comments."""
    vs, rs = {}, {}
    for line in model.comments:
        m = re.match(r"^(var|row) (\w+): (\d+) = ", line)
        if m:
            (vs if m.group(1) == "var" else rs)[m.group(2)] = int(m.group(3))
    return vs, rs


# -- builder -----------------------------------------------------------------------


class _Builder:
    def __init__(self, name: str):
        self.model = ModelFile(name)
        self._vars: dict[str, Variable] = {}
        self._obj: dict[str, float] = {}

    def var(self, name: str, kind: str = "binary") -> str:
        if name not in self._vars:
            if not _NAME_OK.match(name):
                raise ExportError(f"identifier {name!r} cannot be written to a model file")
            v = Variable(name, kind, 0.0, None)
            self._vars[name] = v
            self.model.variables.append(v)
        return name

    def row(self, name: str, terms: Iterable, sense: str, rhs: float) -> None:
        agg: dict[str, float] = {}
        for v, c in terms:
            agg[v] = agg.get(v, 0.0) + float(c)
        if not agg:
            raise ExportError(f"row {name} has no variables")
        self.model.constraints.append(Constraint(name, list(agg.items()), sense, float(rhs)))

    def obj(self, v: str, c: float) -> None:
        if c:
            self._obj[v] = self._obj.get(v, 0.0) + float(c)

    def done(self, comments: list[str]) -> ModelFile:
        self.model.objective = [(v, c) for v, c in self._obj.items() if c != 0.0]
        self.model.comments = comments
        return self.model


def _idx(*parts) -> str:
    return "".join(f"[{p}]" for p in parts)


# -- index sets shared by builders and count formulas --------------------------------


class _Sets:
    def __init__(self, inst: Instance):
        D = inst.num_days
        self.inst = inst
        self.R = inst.room_ids
        self.P = inst.patient_ids
        self.N = inst.nurse_ids
        self.days = {p: list(inst.patient_by_id[p].stay_days(D)) for p in self.P}
        self.shifts = {p: list(inst.patient_by_id[p].stay_shifts(D)) for p in self.P}
        self.on = inst.nurses_on
        self.S_of = {n: sorted(inst.nurse_by_id[n].shifts) for n in self.N}
        self.trans = {}
        for p in self.P:
            pat = inst.patient_by_id[p]
            ts = [0] if pat.adshift == 0 else []
            ts += [3 * d for d in self.days[p] if 3 * d < inst.S and 3 * d <= pat.dishift - 1]
            self.trans[p] = ts
        self.occupied_days = sorted({d for p in self.P for d in self.days[p]})

    def skill_rows(self):
        inst = self.inst
        for p in self.P:
            pat = inst.patient_by_id[p]
            for s in self.shifts[p]:
                if s % 3 != 0 and pat.skillreq.get(s, 0) >= 2:
                    yield p, s


def expected_counts(inst: Instance, kind: str = FULL, age_order: bool = True,
                    fixed_rooms: Optional[Solution] = None) -> dict[str, tuple[int, str]]:
    """Closed-form size of every family: ``key -> (count, formula)``; keys are
    ``var <family>`` or ``row <family>``."""
    X = _Sets(inst)
    R, D = len(X.R), inst.num_days
    pd = sum(len(X.days[p]) for p in X.P)
    nx = sum(len(X.on[s]) for p in X.P for s in X.shifts[p])
    n0 = sum(1 for p in X.P if inst.patient_by_id[p].adshift == 0)
    nt = sum(X.days[p][-1] - X.days[p][0] for p in X.P) + n0
    nS = sum(len(X.S_of[n]) for n in X.N)
    pairs_s = sum(len(X.on[s]) * (len(X.on[s]) - 1) for s in range(1, inst.S + 1))
    N = len(X.N)
    nprev = sum(len(inst.patient_by_id[p].prev_nurses) for p in X.P)
    nskill = sum(1 for _ in X.skill_rows())
    fem = sum(len(X.days[p]) for p in X.P if inst.patient_by_id[p].gender == "F")
    out: dict[str, tuple[int, str]] = {}
    if kind in (FULL, PRA):
        out.update({
            "var y": (pd * R, "sum_p |days(p)| * |R|"),
            "var f_in_room": (R * D, "|R| * |days|"),
            "var m_in_room": (R * D, "|R| * |days|"),
            "var vio_gender": (R * D, "|R| * |days|"),
            "var trans": (nt, "sum_p (last(p) - first(p) + [adshift(p) = 0])"),
            "var agemax": (R * D, "|R| * |days|"),
            "var agemin": (R * D, "|R| * |days|"),
            "row room_assign": (pd, "sum_p |days(p)|"),
            "row capacity": (R * len(X.occupied_days), "|R| * |days with a patient|"),
            "row f_link": (fem * R, "sum_{p female} |days(p)| * |R|"),
            "row m_link": ((pd - fem) * R, "sum_{p male} |days(p)| * |R|"),
            "row gender_mix": (R * D, "|R| * |days|"),
            "row transfer": ((nt - n0) * R, "sum_p (last(p) - first(p)) * |R|"),
            "row transfer_prev": (n0 * (R - 1), "|{p: adshift(p) = 0}| * (|R| - 1)"),
            "row agemax_link": (pd * R, "sum_p |days(p)| * |R|"),
            "row agemin_link": (pd * R, "sum_p |days(p)| * |R|"),
            "row agemin_empty": (R * D, "|R| * |days|"),
        })
        if age_order:
            out["row age_order"] = (R * D, "|R| * |days|")
        if n0 * (R - 1) == 0:
            out.pop("row transfer_prev")
        if (nt - n0) * R == 0:
            out.pop("row transfer")
    if kind in (FULL, NPA):
        out.update({
            "var x": (nx, "sum_p sum_{s in stay(p)} |N(s)|"),
            "var vio_skill": (nskill, "|{(p, s): s day shift in stay(p), skillreq >= 2}|"),
            "var ever": (len(X.P) * N, "|P| * |N|"),
            "var vio_load": (nS, "sum_n |S(n)|"),
            "var vio_fair": (pairs_s + N * (N - 1), "sum_s |N(s)|(|N(s)|-1) + |N|(|N|-1)"),
            "var inroom": (nS * R, "sum_n |S(n)| * |R|"),
            "var both": (nS * R * (R - 1), "sum_n |S(n)| * |R|(|R|-1)"),
            "var d": (nS, "sum_n |S(n)|"),
            "row nurse_assign": (sum(len(X.shifts[p]) for p in X.P), "sum_p |stay(p)|"),
            "row skill": (nskill, "|{(p, s): s day shift in stay(p), skillreq >= 2}|"),
            "row ever_link": (nx, "sum_p sum_{s in stay(p)} |N(s)|"),
            "row ever_prev": (nprev, "sum_p |prev_nurses(p)|"),
            "row ever_upper": (len(X.P) * N - nprev, "|P| * |N| - sum_p |prev_nurses(p)|"),
            "row load": (nS, "sum_n |S(n)|"),
            "row fair_shift": (pairs_s, "sum_s |N(s)|(|N(s)|-1)"),
            "row fair_total": (N * (N - 1), "|N|(|N|-1)"),
            "row inroom_link": ((nx if kind == NPA else nx * R),
                                "sum_p sum_{s in stay(p)} |N(s)|" + ("" if kind == NPA else " * |R|")),
            "row both_link": (nS * R * (R - 1), "sum_n |S(n)| * |R|(|R|-1)"),
            "row walk": (nS, "sum_n |S(n)|"),
        })
    return {k: v for k, v in out.items() if v[0] > 0}


def _header(inst: Instance, kind: str, age_order: bool, fixed_rooms=None) -> list[str]:
    w = inst.weights
    lines = [f"model: {kind}", f"instance: {inst.name or '-'}"]
    if kind in (FULL, PRA):
        lines.append(f"weights: transfers={w.transfers!r} inconvenience={w.inconvenience!r} "
                     f"gender={w.gender!r} equipment={w.equipment!r}")
    if kind in (FULL, NPA):
        lines.append(f"weights: continuity={w.continuity!r} skill_load_fair={w.skill_load_fair!r} "
                     f"nurses_per_room={w.nurses_per_room!r} walking={w.walking!r}")
    if kind in (FULL, PRA):
        lines.append(f"age big-M: {BIG_M_AGE}; age order rows: {'on' if age_order else 'off'}")
    for key, (n, formula) in expected_counts(inst, kind, age_order, fixed_rooms).items():
        lines.append(f"{key}: {n} = {formula}")
    return lines


# -- integrated model families -------------------------------------------------------


def _room_part(b: _Builder, X: _Sets, age_order: bool) -> None:
    inst, w = X.inst, X.inst.weights
    R = X.R
    y = {}
    for p in X.P:
        for d in X.days[p]:
            s = 3 * d - 2
            for r in R:
                y[(p, r, s)] = b.var("y" + _idx(p, r, s))
    for d in range(1, inst.num_days + 1):
        s = 3 * d - 2
        for r in R:
            b.var("f_in_room" + _idx(r, s))
            b.var("m_in_room" + _idx(r, s))
            b.var("vio_gender" + _idx(r, s))
    for p in X.P:
        for s in X.trans[p]:
            b.var("trans" + _idx(p, s))
    for d in range(1, inst.num_days + 1):
        s = 3 * d - 2
        for r in R:
            b.var("agemax" + _idx(r, s), "continuous")
            b.var("agemin" + _idx(r, s), "continuous")

    # objectives: transfers, inconvenience, gender mixing, equipment
    for p in X.P:
        for s in X.trans[p]:
            b.obj("trans" + _idx(p, s), w.transfers)
    for d in range(1, inst.num_days + 1):
        s = 3 * d - 2
        for r in R:
            b.obj("agemax" + _idx(r, s), w.inconvenience)
            b.obj("agemin" + _idx(r, s), -w.inconvenience)
            b.obj("vio_gender" + _idx(r, s), w.gender)
    for p in X.P:
        pat = inst.patient_by_id[p]
        for d in X.days[p]:
            s = 3 * d - 2
            need = set(pat.equipment_req.get(s, ()))
            for r in R:
                if not need <= set(inst.room_by_id[r].equipment):
                    b.obj(y[(p, r, s)], w.equipment)

    for p in X.P:
        for d in X.days[p]:
            s = 3 * d - 2
            b.row("room_assign" + _idx(p, s), [(y[(p, r, s)], 1) for r in R], "=", 1)
    for d in X.occupied_days:
        s = 3 * d - 2
        for r in R:
            b.row("capacity" + _idx(r, s),
                  [(y[(p, r, s)], 1) for p in X.P if (p, r, s) in y], "<=", inst.room_by_id[r].num_beds)
    for p in X.P:
        g = inst.patient_by_id[p].gender
        fam, ind = ("f_link", "f_in_room") if g == "F" else ("m_link", "m_in_room")
        for d in X.days[p]:
            s = 3 * d - 2
            for r in R:
                b.row(fam + _idx(p, r, s), [(y[(p, r, s)], 1), (ind + _idx(r, s), -1)], "<=", 0)
    for d in range(1, inst.num_days + 1):
        s = 3 * d - 2
        for r in R:
            b.row("gender_mix" + _idx(r, s), [("f_in_room" + _idx(r, s), 1), ("m_in_room" + _idx(r, s), 1),
                                              ("vio_gender" + _idx(r, s), -1)], "<=", 1)
    for p in X.P:
        for s in X.trans[p]:
            if s == 0:
                continue
            for r in R:
                b.row("transfer" + _idx(p, r, s), [(y[(p, r, s + 1)], 1), (y[(p, r, s - 2)], -1),
                                                   ("trans" + _idx(p, s), -1)], "<=", 0)
    for p in X.P:
        pat = inst.patient_by_id[p]
        if pat.adshift == 0:
            for r in R:
                if r != pat.prev_room:
                    b.row("transfer_prev" + _idx(p, r), [(y[(p, r, 1)], 1), ("trans" + _idx(p, 0), -1)], "<=", 0)
    for p in X.P:
        g = inst.patient_by_id[p].agegroup
        for d in X.days[p]:
            s = 3 * d - 2
            for r in R:
                b.row("agemax_link" + _idx(p, r, s), [("agemax" + _idx(r, s), 1), (y[(p, r, s)], -g)], ">=", 0)
    for p in X.P:
        g = inst.patient_by_id[p].agegroup
        for d in X.days[p]:
            s = 3 * d - 2
            for r in R:
                b.row("agemin_link" + _idx(p, r, s), [("agemin" + _idx(r, s), 1), (y[(p, r, s)], BIG_M_AGE)],
                      "<=", g + BIG_M_AGE)
    for d in range(1, inst.num_days + 1):
        s = 3 * d - 2
        for r in R:
            b.row("agemin_empty" + _idx(r, s),
                  [("agemin" + _idx(r, s), 1)] + [(y[(p, r, s)], -BIG_M_AGE) for p in X.P if (p, r, s) in y],
                  "<=", 0)
    if age_order:
        for d in range(1, inst.num_days + 1):
            s = 3 * d - 2
            for r in R:
                b.row("age_order" + _idx(r, s), [("agemin" + _idx(r, s), 1), ("agemax" + _idx(r, s), -1)], "<=", 0)


def _nurse_part(b: _Builder, X: _Sets, room_const: Optional[Mapping] = None) -> None:
    """Families IV-VII.  With ``room_const`` (``(p, day) -> room``) the room
    variables are replaced by constants and folded into the rows."""
    inst, w = X.inst, X.inst.weights
    R = X.R
    x = {}
    for p in X.P:
        for s in X.shifts[p]:
            for n in X.on[s]:
                x[(p, n, s)] = b.var("x" + _idx(p, n, s))
    for p, s in X.skill_rows():
        b.var("vio_skill" + _idx(p, s))
    for p in X.P:
        for n in X.N:
            b.var("ever" + _idx(p, n))
    for n in X.N:
        for s in X.S_of[n]:
            b.var("vio_load" + _idx(n, s), "continuous")
    for s in range(1, inst.S + 1):
        for n in X.on[s]:
            for m in X.on[s]:
                if n != m:
                    b.var("vio_fair" + _idx(n, m, s), "continuous")
    for n in X.N:
        for m in X.N:
            if n != m:
                b.var("vio_fair" + _idx(n, m), "continuous")
    for n in X.N:
        for s in X.S_of[n]:
            for r in R:
                b.var("inroom" + _idx(n, r, s))
    for n in X.N:
        for s in X.S_of[n]:
            for r in R:
                for r2 in R:
                    if r != r2:
                        b.var("both" + _idx(n, r, r2, s))
    for n in X.N:
        for s in X.S_of[n]:
            b.var("d" + _idx(n, s), "continuous")

    # objectives: continuity, skill/load/fairness, nurses per room, walking
    for p in X.P:
        prev = inst.patient_by_id[p].prev_nurses
        for n in X.N:
            if n not in prev:
                b.obj("ever" + _idx(p, n), w.continuity)
    for p, s in X.skill_rows():
        b.obj("vio_skill" + _idx(p, s), w.skill_load_fair)
    for n in X.N:
        for s in X.S_of[n]:
            b.obj("vio_load" + _idx(n, s), w.skill_load_fair)
    for s in range(1, inst.S + 1):
        for n in X.on[s]:
            for m in X.on[s]:
                if n != m:
                    b.obj("vio_fair" + _idx(n, m, s), w.skill_load_fair)
    for n in X.N:
        for m in X.N:
            if n != m:
                b.obj("vio_fair" + _idx(n, m), w.skill_load_fair)
    for n in X.N:
        for s in X.S_of[n]:
            for r in R:
                b.obj("inroom" + _idx(n, r, s), w.nurses_per_room)
    for n in X.N:
        for s in X.S_of[n]:
            b.obj("d" + _idx(n, s), w.walking)

    for p in X.P:
        for s in X.shifts[p]:
            b.row("nurse_assign" + _idx(p, s), [(x[(p, n, s)], 1) for n in X.on[s]], "=", 1)
    for p, s in X.skill_rows():
        req = inst.patient_by_id[p].skillreq[s]
        b.row("skill" + _idx(p, s),
              [(x[(p, n, s)], 1) for n in X.on[s] if inst.nurse_by_id[n].skill >= req]
              + [("vio_skill" + _idx(p, s), 1)], "=", 1)
    for p in X.P:
        for s in X.shifts[p]:
            for n in X.on[s]:
                b.row("ever_link" + _idx(p, n, s), [(x[(p, n, s)], 1), ("ever" + _idx(p, n), -1)], "<=", 0)
    for p in X.P:
        prev = inst.patient_by_id[p].prev_nurses
        for n in X.N:
            if n in prev:
                b.row("ever_prev" + _idx(p, n), [("ever" + _idx(p, n), 1)], "=", 1)
    for p in X.P:
        prev = inst.patient_by_id[p].prev_nurses
        for n in X.N:
            if n not in prev:
                b.row("ever_upper" + _idx(p, n),
                      [("ever" + _idx(p, n), 1)] + [(x[(p, n, s)], -1) for s in X.shifts[p] if (p, n, s) in x],
                      "<=", 0)

    def rel_terms(n, s, sign):
        ml = inst.nurse_by_id[n].maxload[s]
        return [(x[(p, n, s)], sign * inst.patient_by_id[p].workload[s] / ml)
                for p in X.P if (p, n, s) in x]

    for n in X.N:
        ml = inst.nurse_by_id[n].maxload
        for s in X.S_of[n]:
            b.row("load" + _idx(n, s),
                  [(x[(p, n, s)], inst.patient_by_id[p].workload[s]) for p in X.P if (p, n, s) in x]
                  + [("vio_load" + _idx(n, s), -1)], "<=", ml[s])
    for s in range(1, inst.S + 1):
        for n in X.on[s]:
            for m in X.on[s]:
                if n != m:
                    b.row("fair_shift" + _idx(n, m, s),
                          rel_terms(n, s, 1) + rel_terms(m, s, -1) + [("vio_fair" + _idx(n, m, s), -1)], "<=", 0)
    for n in X.N:
        for m in X.N:
            if n != m:
                terms = [t for s in X.S_of[n] for t in rel_terms(n, s, 1)]
                terms += [t for s in X.S_of[m] for t in rel_terms(m, s, -1)]
                b.row("fair_total" + _idx(n, m), terms + [("vio_fair" + _idx(n, m), -1)], "<=", 0)
    for p in X.P:
        for s in X.shifts[p]:
            e = 3 * ((s + 2) // 3) - 2  # early shift of the same day
            for n in X.on[s]:
                for r in R:
                    name = "inroom_link" + _idx(p, n, r, s)
                    if room_const is None:
                        b.row(name, [("inroom" + _idx(n, r, s), 1), (x[(p, n, s)], -1), ("y" + _idx(p, r, e), -1)],
                              ">=", -1)
                    elif room_const.get((p, (s + 2) // 3)) == r:  # y = 1
                        b.row(name, [("inroom" + _idx(n, r, s), 1), (x[(p, n, s)], -1)], ">=", 0)
                    # y = 0: the row reads inroom >= x - 1 and is implied by the bounds
    for n in X.N:
        for s in X.S_of[n]:
            for r in R:
                for r2 in R:
                    if r != r2:
                        b.row("both_link" + _idx(n, r, r2, s),
                              [("both" + _idx(n, r, r2, s), 1), ("inroom" + _idx(n, r, s), -1),
                               ("inroom" + _idx(n, r2, s), -1)], ">=", -1)
    dist = inst.distances
    for n in X.N:
        for s in X.S_of[n]:
            wc = inst.walk_weights.circular[s]
            ws = inst.walk_weights.star[s]
            terms = [("d" + _idx(n, s), 1.0)]
            for r in R:
                for r2 in R:
                    if r != r2:
                        c = 0.5 * wc * dist.rr(r, r2)
                        if c:
                            terms.append(("both" + _idx(n, r, r2, s), -c))
            for r in R:
                c = ws * math.fsum(dist.ar(a, r) for a in inst.additional_ids)
                if c:
                    terms.append(("inroom" + _idx(n, r, s), -c))
            b.row("walk" + _idx(n, s), terms, "=", 0)


def _require_valid(inst: Instance) -> None:
    bad = validate_instance(inst)
    if bad:
        raise ExportError(f"invalid instance: {bad[0].field} ({bad[0].rule})")


def export_full_mip(inst: Instance, age_order: bool = True) -> ModelFile:
    """The integrated model: all objectives and constraint families."""
    _require_valid(inst)
    X = _Sets(inst)
    b = _Builder(FULL)
    _room_part(b, X, age_order)
    _nurse_part(b, X)
    m = b.done(_header(inst, FULL, age_order))
    m.instance = inst
    return m


def export_pra(inst: Instance, age_order: bool = True) -> ModelFile:
    """Room part: transfer, inconvenience, gender and equipment objectives only."""
    _require_valid(inst)
    b = _Builder(PRA)
    _room_part(b, _Sets(inst), age_order)
    m = b.done(_header(inst, PRA, age_order))
    m.instance = inst
    return m


def export_npa(inst: Instance, fixed_rooms: Solution) -> ModelFile:
    """Nurse part with the rooms of ``fixed_rooms`` substituted as constants."""
    _require_valid(inst)
    rooms_only = Solution(dict(fixed_rooms.room_of), {})
    check_structure(inst, rooms_only)
    room_families = {"room-outside-stay", "room-assignment", "room-capacity"}
    bad = [v for v in check_feasibility(inst, rooms_only).violations if v.family in room_families]
    if bad:
        raise ExportError(f"fixed rooms are infeasible: {bad[0].family} at shift {bad[0].shift}")
    b = _Builder(NPA)
    _nurse_part(b, _Sets(inst), room_const=fixed_rooms.room_of)
    m = b.done(_header(inst, NPA, True, fixed_rooms))
    m.instance = inst
    return m


def export_roster_bip(req: RosterRequest) -> ModelFile:
    """Nurse-rostering BIP: fewest assignments subject to coverage and rest rules."""
    if req.num_days < 1 or req.max_shifts < 1:
        raise ExportError("num_days and max_shifts must be positive")
    S = req.S
    nurses = sorted(req.nurse_skills)
    b = _Builder(ROSTER)
    a = {(n, s): b.var("assign" + _idx(n, s)) for n in nurses for s in range(1, S + 1)}
    for v in a.values():
        b.obj(v, 1.0)
    for n in nurses:
        for s in range(1, S + 1, 3):
            b.row("one_per_day" + _idx(n, s), [(a[(n, t)], 1) for t in (s, s + 1, s + 2)], "<=", 1)
    for s in range(1, S + 1):
        for l in LEVELS:
            need = req.required(s, l)
            if need > 0:
                b.row("level" + _idx(s, l), [(a[(n, s)], 1) for n in nurses if req.nurse_skills[n] >= l], ">=", need)
        if req.total_required(s) > 0:
            b.row("total" + _idx(s), [(a[(n, s)], 1) for n in nurses], ">=", req.total_required(s))
    for n in nurses:
        b.row("max_shifts" + _idx(n), [(a[(n, s)], 1) for s in range(1, S + 1)], "<=", req.max_shifts)
    for n in nurses:
        for s in range(3, S, 3):  # nights with a following day in the horizon
            b.row("after_night" + _idx(n, s), [(a[(n, t)], 1) for t in (s, s + 1, s + 2)], "<=", 1)
        for s in range(2, S - 1, 3):
            b.row("after_late" + _idx(n, s), [(a[(n, s)], 1), (a[(n, s + 2)], 1)], "<=", 1)
    D, N = req.num_days, len(nurses)
    lines = [f"model: {ROSTER}", f"nurses: {N}; days: {D}; max_shifts: {req.max_shifts}",
             f"var assign: {N * 3 * D} = |N| * 3 * |days|",
             f"row one_per_day: {N * D} = |N| * |days|",
             f"row max_shifts: {N} = |N|"]
    if D > 1:
        lines += [f"row after_night: {N * (D - 1)} = |N| * (|days| - 1)",
                  f"row after_late: {N * (D - 1)} = |N| * (|days| - 1)"]
    return b.done(lines)


# -- points ---------------------------------------------------------------------------


def roster_point(req: RosterRequest, roster: Mapping[str, frozenset]) -> dict[str, float]:
    """0/1 values of the roster BIP's assign variables for ``roster``."""
    return {"assign" + _idx(n, s): float(s in roster.get(n, ()))
            for n in sorted(req.nurse_skills) for s in range(1, req.S + 1)}


def complete_point(inst: Instance, sol: Solution) -> dict[str, float]:
    """Values for every variable of the full model with auxiliaries set tightly."""
    X = _Sets(inst)
    D = inst.num_days
    R = X.R
    pt: dict[str, float] = {}
    occ: dict[tuple[str, int], list[str]] = {}
    for p in X.P:
        for d in X.days[p]:
            s = 3 * d - 2
            r0 = sol.room_of.get((p, d))
            for r in R:
                pt["y" + _idx(p, r, s)] = float(r == r0)
            if r0 is not None:
                occ.setdefault((r0, d), []).append(p)
    for d in range(1, D + 1):
        s = 3 * d - 2
        for r in R:
            ps = [inst.patient_by_id[q] for q in occ.get((r, d), [])]
            f = any(q.gender == "F" for q in ps)
            m = any(q.gender == "M" for q in ps)
            pt["f_in_room" + _idx(r, s)] = float(f)
            pt["m_in_room" + _idx(r, s)] = float(m)
            pt["vio_gender" + _idx(r, s)] = float(f and m)
            groups = [q.agegroup for q in ps]
            pt["agemax" + _idx(r, s)] = float(max(groups, default=0))
            pt["agemin" + _idx(r, s)] = float(min(groups, default=0))
    for p in X.P:
        pat = inst.patient_by_id[p]
        for s in X.trans[p]:
            d = s // 3
            before = pat.prev_room if s == 0 else sol.room_of.get((p, d))
            pt["trans" + _idx(p, s)] = float(sol.room_of.get((p, d + 1)) != before)

    for p in X.P:
        for s in X.shifts[p]:
            n0 = sol.nurse_of.get((p, s))
            for n in X.on[s]:
                pt["x" + _idx(p, n, s)] = float(n == n0)
    for p, s in X.skill_rows():
        n0 = sol.nurse_of.get((p, s))
        ok = n0 is not None and inst.nurse_by_id[n0].skill >= inst.patient_by_id[p].skillreq[s]
        pt["vio_skill" + _idx(p, s)] = float(not ok)
    for p in X.P:
        pat = inst.patient_by_id[p]
        seen = {sol.nurse_of.get((p, s)) for s in X.shifts[p]}
        for n in X.N:
            pt["ever" + _idx(p, n)] = float(n in seen or n in pat.prev_nurses)
    load: dict[tuple[str, int], float] = {}
    rel: dict[tuple[str, int], float] = {}
    visited: dict[tuple[str, int], set] = {}
    for (p, s), n in sol.nurse_of.items():
        if n in inst.nurse_by_id and s in inst.nurse_by_id[n].maxload and p in inst.patient_by_id:
            wl = inst.patient_by_id[p].workload.get(s, 0.0)
            load[(n, s)] = load.get((n, s), 0.0) + wl
            rel[(n, s)] = rel.get((n, s), 0.0) + wl / inst.nurse_by_id[n].maxload[s]
            r0 = sol.room_of.get((p, (s + 2) // 3))
            if r0 is not None:
                visited.setdefault((n, s), set()).add(r0)
    total = {n: math.fsum(rel.get((n, s), 0.0) for s in X.S_of[n]) for n in X.N}
    for n in X.N:
        for s in X.S_of[n]:
            pt["vio_load" + _idx(n, s)] = max(0.0, load.get((n, s), 0.0) - inst.nurse_by_id[n].maxload[s])
    for s in range(1, inst.S + 1):
        for n in X.on[s]:
            for m in X.on[s]:
                if n != m:
                    pt["vio_fair" + _idx(n, m, s)] = max(0.0, rel.get((n, s), 0.0) - rel.get((m, s), 0.0))
    for n in X.N:
        for m in X.N:
            if n != m:
                pt["vio_fair" + _idx(n, m)] = max(0.0, total[n] - total[m])
    dist = inst.distances
    for n in X.N:
        for s in X.S_of[n]:
            vis = visited.get((n, s), set())
            for r in R:
                pt["inroom" + _idx(n, r, s)] = float(r in vis)
            for r in R:
                for r2 in R:
                    if r != r2:
                        pt["both" + _idx(n, r, r2, s)] = float(r in vis and r2 in vis)
            wc, ws = inst.walk_weights.circular[s], inst.walk_weights.star[s]
            circ = math.fsum(0.5 * wc * dist.rr(r, r2) for r in vis for r2 in vis if r != r2)
            star = math.fsum(ws * math.fsum(dist.ar(a, r) for a in inst.additional_ids) for r in vis)
            pt["d" + _idx(n, s)] = circ + star
    return pt


# -- LP text ---------------------------------------------------------------------------

_TERMS_PER_LINE = 6


def _fmt(c: float) -> str:
    return repr(float(c))


def _terms_text(terms) -> list[str]:
    chunks = []
    for v, c in terms:
        sign = "-" if c < 0 or (c == 0 and math.copysign(1.0, c) < 0) else "+"
        chunks.append(f"{sign} {_fmt(abs(c))} {v}")
    return [" ".join(chunks[i:i + _TERMS_PER_LINE]) for i in range(0, len(chunks), _TERMS_PER_LINE)]


def write_lp(model: ModelFile) -> str:
    out = [f"\\ {c}" for c in model.comments]
    out.append("Minimize" if model.sense == "minimize" else "Maximize")
    lines = _terms_text(model.objective) or [""]
    out.append((" obj: " + lines[0]).rstrip())
    out.extend("   " + ln for ln in lines[1:])
    out.append("Subject To")
    for c in model.constraints:
        lines = _terms_text(c.terms)
        lines[-1] += f" {c.sense} {_fmt(c.rhs)}"
        out.append(f" {c.name}: {lines[0]}")
        out.extend("   " + ln for ln in lines[1:])
    out.append("Bounds")
    for v in model.variables:
        if v.kind == "continuous":
            if v.ub is None:
                out.append(f" {v.name} >= {_fmt(v.lb)}")
            else:
                out.append(f" {_fmt(v.lb)} <= {v.name} <= {_fmt(v.ub)}")
    out.append("Binaries")
    out.extend(f" {v.name}" for v in model.variables if v.kind == "binary")
    out.append("End")
    return "\n".join(out) + "\n"


_TERM = re.compile(r"([+-]) (\S+) (\S+)")


def _parse_terms(text: str, where: str) -> list:
    text = text.strip()
    terms = []
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ModelFormatError(f"{where}: cannot parse terms near {text[pos:pos + 30]!r}")
        sign, coef, name = m.groups()
        try:
            c = float(coef)
        except ValueError:
            raise ModelFormatError(f"{where}: bad coefficient {coef!r}") from None
        if not _NAME_OK.match(name):
            raise ModelFormatError(f"{where}: bad variable name {name!r}")
        terms.append((name, -c if sign == "-" else c))
        pos = m.end()
        if pos < len(text):
            if text[pos] != " ":
                raise ModelFormatError(f"{where}: expected a space after {name!r}")
            pos += 1
    return terms


def read_lp(text: str) -> ModelFile:
    """Strict reader for the LP dialect produced by :func:`write_lp`."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    model = ModelFile("")
    i = 0
    while i < len(lines) and lines[i].startswith("\\ "):
        model.comments.append(lines[i][2:])
        i += 1
    for c in model.comments:
        if c.startswith("model: "):
            model.name = c[len("model: "):]

    def expect(word):
        nonlocal i
        if i >= len(lines) or lines[i] != word:
            got = lines[i] if i < len(lines) else "end of file"
            raise ModelFormatError(f"line {i + 1}: expected {word!r}, got {got!r}")
        i += 1

    def block():
        """Logical lines (with continuations joined) until the next section keyword."""
        nonlocal i
        out = []
        while i < len(lines) and lines[i].startswith(" "):
            if lines[i].startswith("   "):
                if not out:
                    raise ModelFormatError(f"line {i + 1}: continuation without a row")
                out[-1] = (out[-1][0], out[-1][1] + " " + lines[i].strip())
            else:
                out.append((i + 1, lines[i][1:]))
            i += 1
        return out

    if i < len(lines) and lines[i] in ("Minimize", "Maximize"):
        model.sense = "minimize" if lines[i] == "Minimize" else "maximize"
        i += 1
    else:
        raise ModelFormatError(f"line {i + 1}: expected the objective section")
    obj = block()
    if len(obj) != 1 or not obj[0][1].startswith("obj:"):
        raise ModelFormatError("objective must be a single row named obj")
    model.objective = _parse_terms(obj[0][1][4:], "objective")
    expect("Subject To")
    seen_rows = set()
    for ln, body in block():
        name, sep, rest = body.partition(": ")
        if not sep or not _NAME_OK.match(name):
            raise ModelFormatError(f"line {ln}: bad row name")
        if name in seen_rows:
            raise ModelFormatError(f"line {ln}: duplicate row {name}")
        seen_rows.add(name)
        m = re.match(r"^(.*) (<=|>=|=) (\S+)$", rest)
        if not m:
            raise ModelFormatError(f"line {ln}: missing sense or right-hand side")
        try:
            rhs = float(m.group(3))
        except ValueError:
            raise ModelFormatError(f"line {ln}: bad right-hand side") from None
        model.constraints.append(Constraint(name, _parse_terms(m.group(1), f"line {ln}"), m.group(2), rhs))
    expect("Bounds")
    declared = set()
    for ln, body in block():
        m1 = re.match(r"^(\S+) >= (\S+)$", body)
        m2 = re.match(r"^(\S+) <= (\S+) <= (\S+)$", body)
        try:
            if m1:
                v = Variable(m1.group(1), "continuous", float(m1.group(2)), None)
            elif m2:
                v = Variable(m2.group(2), "continuous", float(m2.group(1)), float(m2.group(3)))
            else:
                raise ModelFormatError(f"line {ln}: bad bound")
        except ValueError:
            raise ModelFormatError(f"line {ln}: bad bound value") from None
        if v.name in declared:
            raise ModelFormatError(f"line {ln}: duplicate declaration of {v.name}")
        declared.add(v.name)
        model.variables.append(v)
    expect("Binaries")
    for ln, body in block():
        if not _NAME_OK.match(body) or body in declared:
            raise ModelFormatError(f"line {ln}: bad or duplicate binary {body!r}")
        declared.add(body)
        model.variables.append(Variable(body, "binary", 0.0, None))
    expect("End")
    if i != len(lines):
        raise ModelFormatError(f"line {i + 1}: content after End")
    used = {v for v, _ in model.objective} | {v for c in model.constraints for v, _ in c.terms}
    missing = used - declared
    if missing:
        raise ModelFormatError(f"undeclared variables: {sorted(missing)[:3]}")
    return model


def write_mps(model: ModelFile) -> str:
    """Fixed-order free-MPS rendering of the same model."""
    out = [f"* {c}" for c in model.comments]
    out.append(f"NAME {model.name or 'model'}")
    out.append("OBJSENSE")
    out.append("    MIN" if model.sense == "minimize" else "    MAX")
    out.append("ROWS")
    out.append(" N obj")
    kind = {"<=": "L", ">=": "G", "=": "E"}
    for c in model.constraints:
        out.append(f" {kind[c.sense]} {c.name}")
    col: dict[str, list] = {v.name: [] for v in model.variables}
    for v, c in model.objective:
        col[v].append(("obj", c))
    for row in model.constraints:
        for v, c in row.terms:
            col[v].append((row.name, c))
    out.append("COLUMNS")
    in_int = False
    for v in model.variables:
        if (v.kind == "binary") != in_int:
            out.append(f" MARKER 'MARKER' {'INTORG' if not in_int else 'INTEND'}")
            in_int = not in_int
        entries = col[v.name] or [("obj", 0.0)]
        for row, c in entries:
            out.append(f" {v.name} {row} {_fmt(c)}")
    if in_int:
        out.append(" MARKER 'MARKER' INTEND")
    out.append("RHS")
    for c in model.constraints:
        if c.rhs != 0:
            out.append(f" rhs {c.name} {_fmt(c.rhs)}")
    out.append("BOUNDS")
    for v in model.variables:
        if v.kind == "binary":
            out.append(f" BV bnd {v.name}")
        else:
            if v.lb != 0:
                out.append(f" LO bnd {v.name} {_fmt(v.lb)}")
            if v.ub is not None:
                out.append(f" UP bnd {v.name} {_fmt(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export(inst: Optional[Instance], kind: str, fixed_rooms: Optional[Solution] = None,
           roster_request: Optional[RosterRequest] = None) -> ModelFile:
    if kind == FULL:
        return export_full_mip(inst)
    if kind == PRA:
        return export_pra(inst)
    if kind == NPA:
        if fixed_rooms is None:
            raise ExportError("the nurse submodel needs fixed rooms")
        return export_npa(inst, fixed_rooms)
    if kind == ROSTER:
        if roster_request is None:
            raise ExportError("the roster model needs a roster request")
        return export_roster_bip(roster_request)
    raise ExportError(f"unknown model kind {kind!r}")
