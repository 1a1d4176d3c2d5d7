"""JSON instance and solution documents.

Identifiers are strings and shift/day indices are 1-based.  Emission is
canonical (sorted keys, sorted records) so equal objects give equal bytes.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

from .model import (
    AdditionalRoom,
    DistanceMatrix,
    Instance,
    Nurse,
    ObjectiveWeights,
    Patient,
    Room,
    Solution,
    WalkWeights,
)

SCHEMA_VERSION = 1

PathLike = Union[str, Path]


class FormatError(ValueError):
    """A document does not follow the instance/solution schema."""


def _int_keys(m: dict, conv=lambda v: v) -> dict:
    return {int(k): conv(v) for k, v in m.items()}


def _str_keys(m, conv=lambda v: v) -> dict:
    return {str(k): conv(m[k]) for k in sorted(m)}


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    room_ids = sorted(r.id for r in inst.rooms)
    add_ids = sorted(a.id for a in inst.additional_rooms)
    dist = inst.distances
    return {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "num_days": inst.num_days,
        "equipment_types": list(inst.equipment_types),
        "rooms": [
            {"id": r.id, "num_beds": r.num_beds, "equipment": sorted(r.equipment)}
            for r in sorted(inst.rooms, key=lambda r: r.id)
        ],
        "additional_rooms": [{"id": a} for a in add_ids],
        "distances": {
            "rooms": room_ids,
            "room_room": [[dist.rr(r, r2) for r2 in room_ids] for r in room_ids],
            "additional_rooms": add_ids,
            "add_room": [[dist.ar(a, r) for r in room_ids] for a in add_ids],
        },
        "patients": [
            {
                "id": p.id,
                "gender": p.gender,
                "age": p.age,
                "adshift": p.adshift,
                "dishift": p.dishift,
                "skillreq": _str_keys(p.skillreq),
                "workload": _str_keys(p.workload),
                "equipment_req": _str_keys(p.equipment_req, sorted),
                "prev_room": p.prev_room,
                "prev_nurses": sorted(p.prev_nurses),
            }
            for p in sorted(inst.patients, key=lambda p: p.id)
        ],
        "nurses": [
            {
                "id": n.id,
                "skill": n.skill,
                "shifts": sorted(n.shifts),
                "maxload": _str_keys(n.maxload),
            }
            for n in sorted(inst.nurses, key=lambda n: n.id)
        ],
        "walk_weights": {
            "circular": _str_keys(inst.walk_weights.circular),
            "star": _str_keys(inst.walk_weights.star),
        },
        "objective_weights": inst.weights.as_dict(),
    }


def instance_from_dict(doc: dict[str, Any]) -> Instance:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        rooms = tuple(
            Room(str(r["id"]), int(r["num_beds"]), frozenset(r.get("equipment", ())))
            for r in doc["rooms"]
        )
        adds = tuple(AdditionalRoom(str(a["id"])) for a in doc.get("additional_rooms", ()))
        d = doc["distances"]
        rr = {}
        for i, r in enumerate(d["rooms"]):
            for j, r2 in enumerate(d["rooms"]):
                if r != r2:
                    rr[(r, r2)] = float(d["room_room"][i][j])
        ar = {}
        for i, a in enumerate(d.get("additional_rooms", ())):
            for j, r in enumerate(d["rooms"]):
                ar[(a, r)] = float(d["add_room"][i][j])
        patients = tuple(
            Patient(
                id=str(p["id"]),
                gender=p["gender"],
                age=int(p["age"]),
                adshift=int(p["adshift"]),
                dishift=int(p["dishift"]),
                skillreq=_int_keys(p.get("skillreq", {}), int),
                workload=_int_keys(p.get("workload", {}), float),
                equipment_req=_int_keys(p.get("equipment_req", {}), frozenset),
                prev_room=p.get("prev_room"),
                prev_nurses=frozenset(p.get("prev_nurses", ())),
            )
            for p in doc["patients"]
        )
        nurses = tuple(
            Nurse(
                id=str(n["id"]),
                skill=int(n["skill"]),
                shifts=frozenset(int(s) for s in n["shifts"]),
                maxload=_int_keys(n.get("maxload", {}), float),
            )
            for n in doc["nurses"]
        )
        ww = doc["walk_weights"]
        walk = WalkWeights(_int_keys(ww["circular"], float), _int_keys(ww["star"], float))
        weights = ObjectiveWeights(**{k: float(v) for k, v in doc.get("objective_weights", {}).items()})
        return Instance(
            num_days=int(doc["num_days"]),
            rooms=rooms,
            additional_rooms=adds,
            distances=DistanceMatrix(rr, ar),
            patients=patients,
            nurses=nurses,
            walk_weights=walk,
            weights=weights,
            equipment_types=tuple(doc.get("equipment_types", ())),
            name=doc.get("name", ""),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"malformed instance document: {exc!r}") from exc


def solution_to_dict(sol: Solution, instance_ref: str = "") -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "instance_ref": instance_ref,
        "room_of": [
            {"patient": p, "day": d, "room": sol.room_of[(p, d)]} for p, d in sorted(sol.room_of)
        ],
        "nurse_of": [
            {"patient": p, "shift": s, "nurse": sol.nurse_of[(p, s)]} for p, s in sorted(sol.nurse_of)
        ],
    }


def solution_from_dict(doc: dict[str, Any]) -> Solution:
    if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        room_of = {(str(e["patient"]), int(e["day"])): str(e["room"]) for e in doc["room_of"]}
        nurse_of = {(str(e["patient"]), int(e["shift"])): str(e["nurse"]) for e in doc["nurse_of"]}
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed solution document: {exc!r}") from exc
    return Solution(room_of, nurse_of)


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def emit_instance(inst: Instance) -> str:
    return dumps(instance_to_dict(inst))


def parse_instance(text: str) -> Instance:
    try:
        return instance_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc)) from exc


def emit_solution(sol: Solution, instance_ref: str = "") -> str:
    return dumps(solution_to_dict(sol, instance_ref))


def parse_solution(text: str) -> Solution:
    try:
        return solution_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc)) from exc


def load_instance(path: PathLike) -> Instance:
    return parse_instance(Path(path).read_text())


def save_instance(inst: Instance, path: PathLike) -> None:
    Path(path).write_text(emit_instance(inst))


def load_solution(path: PathLike) -> Solution:
    return parse_solution(Path(path).read_text())


def save_solution(sol: Solution, path: PathLike, instance_ref: str = "") -> None:
    Path(path).write_text(emit_solution(sol, instance_ref))
