from dataclasses import replace

import pytest

from iprnpa.instgen import generate_instance, preset
from iprnpa.model import ShiftCalendar, day_of, in_ward, shift_type, shifts_of_day, validate_instance

from conftest import build, patient


@pytest.mark.parametrize("s,expected", [(1, "early"), (6, "night"), (5, "late"), (2, "late"), (3, "night")])
def test_shift_type(s, expected):
    assert shift_type(s) == expected


def test_shift_type_rejects_out_of_range():
    with pytest.raises(ValueError):
        shift_type(0)
    with pytest.raises(ValueError):
        shift_type(7, num_shifts=6)


def test_calendar_layout():
    cal = ShiftCalendar(2)
    assert cal.S == 6
    assert shifts_of_day(2) == (4, 5, 6)
    assert [day_of(s) for s in range(1, 7)] == [1, 1, 1, 2, 2, 2]
    assert cal.early_shifts() == [1, 4] and cal.night_shifts() == [3, 6]


@pytest.mark.parametrize("adshift,dishift,s,expected", [(1, 6, 3, True), (1, 6, 7, False), (0, 3, 1, True),
                                                        (4, 6, 3, False), (4, 7, 7, True)])
def test_in_ward(adshift, dishift, s, expected):
    p = patient("p", num_days=2, adshift=adshift, dishift=dishift, prev_room="r1" if adshift == 0 else None)
    assert in_ward(p, s) is expected


@pytest.fixture(scope="module")
def ward():
    return generate_instance(preset("realward"), 0)


def test_ward_preset_without_patients_is_valid(ward):
    empty = replace(ward, patients=())
    assert validate_instance(empty) == []
    assert sorted(r.num_beds for r in ward.rooms) == [1] * 4 + [2] * 10 + [3] * 2 + [4]
    assert ward.total_beds == 34 and len(ward.additional_rooms) == 1


def test_carry_over_without_previous_room_is_one_violation():
    inst = build([patient("p1", adshift=0)])
    bad = validate_instance(inst)
    assert len(bad) == 1 and bad[0].rule == "required-when-adshift-0"


def test_bed_shortage_is_reported(ward):
    crowd = tuple(patient(f"x{k:02d}", num_days=ward.num_days, dishift=3) for k in range(35))
    bad = validate_instance(replace(ward, patients=crowd))
    assert [v.rule for v in bad] == ["bed-capacity"]
    assert "35 patients on 34 beds" in bad[0].message


@pytest.mark.parametrize("change,rule", [
    (dict(gender="X"), "F-or-M"),
    (dict(adshift=2), "zero-or-early"),
    (dict(dishift=2), "night-or-S+1"),
    (dict(age=-1), "nonnegative-integer"),
    (dict(workload={}), "defined-on-stay"),
    (dict(prev_nurses=frozenset({"zz"})), "references-nurses"),
])
def test_patient_field_rules(change, rule):
    inst = build([replace(patient("p1"), **change)])
    assert rule in [v.rule for v in validate_instance(inst)]


def test_shift_with_patients_but_no_nurse():
    inst = build([patient("p1")], nurses=())
    assert [v.rule for v in validate_instance(inst)] == ["nurse-on-duty"] * 3
