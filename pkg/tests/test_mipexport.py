import random

import pytest

from iprnpa.instgen import generate_instance, preset
from iprnpa.mipexport import (ExportError, ModelFormatError, expected_counts, export, export_full_mip,
                              export_npa, export_pra, export_roster_bip, family, family_counts, header_counts,
                              read_lp, roster_point, write_lp, write_mps)
from iprnpa.model import Nurse, Solution
from iprnpa.oracle import check_mip_point, enumerate_optimal, random_feasible_solution, tiny_instance
from iprnpa.roster import RosterRequest, uniform_requirement

from conftest import build, day_nurses, patient

TRIPLE = ("n1", "n2", "n3")


def one_patient(**kw):
    return build([patient("p1", **kw)], rooms=(("r1", 1),))


def test_single_patient_counts():
    vars_, rows = family_counts(export_full_mip(one_patient()))
    assert vars_["y"] == 1 and vars_["x"] == 3


def test_previous_nurses_fixed_by_equality():
    m = export_full_mip(one_patient(adshift=0, prev_room="r1", prev_nurses=("n2",)))
    row = m.row("ever_prev[p1][n2]")
    assert row.sense == "=" and row.rhs == 1 and row.terms == [("ever[p1][n2]", 1.0)]
    assert family_counts(m)[1]["ever_prev"] == 1


def test_agemin_rows_use_big_m_twelve():
    m = export_full_mip(build([patient("p1", age=45), patient("p2", age=81)], rooms=(("r1", 2),)))
    rows = [c for c in m.constraints if family(c.name) == "agemin_link"]
    assert rows
    for c in rows:
        ycoef = [a for v, a in c.terms if v.startswith("y[")]
        assert ycoef == [12.0]
        assert c.rhs == 12 + (4 if "[p1]" in c.name else 8)


@pytest.fixture(scope="module")
def generated():
    return generate_instance(preset("30beds-var1", weeks=1), 0)


def test_room_model_has_no_nurse_symbols(generated):
    m = export_pra(generated)
    vars_, rows = family_counts(m)
    assert not {"x", "ever", "inroom", "both", "d", "vio_load", "vio_fair"} & set(vars_)
    assert rows["capacity"] == len(generated.rooms) * generated.num_days
    assert any("weights: transfers=11.0 inconvenience=1.0 gender=5.0 equipment=5.0" in c for c in m.comments)


def test_nurse_model_folds_fixed_rooms():
    inst = build([patient("p1"), patient("p2")], rooms=(("A", 1), ("B", 1)))
    rooms = Solution({("p1", 1): "A", ("p2", 1): "B"}, {})
    m = export_npa(inst, rooms)
    assert "y" not in family_counts(m)[0]
    late = m.row("inroom_link[p1][n2][A][2]")
    assert sorted(late.terms) == [("inroom[n2][A][2]", 1.0), ("x[p1][n2][2]", -1.0)]
    assert late.sense == ">=" and late.rhs == 0
    assert not [c for c in m.constraints if c.name.startswith("inroom_link[p1][n2][B]")]
    both = m.row("both_link[n2][A][B][2]")
    assert sorted(both.terms) == [("both[n2][A][B][2]", 1.0), ("inroom[n2][A][2]", -1.0),
                                  ("inroom[n2][B][2]", -1.0)]
    assert (both.sense, both.rhs) == (">=", -1)


def test_single_nurse_per_shift_has_no_shift_fairness_rows():
    m = export_npa(one_patient(), Solution({("p1", 1): "r1"}, {}))
    assert "fair_shift" not in family_counts(m)[1]
    lone = build([], nurses=[Nurse("n1", 3, frozenset({1}), {1: 10.0})])
    assert "vio_fair" not in family_counts(export_full_mip(lone))[0]


def test_nurse_model_refuses_infeasible_rooms():
    inst = build([patient("p1"), patient("p2")], rooms=(("A", 1), ("B", 1)))
    with pytest.raises(ExportError):
        export_npa(inst, Solution({("p1", 1): "A", ("p2", 1): "A"}, {}))


def test_refuses_invalid_instance():
    with pytest.raises(ExportError):
        export_full_mip(build([patient("p1", adshift=0)]))


def test_roster_model_shape():
    req = RosterRequest({"a": 2, "b": 2, "c": 2}, uniform_requirement(1, {1: 1}), 5, 1)
    vars_, rows = family_counts(export_roster_bip(req))
    assert vars_["assign"] == 9
    assert "after_night" not in rows and "after_late" not in rows
    m = export_roster_bip(RosterRequest({"a": 2}, uniform_requirement(2, {1: 1}), 5, 2))
    assert sorted(v for v, _ in m.row("after_night[a][3]").terms) == ["assign[a][3]", "assign[a][4]", "assign[a][5]"]
    assert sorted(v for v, _ in m.row("after_late[a][2]").terms) == ["assign[a][2]", "assign[a][4]"]
    assert m.objective == [(f"assign[a][{s}]", 1.0) for s in range(1, 7)]
    night_then_early = roster_point(RosterRequest({"a": 2}, {}, 5, 2), {"a": frozenset({3, 4})})
    assert "after_night[a][3]" in m.violated_rows(night_then_early)


@pytest.mark.parametrize("seed", range(25))
def test_header_counts_match_emitted_rows(seed):
    inst = tiny_instance(seed)
    sol = random_feasible_solution(inst, random.Random(seed))
    for m in (export_full_mip(inst), export_full_mip(inst, age_order=False), export_pra(inst),
              export_npa(inst, sol)):
        assert header_counts(m) == family_counts(m)


def test_closed_forms_on_generated_instance(generated):
    m = export_full_mip(generated)
    vars_, rows = family_counts(m)
    exp = expected_counts(generated)
    assert {k.split()[1]: v[0] for k, v in exp.items() if k.startswith("var ")} == vars_
    assert {k.split()[1]: v[0] for k, v in exp.items() if k.startswith("row ")} == rows


@pytest.mark.parametrize("seed", range(25))
def test_lp_round_trip(seed):
    inst = tiny_instance(seed)
    m = export_full_mip(inst)
    text = write_lp(m)
    again = read_lp(text)
    assert write_lp(again) == text
    assert sorted(again.var_names()) == sorted(m.var_names())
    assert len(again.constraints) == len(m.constraints)


def test_reader_is_strict():
    text = write_lp(export_full_mip(tiny_instance(1)))
    with pytest.raises(ModelFormatError):
        read_lp(text.replace("Subject To", "Subject  To"))
    with pytest.raises(ModelFormatError):
        read_lp(text + "garbage line\n")


def test_submodels_partition_variables():
    inst = tiny_instance(6)
    sol = random_feasible_solution(inst, random.Random(1))
    full = set(export_full_mip(inst).var_names())
    pra = set(export_pra(inst).var_names())
    npa = set(export_npa(inst, sol).var_names())
    assert not pra & npa
    assert pra | npa == full


def test_mps_lists_every_row_and_column():
    m = export_full_mip(tiny_instance(2))
    text = write_mps(m)
    assert any(line.startswith("NAME") for line in text.splitlines())
    assert text.rstrip().endswith("ENDATA")
    for c in m.constraints:
        assert f" {c.name}" in text
    for v in m.variables:
        assert v.name in text


def test_dispatch_requires_inputs():
    inst = tiny_instance(0)
    with pytest.raises(ExportError):
        export(inst, "npa")
    with pytest.raises(ExportError):
        export(None, "roster")
    with pytest.raises(ExportError):
        export(inst, "cubic")


def test_capacity_violation_is_named():
    inst = build([patient("p1"), patient("p2")], rooms=(("A", 1), ("B", 1)))
    nurses = {**day_nurses("p1", 1, TRIPLE), **day_nurses("p2", 1, TRIPLE)}
    res = check_mip_point(export_full_mip(inst), Solution({("p1", 1): "A", ("p2", 1): "A"}, nurses))
    assert not res.feasible
    assert "capacity[A][1]" in res.violated
