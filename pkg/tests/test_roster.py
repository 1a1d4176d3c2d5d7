import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from iprnpa.mipexport import export_roster_bip, roster_point
from iprnpa.roster import (RosterInfeasible, RosterRequest, apportion, automatic_nurse_count, check_roster,
                           make_skills, parse_per_shift, solve_roster, uniform_requirement)


def test_one_day_three_nurses():
    req = RosterRequest({"a": 2, "b": 2, "c": 2}, uniform_requirement(1, {1: 1}), 5, 1)
    roster = solve_roster(req, seed=0)
    assert check_roster(req, roster) == []
    assert sorted(len(v) for v in roster.values()) == [1, 1, 1]
    assert set().union(*roster.values()) == {1, 2, 3}


def test_missing_experienced_nurse_is_infeasible():
    req = RosterRequest({"a": 2, "b": 2, "c": 2, "d": 1}, uniform_requirement(1, {3: 1}), 5, 1)
    with pytest.raises(RosterInfeasible) as err:
        solve_roster(req)
    assert err.value.level == 3


def test_no_day_work_after_a_night():
    req = RosterRequest({f"n{k}": 2 for k in range(6)}, uniform_requirement(4, {1: 1}), 4, 4)
    roster = solve_roster(req, seed=3)
    for n, shifts in roster.items():
        for s in shifts:
            if s % 3 == 0:
                assert s + 1 not in shifts and s + 2 not in shifts
            if s % 3 == 2:
                assert s + 2 not in shifts


def test_checker_flags_each_rule():
    req = RosterRequest({"a": 1, "b": 3}, uniform_requirement(2, {3: 1}), 2, 2)
    bad = {"a": frozenset({1, 2}), "b": frozenset({3, 4, 5})}
    msgs = " | ".join(check_roster(req, bad))
    for fragment in ("more than one shift on day 1", "more than 2 shifts", "after night shift 3",
                     "shift 6: 0 nurses with skill >= 3"):
        assert fragment in msgs
    late = {"a": frozenset({2, 4})}
    assert any("early shift 4 after late shift 2" in m
               for m in check_roster(RosterRequest({"a": 1}, {}, 5, 2), late))


def test_automatic_count_starts_at_lower_bound():
    base = uniform_requirement(7, {1: 2})
    num, roster, skills = automatic_nurse_count(base, {3: 0.2, 2: 0.6, 1: 0.2}, 7, 5, seed=0)
    assert num == 9 == len(skills)
    assert check_roster(RosterRequest(skills, base, 5, 7), roster) == []


def test_automatic_count_zero_requirement():
    assert automatic_nurse_count(uniform_requirement(3, {}), {1: 1.0}, 3, 5) == (0, {}, {})


def test_apportion_example():
    assert apportion(10, {3: 0.2, 2: 0.6, 1: 0.2}) == {3: 2, 2: 6, 1: 2}
    assert sum(apportion(27, {3: 0.2, 2: 0.6, 1: 0.2}).values()) == 27
    skills = make_skills(5, {2: 0.8, 1: 0.2})
    assert list(skills.values()) == [2, 2, 2, 2, 1]


def test_parse_per_shift():
    assert parse_per_shift("3:1, 2:2,1:1") == {3: 1, 2: 2, 1: 1}
    with pytest.raises(ValueError):
        parse_per_shift("4:1")


def brute_feasible(req):
    """Exhaustive search over every nurse's day pattern (off/early/late/night)."""
    nurses = sorted(req.nurse_skills)
    D = req.num_days
    patterns = []
    for choice in itertools.product(range(4), repeat=D):
        shifts = frozenset(3 * d + c for d, c in enumerate(choice) if c)
        if check_roster(RosterRequest({"x": 3}, {}, req.max_shifts, D), {"x": shifts}) == []:
            patterns.append(shifts)
    for combo in itertools.product(patterns, repeat=len(nurses)):
        if not check_roster(req, dict(zip(nurses, combo))):
            return True
    return False


def random_request(rng, max_nurses=8, max_days=4):
    D = rng.randint(1, max_days)
    N = rng.randint(1, max_nurses)
    skills = {f"n{k}": rng.randint(1, 3) for k in range(N)}
    req = {s: {l: c for l in (1, 2, 3) if (c := rng.choice([0, 0, 0, 1, 1, 2]))} for s in range(1, 3 * D + 1)}
    return RosterRequest(skills, req, rng.randint(1, 3 * D), D)


@pytest.mark.parametrize("seed", range(40))
def test_random_small_requests_against_brute_force(seed):
    rng = random.Random(seed)
    req = random_request(rng, max_nurses=4, max_days=2)
    try:
        roster = solve_roster(req, seed=seed)
    except RosterInfeasible:
        assert not brute_feasible(req)
        return
    assert check_roster(req, roster) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_returned_rosters_satisfy_bip_rows(seed):
    req = random_request(random.Random(seed))
    try:
        roster = solve_roster(req, seed=seed)
    except RosterInfeasible:
        return
    assert check_roster(req, roster) == []
    model = export_roster_bip(req)
    assert model.violated_rows(roster_point(req, roster)) == []
