import pytest

from griddisp.adversary import FixedSchedule, RandomCrashes, halving_schedule
from griddisp.alg3 import Alg3
from griddisp.checks import check_gathering, final_positions
from griddisp.engine import run_simulation
from griddisp.grid import build_grid, rectangle, square
from griddisp.runner import execute


@pytest.fixture(scope="module")
def two_corners():
    spec = square(6, "unoriented", 3)
    g = build_grid(spec)
    pl = {i: 0 for i in range(1, 9)}
    pl.update({i: 35 for i in range(9, 13)})
    _, ref = run_simulation(spec, pl, Alg3(), grid=g)
    return g, pl, ref


def tags(trace, prefix):
    return [(r, rid, arg) for r, rid, ev, arg in trace if ev == "phase" and arg.startswith(prefix)]


def test_fault_free_commits_on_first_trip(two_corners):
    _, _, ref = two_corners
    assert {arg for _, _, arg in tags(ref, "s2.trip")} == {"s2.trip:0"}
    assert len(tags(ref, "s2.commit")) == 12


def test_lost_seekers_force_a_retry(two_corners):
    g, pl, ref = two_corners
    seekers = {5, 6, 7, 8}
    sched = [(r, rid) for r, rid in halving_schedule(ref) if rid in seekers]
    assert len(sched) == 4
    res, trace = run_simulation(g.spec, pl, Alg3(), FixedSchedule(sched), grid=g)
    retried = {rid for _, rid, arg in tags(trace, "s2.trip:1")}
    # the far group may retry too: its records now disagree
    assert {1, 2, 3, 4} <= retried and not retried & seekers
    assert res.dispersed and check_gathering(trace, g) == []


def test_lost_stay_at_homes_force_a_retry(two_corners):
    g, pl, ref = two_corners
    start = min(r for r, _, _ in tags(ref, "s2.trip:0"))
    sched = [(start + 20, rid) for rid in (1, 2, 3, 4)]
    res, trace = run_simulation(g.spec, pl, Alg3(), FixedSchedule(sched), grid=g)
    retried = {rid for _, rid, arg in tags(trace, "s2.trip:1")}
    assert {5, 6, 7, 8} <= retried and not retried & {1, 2, 3, 4}
    assert res.dispersed and check_gathering(trace, g) == []


def test_random_crashes_side_eight():
    spec = square(8, "unoriented", 5)
    g = build_grid(spec)
    res, trace = run_simulation(spec, 5, Alg3(), RandomCrashes(0.02, 5), k=64, grid=g)
    assert res.dispersed
    dead = {rid for _, rid, ev, _ in trace if ev == "crashed"}
    live = [v for rid, v in final_positions(trace, g).items() if rid not in dead]
    assert len(live) == len(set(live)) == 64 - len(dead)


def test_single_robot():
    res, _ = run_simulation(square(6, "unoriented", 1), 2, Alg3(), k=1)
    assert res.dispersed and res.rounds_used == 0


def test_crash_free_equals_plain_dispersion():
    spec = square(5, "unoriented", 8)
    g = build_grid(spec)
    prog = Alg3()
    res, trace = run_simulation(spec, 8, prog, k=25, grid=g)
    assert res.dispersed and res.crashes == 0
    assert sorted(final_positions(trace, g).values()) == list(range(25))
    assert res.rounds_used <= prog.T3_end


@pytest.mark.parametrize("adv", [
    {"policy": "target_scouts", "seed": 1},
    {"policy": "halving"},
    {"policy": "random", "p": 0.05, "seed": 3},
])
def test_checks_under_adversaries(adv):
    spec = square(6, "unoriented", 2)
    out = execute(spec, "alg3", 36, 2, adv)
    assert out.passed, out.report.to_dict()
    assert out.report.stats["trips"] <= 7
    assert out.report.stats["iterations"] <= 12


def test_demand_table_is_counted_in_memory():
    spec = square(8, "unoriented", 1)
    prog = Alg3()
    res, _ = run_simulation(spec, 1, prog, k=64)
    side, logside = 8, 3
    assert prog.widths["tab"] >= 2 * side * logside
    assert res.max_peak_memory_bits >= prog.widths["tab"]


@pytest.mark.parametrize("ln, wd", [(6, 3), (8, 4), (10, 5)])
def test_rectangles(ln, wd):
    spec = rectangle(ln, wd, "unoriented", 3)
    out = execute(spec, "alg3", spec.n, 0, {"policy": "target_scouts", "seed": 0})
    assert out.passed, out.report.to_dict()
