import pytest

from griddisp.alg2 import Alg2
from griddisp.checks import check_collinearity, final_positions, replay_positions
from griddisp.config import ConfigError, check_compatible
from griddisp.engine import run_simulation
from griddisp.grid import build_grid, rectangle, square
from griddisp.runner import execute


def gathering_nodes(trace, grid):
    return {before for (r, rid, ev, arg), before, _ in replay_positions(trace, grid)
            if ev == "phase" and arg == "s2.final"}


@pytest.fixture(scope="module")
def g5():
    return build_grid(square(5, "unoriented", 3))


def test_all_robots_on_one_internal_node():
    spec = square(4, "unoriented", 1)
    g = build_grid(spec)
    centre = g.node_at(1, 2)
    prog = Alg2()
    res, trace = run_simulation(spec, {i: centre for i in range(1, 17)}, prog, grid=g)
    assert res.dispersed
    assert sorted(final_positions(trace, g).values()) == list(range(16))
    assert res.rounds_used <= prog.default_budget()


def test_single_robot_settles_at_once():
    res, _ = run_simulation(square(6, "unoriented", 2), 5, Alg2(), k=1)
    assert res.dispersed and res.rounds_used == 0


def test_one_corner_group_stays_home(g5):
    res, trace = run_simulation(g5.spec, {1: 0, 2: 0, 3: 0}, Alg2(), grid=g5)
    assert res.dispersed
    assert gathering_nodes(trace, g5) == {0}


@pytest.mark.parametrize("low, high", [(0, 24), (24, 0)])
def test_groups_gather_at_min_id_corner(g5, low, high):
    # the min-id group sits two corners away from the other one
    pl = {1: low, 2: low, 3: high, 4: high, 5: high}
    res, trace = run_simulation(g5.spec, pl, Alg2(), grid=g5)
    assert res.dispersed
    assert gathering_nodes(trace, g5) == {low}


def test_lone_corner_robot_keeps_its_corner(g5):
    pl = {1: 0, 2: 0, 3: 4, 4: 4, 5: 20}
    res, trace = run_simulation(g5.spec, pl, Alg2(), grid=g5)
    lone = [(rid, before) for (r, rid, ev, arg), before, _ in replay_positions(trace, g5)
            if ev == "phase" and arg == "s2.lone"]
    assert lone == [(5, 20)]
    assert final_positions(trace, g5)[5] == 20
    assert res.dispersed and gathering_nodes(trace, g5) == {0}


@pytest.mark.parametrize("side, seed", [(4, 0), (6, 3), (9, 1), (12, 2)])
def test_full_load_passes_every_check(side, seed):
    spec = square(side, "unoriented", seed)
    out = execute(spec, "alg2", spec.n, seed)
    assert out.passed, out.report.to_dict()
    assert out.report.stats["boundary_walk"] <= 3 * side
    assert out.report.stats["stage2"] <= 18 * side


def test_stage_one_lines_are_straight():
    spec = square(9, "unoriented", 6)
    g = build_grid(spec)
    _, trace = run_simulation(spec, 6, Alg2(), k=40, grid=g)
    assert check_collinearity(trace, g) == []


@pytest.mark.parametrize("ln, wd", [(6, 3), (8, 4), (10, 5)])
def test_rectangles(ln, wd):
    spec = rectangle(ln, wd, "unoriented", 7)
    for k in (spec.n // 2, spec.n):
        out = execute(spec, "alg2", k, 1)
        assert out.passed, out.report.to_dict()


def test_refuses_crash_policies():
    with pytest.raises(ConfigError):
        check_compatible("alg2", square(4, "unoriented"), {"policy": "random", "p": 0.1})
