import pytest

from griddisp.checks import (
    check_bounds, check_collinearity, check_dispersion, check_gathering, iteration_stats,
    trace_dispersed,
)
from griddisp.engine import (
    SETTLE, RobotProgram, RobotState, RoundTrace, WorldState, move, run_simulation,
)
from griddisp.grid import build_grid, square
from griddisp.runner import execute


def world(grid, robots):
    states = {}
    for rid, (node, settled, crashed) in robots.items():
        s = RobotState(rid, node, {})
        s.settled, s.crashed = settled, crashed
        states[rid] = s
    return WorldState(grid, states)


@pytest.fixture(scope="module")
def g4():
    return build_grid(square(4))


def test_two_live_robots_on_one_node(g4):
    assert not check_dispersion(world(g4, {1: (3, True, False), 2: (3, True, False)}))


def test_full_occupancy(g4):
    w = world(g4, {i + 1: (i, True, False) for i in range(16)})
    assert check_dispersion(w, "faulty") and check_dispersion(w, "nonfaulty")


def test_crashed_robots_and_empty_nodes(g4):
    w = world(g4, {1: (0, True, False), 2: (0, False, True), 3: (5, True, False)})
    assert check_dispersion(w, "faulty")
    assert not check_dispersion(w, "nonfaulty")


def test_unsettled_robot_is_not_dispersed(g4):
    assert not check_dispersion(world(g4, {1: (0, False, False)}))


def test_unknown_mode(g4):
    with pytest.raises(ValueError):
        check_dispersion(world(g4, {}), "sometimes")


class Zigzag(RobotProgram):
    """Claims straight hops but turns every other step."""

    def step(self, robot, view):
        t = view.round
        if t == 0:
            robot.note("line")
        if t >= 4:
            return SETTLE
        robot.note("hop")
        want = 2 if t % 2 == 0 else 1
        return move(view.directions.index(want) + 1)


def test_wrong_port_program_is_caught():
    spec = square(6, "oriented")
    g = build_grid(spec)
    _, trace = run_simulation(spec, {1: g.node_at(2, 2)}, Zigzag(), grid=g)
    bad = check_collinearity(trace, g)
    assert len(bad) == 1 and bad[0]["robot"] == 1


def test_gathering_split_is_caught(g4):
    trace = RoundTrace([(0, 1, "placed", 0), (0, 2, "placed", 15),
                        (9, 1, "phase", "s2.final"), (9, 2, "phase", "s2.final")])
    assert check_gathering(trace, g4) == [{"round": 9, "nodes": [0, 15]}]


def test_iteration_stats_counts_resolutions():
    trace = RoundTrace([
        (10, 1, "phase", "s3.iter:0:6:3:6:c"),
        (15, 1, "settled", None), (16, 2, "crashed", None), (18, 3, "phase", "s3.full:2"),
        (30, 4, "phase", "s3.iter:1:3:2:2:c"),
    ])
    stats = iteration_stats(trace)
    assert [(s["full"], s["resolved"]) for s in stats] == [(1, 2), (0, 0)]
    assert stats[0]["needy"] == 3 and stats[0]["sent"] == 6


@pytest.mark.parametrize("protocol, orientation, adv", [
    ("alg1", "oriented", {"policy": "random", "p": 0.02, "seed": 1}),
    ("alg2", "unoriented", None),
    ("alg3", "unoriented", {"policy": "target_scouts", "seed": 2}),
])
def test_trace_only_report_agrees(protocol, orientation, adv):
    spec = square(6, orientation, 4)
    g = build_grid(spec)
    out = execute(spec, protocol, 30, 4, adv)
    again = check_bounds(out.trace, protocol, g, out.result.rounds_used, out.result.max_peak_memory_bits)
    assert trace_dispersed(out.trace, g) == out.result.dispersed
    assert again.to_dict() == out.report.to_dict()


def test_exceeding_a_bound_is_reported():
    spec = square(5, "unoriented", 1)
    g = build_grid(spec)
    out = execute(spec, "alg2", 10, 1)
    rep = check_bounds(out.trace, "alg2", g, rounds_used=200 * 5 + 1)
    assert not rep.ok
    assert [v["lemma"] for v in rep.lemma_violations] == ["alg2.rounds"]
