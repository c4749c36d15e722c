import json

import pytest
from hypothesis import given, settings, strategies as st

from griddisp.grid import (
    E, N, S, W, DELTA, GridSpec, GridSpecError, NodeClass, build_grid, corner_identity,
    node_profile, oracle_position, rectangle, square, traverse,
)


def brute_census(rows, cols):
    # neighbour counts straight from coordinates, no port tables involved
    out = {2: 0, 3: 0, 4: 0}
    for r in range(rows):
        for c in range(cols):
            deg = sum(1 for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0))
                      if 0 <= r + dr < rows and 0 <= c + dc < cols)
            out[deg] += 1
    return out


@pytest.mark.parametrize("spec, expected", [
    (square(4, "oriented"), {2: 4, 3: 8, 4: 4}),
    (square(3, "oriented"), {2: 4, 3: 4, 4: 1}),
    (square(3, "unoriented", 5), {2: 4, 3: 4, 4: 1}),
    (rectangle(6, 3), {2: 4, 3: 10, 4: 4}),
])
def test_census_small(spec, expected):
    assert build_grid(spec).census() == expected


def test_census_matches_brute_force_over_sides_and_seeds():
    for side in range(3, 21):
        for seed in (0, 7, 19):
            g = build_grid(square(side, "unoriented", seed))
            c = g.census()
            assert c == brute_census(side, side)
            assert c[3] == 4 * side - 8
            assert c[4] == side * side - 4 * side + 4


@pytest.mark.parametrize("bad", [
    dict(kind="square", side=2),
    dict(kind="square", side=0),
    dict(kind="rectangle", length=5, width=2),
    dict(kind="rectangle", length=3, width=5),
    dict(kind="hexagon", side=4),
    dict(kind="square", side=4, orientation="sideways"),
])
def test_spec_rejects(bad):
    with pytest.raises(GridSpecError):
        GridSpec.from_dict(bad)


def test_spec_json_roundtrip():
    spec = rectangle(8, 4, "unoriented", 99)
    assert GridSpec.from_json(spec.to_json()) == spec
    assert spec.n == 32 and spec.span == 8


def test_traverse_is_symmetric():
    g = build_grid(square(6, "unoriented", 3))
    for v in range(g.n):
        for p in range(1, g.degree(v) + 1):
            u, q = traverse(g, v, p)
            assert traverse(g, u, q) == (v, p)


def test_traverse_rejects_bad_port():
    g = build_grid(square(4))
    corner = g.node_at(0, 0)
    with pytest.raises(ValueError):
        g.traverse(corner, 3)
    with pytest.raises(ValueError):
        g.traverse(corner, 0)


def test_oriented_east_moves_one_column():
    g = build_grid(square(5, "oriented"))
    for v in range(g.n):
        _, _, dirs = node_profile(g, v)
        if E in dirs:
            u, _ = traverse(g, v, dirs.index(E) + 1)
            r, c = oracle_position(g, v)
            assert oracle_position(g, u) == (r, c + 1)


def test_oriented_port_order_is_wsen_restricted():
    g = build_grid(rectangle(7, 4, "oriented"))
    for v in range(g.n):
        _, _, dirs = node_profile(g, v)
        assert list(dirs) == sorted(dirs)


def test_unoriented_ports_are_permutations():
    g = build_grid(square(4, "unoriented", 7))
    for v in range(g.n):
        assert sorted(p for p in range(1, g.degree(v) + 1)) == list(range(1, g.degree(v) + 1))
        nbrs = [u for u, _ in g.adj[v]]
        assert len(set(nbrs)) == g.degree(v)


def test_unoriented_hides_directions():
    g = build_grid(square(4, "unoriented", 7))
    for v in range(g.n):
        assert node_profile(g, v)[2] is None


def test_node_profile_classes():
    g = build_grid(square(5, "oriented"))
    assert node_profile(g, g.node_at(0, 0))[:2] == (2, NodeClass.CORNER)
    assert node_profile(g, g.node_at(0, 2))[:2] == (3, NodeClass.BOUNDARY)
    deg, cls, dirs = node_profile(g, g.node_at(2, 2))
    assert (deg, cls) == (4, NodeClass.INTERNAL)
    assert sorted(dirs) == [W, S, E, N]


def test_corners_sit_at_extremes():
    g = build_grid(rectangle(6, 4, "unoriented", 2))
    corners = {oracle_position(g, v) for v in range(g.n) if g.degree(v) == 2}
    assert corners == {(0, 0), (0, 5), (3, 0), (3, 5)}


def test_odd_side_has_unique_equidistant_centre():
    side = 7
    g = build_grid(square(side, "oriented"))
    corners = [oracle_position(g, v) for v in range(g.n) if g.degree(v) == 2]
    equal = []
    for v in range(g.n):
        r, c = oracle_position(g, v)
        dist = {abs(r - cr) + abs(c - cc) for cr, cc in corners}
        if len(dist) == 1:
            equal.append((r, c))
    assert equal == [(3, 3)]


def test_corner_identity_table_and_oracle():
    assert corner_identity((E, S)) == "NW"
    assert corner_identity((W, S)) == "NE"
    assert corner_identity((W, N)) == "SE"
    assert corner_identity((E, N)) == "SW"
    for side in range(3, 23):
        g = build_grid(square(side, "oriented"))
        last = side - 1
        expect = {(0, 0): "NW", (0, last): "NE", (last, last): "SE", (last, 0): "SW"}
        for pos, name in expect.items():
            assert corner_identity(node_profile(g, g.node_at(*pos))[2]) == name
    with pytest.raises(ValueError):
        corner_identity((E, S, W))
    with pytest.raises(ValueError):
        corner_identity(None)


def test_same_spec_same_serialization():
    a = build_grid(square(6, "unoriented", 12345)).serialize()
    b = build_grid(square(6, "unoriented", 12345)).serialize()
    c = build_grid(square(6, "unoriented", 12346)).serialize()
    assert a == b and a != c
    json.loads(a)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(3, 12), st.integers(0, 2**32), st.sampled_from(["oriented", "unoriented"]))
def test_direction_consistency_property(a, b, seed, orientation):
    ln, wd = max(a, b), min(a, b)
    g = build_grid(rectangle(ln, wd, orientation, seed))
    assert g.census() == brute_census(wd, ln)
    for v in range(g.n):
        r, c = oracle_position(g, v)
        for p in range(1, g.degree(v) + 1):
            u, q = g.traverse(v, p)
            d = g.oracle_direction(v, p)
            dr, dc = DELTA[d]
            assert oracle_position(g, u) == (r + dr, c + dc)
            assert g.oracle_direction(u, q) == (d + 2) % 4
