"""Square and rectangular grid graphs with port labelings.

Nodes are integers ``row * length + col``. Robot programs never see node ids or
coordinates; they only get degree, class and (oriented mode) directions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

# direction codes, in the cyclic port order used by oriented grids
W, S, E, N = 0, 1, 2, 3
DIR_NAMES = "WSEN"
DELTA = {W: (0, -1), S: (1, 0), E: (0, 1), N: (-1, 0)}


def opposite(d: int) -> int:
    return (d + 2) % 4


class NodeClass(IntEnum):
    CORNER = 2
    BOUNDARY = 3
    INTERNAL = 4


class GridSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    kind: str = "square"
    side: int | None = None
    length: int | None = None
    width: int | None = None
    orientation: str = "unoriented"
    port_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("square", "rectangle"):
            raise GridSpecError(f"unknown grid kind {self.kind!r}")
        if self.orientation not in ("oriented", "unoriented"):
            raise GridSpecError(f"unknown orientation {self.orientation!r}")
        if self.kind == "square":
            if not isinstance(self.side, int) or self.side < 3:
                raise GridSpecError(f"square side must be an integer >= 3, got {self.side!r}")
        else:
            ln, wd = self.length, self.width
            if not isinstance(ln, int) or not isinstance(wd, int):
                raise GridSpecError("rectangle needs integer length and width")
            if wd < 3 or ln < wd:
                raise GridSpecError(f"rectangle needs length >= width >= 3, got {ln}x{wd}")
        if not 0 <= int(self.port_seed) < 2**64:
            raise GridSpecError("port_seed must fit in 64 bits")

    @property
    def cols(self) -> int:
        return self.side if self.kind == "square" else self.length

    @property
    def rows(self) -> int:
        return self.side if self.kind == "square" else self.width

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def span(self) -> int:
        """sqrt(n) for squares, the length for rectangles."""
        return self.cols

    @property
    def oriented(self) -> bool:
        return self.orientation == "oriented"

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "square":
            d["side"] = self.side
        else:
            d["length"] = self.length
            d["width"] = self.width
        d["orientation"] = self.orientation
        d["port_seed"] = int(self.port_seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        if not isinstance(d, dict):
            raise GridSpecError("grid spec must be a JSON object")
        extra = set(d) - {"kind", "side", "length", "width", "orientation", "port_seed"}
        if extra:
            raise GridSpecError(f"unknown grid spec keys: {sorted(extra)}")
        return cls(
            kind=d.get("kind", "square"),
            side=d.get("side"),
            length=d.get("length"),
            width=d.get("width"),
            orientation=d.get("orientation", "unoriented"),
            port_seed=int(d.get("port_seed", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "GridSpec":
        return cls.from_dict(json.loads(s))


def square(side: int, orientation: str = "unoriented", port_seed: int = 0) -> GridSpec:
    return GridSpec("square", side=side, orientation=orientation, port_seed=port_seed)


def rectangle(length: int, width: int, orientation: str = "unoriented", port_seed: int = 0) -> GridSpec:
    return GridSpec("rectangle", length=length, width=width, orientation=orientation, port_seed=port_seed)


def _port_permutation(port_seed: int, node: int, degree: int) -> list[int]:
    # Philox is counter based: each (seed, node) key gives an independent stream
    rng = np.random.Generator(np.random.Philox(key=[int(port_seed), node]))
    return [int(x) for x in rng.permutation(degree)]


class Grid:
    """Ground-truth topology. ``adj[v][p-1] = (neighbour, entry_port)``."""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.rows = spec.rows
        self.cols = spec.cols
        self.n = spec.n
        self.oriented = spec.oriented
        adj = []
        dirs = []
        for v in range(self.n):
            r, c = divmod(v, self.cols)
            present = []
            for d in (W, S, E, N):
                dr, dc = DELTA[d]
                if 0 <= r + dr < self.rows and 0 <= c + dc < self.cols:
                    present.append(d)
            if not self.oriented:
                perm = _port_permutation(spec.port_seed, v, len(present))
                present = [present[i] for i in perm]
            dirs.append(tuple(present))
            adj.append(None)
        # entry ports need the neighbour's table, so fill in a second pass
        for v in range(self.n):
            r, c = divmod(v, self.cols)
            row = []
            for d in dirs[v]:
                dr, dc = DELTA[d]
                u = (r + dr) * self.cols + (c + dc)
                row.append((u, dirs[u].index(opposite(d)) + 1))
            adj[v] = tuple(row)
        self.adj: tuple = tuple(adj)
        self._dirs: tuple = tuple(dirs)
        self.degrees = tuple(len(a) for a in adj)

    def degree(self, v: int) -> int:
        return self.degrees[v]

    def traverse(self, v: int, port: int) -> tuple[int, int]:
        a = self.adj[v]
        if not isinstance(port, int) or not 1 <= port <= len(a):
            raise ValueError(f"port {port!r} out of range at a degree-{len(a)} node")
        return a[port - 1]

    def node_profile(self, v: int):
        """(degree, NodeClass, directions or None). directions[p-1] is a code in WSEN."""
        d = self.degrees[v]
        return d, NodeClass(d), (self._dirs[v] if self.oriented else None)

    def oracle_position(self, v: int) -> tuple[int, int]:
        return divmod(v, self.cols)

    def node_at(self, row: int, col: int) -> int:
        return row * self.cols + col

    def oracle_direction(self, v: int, port: int) -> int:
        """Hidden geometric direction of a port (test oracle, any mode)."""
        return self._dirs[v][port - 1]

    def census(self) -> dict:
        out = {2: 0, 3: 0, 4: 0}
        for d in self.degrees:
            out[d] += 1
        return out

    def serialize(self) -> str:
        body = {
            "spec": self.spec.to_dict(),
            "ports": [[list(e) for e in a] for a in self.adj],
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":"))


def build_grid(spec: GridSpec) -> Grid:
    return Grid(spec)


def traverse(grid: Grid, node: int, port: int) -> tuple[int, int]:
    return grid.traverse(node, port)


def node_profile(grid: Grid, node: int):
    return grid.node_profile(node)


def oracle_position(grid: Grid, node: int) -> tuple[int, int]:
    return grid.oracle_position(node)


def corner_identity(directions) -> str:
    """Name an oriented corner from its two incident directions."""
    if directions is None or len(directions) != 2:
        raise ValueError("corner_identity needs the two directions of an oriented corner")
    ds = frozenset(directions)
    table = {
        frozenset((E, S)): "NW",
        frozenset((W, S)): "NE",
        frozenset((W, N)): "SE",
        frozenset((E, N)): "SW",
    }
    return table[ds]
