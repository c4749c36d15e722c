"""Synchronous Communicate-Compute-Move engine.

Round order: crashes, Communicate (every robot that computes sees a snapshot
of all live robots on its node, taken before anyone computes), Compute, then
all moves at once. Programs may ask to sleep until a round; a sleeping robot
does nothing, and is woken early whenever its node's membership or any
co-located robot's memory changes, so skipping it is observationally the
same as stepping it with a stay.
"""

from __future__ import annotations

import heapq
import json
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .digest import fnv1a64, FNV_OFFSET
from .grid import Grid, GridSpec, build_grid

INF = float("inf")

# actions are (kind, arg) pairs
STAY = (0, None)
SETTLE = (2, None)


def move(port: int):
    return (1, port)


def sleep_until(t):
    return (0, t)


Peer = namedtuple("Peer", "id settled mem")

_MISSING = object()


class SimulationError(RuntimeError):
    pass


class Mem(dict):
    """Robot memory. Writes that change a value flag the robot as dirty."""

    __slots__ = ("dirty",)

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.dirty = False

    def __setitem__(self, key, value):
        old = dict.get(self, key, _MISSING)
        if old is _MISSING or old != value:
            dict.__setitem__(self, key, value)
            self.dirty = True

    def clear_fields(self, keys):
        for key in keys:
            if dict.get(self, key) is not None:
                dict.__setitem__(self, key, None)
                self.dirty = True


class RobotState:
    __slots__ = ("id", "node", "mem", "settled", "crashed", "widths",
                 "peak_bits", "events", "wake", "arrived_via")

    def __init__(self, rid: int, node: int, widths: dict):
        self.id = rid
        self.node = node
        self.mem = Mem()
        self.settled = False
        self.crashed = False
        self.widths = widths
        self.peak_bits = 0
        self.events = []
        self.wake = 0
        self.arrived_via = None

    def note(self, tag: str):
        self.events.append(tag)


def measure_memory(state: RobotState) -> int:
    w = state.widths
    return sum(w[k] for k, v in state.mem.items() if v is not None)


class View:
    __slots__ = ("round", "degree", "arrived_via", "peers", "directions")

    def __init__(self, rnd, degree, arrived_via, peers, directions):
        self.round = rnd
        self.degree = degree
        self.arrived_via = arrived_via
        self.peers = peers
        self.directions = directions


@dataclass(frozen=True)
class GridInfo:
    """What a robot program is told about the grid before the run."""
    n: int
    length: int
    width: int
    oriented: bool

    @property
    def span(self) -> int:
        return self.length


class RobotProgram:
    protocol_id = "base"
    faulty = True

    def setup(self, info: GridInfo, k: int) -> None:
        self.info = info
        self.k = k
        self.widths = {}

    def init_robot(self, robot: RobotState) -> None:
        pass

    def step(self, robot: RobotState, view: View):
        return SETTLE

    def default_budget(self) -> int:
        return 10 * self.info.n

    def departing(self, robot: RobotState) -> bool:
        """True if robot just left on a scouting or seeker trip."""
        return False


class RoundTrace:
    """Ordered events (round, robot id, event name, arg)."""

    def __init__(self, events=None):
        self.events = events if events is not None else []

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @staticmethod
    def encode(ev) -> str:
        r, rid, name, arg = ev
        if arg is None:
            a = "null"
        elif isinstance(arg, str):
            a = json.dumps(arg)
        else:
            a = str(int(arg))
        return f'{{"r":{r},"id":{rid},"ev":"{name}","arg":{a}}}\n'

    def to_bytes(self) -> bytes:
        return "".join(map(self.encode, self.events)).encode()

    def digest(self) -> str:
        return f"{fnv1a64(self.to_bytes(), FNV_OFFSET):016x}"

    def write(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def read(cls, path) -> "RoundTrace":
        events = []
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    events.append((d["r"], d["id"], d["ev"], d["arg"]))
        return cls(events)


@dataclass
class SimulationResult:
    dispersed: bool
    terminated: bool
    budget_exhausted: bool
    rounds_used: int
    peak_memory_bits: dict
    max_peak_memory_bits: int
    crashes: int
    k: int
    n: int
    protocol: str
    digest: str
    phase_bounds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["peak_memory_bits"] = {str(k): v for k, v in sorted(self.peak_memory_bits.items())}
        return d


class WorldState:
    def __init__(self, grid: Grid, robots: dict):
        self.grid = grid
        self.round = 0
        self.robots = robots
        self.occupancy = {}
        for r in robots.values():
            self.occupancy.setdefault(r.node, set()).add(r.id)
        self.moved_last = frozenset()

    def live(self):
        return [r for r in self.robots.values() if not r.crashed]


def seeded_placement(n: int, k: int, seed: int) -> dict:
    rng = np.random.Generator(np.random.Philox(key=[int(seed), 0x706C6163]))
    nodes = rng.integers(0, n, size=k)
    return {i + 1: int(nodes[i]) for i in range(k)}


class Simulation:
    def __init__(self, grid: Grid, placement: dict, program: RobotProgram, adversary, round_budget=None):
        self.grid = grid
        k = len(placement)
        if k > grid.n:
            raise ValueError(f"k={k} exceeds n={grid.n}")
        if k < 1:
            raise ValueError("need at least one robot")
        if sorted(placement) != list(range(1, k + 1)):
            raise ValueError("robot ids must be 1..k")
        for rid, v in placement.items():
            if not isinstance(v, (int, np.integer)) or not 0 <= v < grid.n:
                raise ValueError(f"robot {rid} placed on invalid node {v!r}")
        spec = grid.spec
        self.info = GridInfo(grid.n, spec.cols, spec.rows, grid.oriented)
        self.program = program
        program.setup(self.info, k)
        robots = {}
        for rid in range(1, k + 1):
            r = RobotState(rid, int(placement[rid]), program.widths)
            program.init_robot(r)
            r.mem.dirty = False
            r.peak_bits = measure_memory(r)
            robots[rid] = r
        self.world = WorldState(grid, robots)
        self.adversary = adversary
        if adversary is not None:
            adversary.setup(self.world, program)
        self.budget = program.default_budget() if round_budget is None else int(round_budget)
        self.trace = RoundTrace([(0, rid, "placed", robots[rid].node) for rid in range(1, k + 1)])
        self.awake = set(robots)
        self.heap = []
        self.dirty = set()
        self.unsettled = k
        self.crash_count = 0
        self.next_round = 0

    # -- round machinery -------------------------------------------------
    def _crash(self, t, ids):
        world = self.world
        for rid in sorted(ids):
            r = world.robots[rid]
            if r.crashed:
                continue
            r.crashed = True
            world.occupancy[r.node].discard(rid)
            self.awake.discard(rid)
            if not r.settled:
                self.unsettled -= 1
            self.crash_count += 1
            self.trace.events.append((t, rid, "crashed", None))
            for oid in world.occupancy[r.node]:
                o = world.robots[oid]
                if not o.settled:
                    self.awake.add(oid)

    def _wake(self, t):
        robots = self.world.robots
        heap = self.heap
        while heap and heap[0][0] <= t:
            w, rid = heapq.heappop(heap)
            r = robots[rid]
            if r.wake == w and not r.crashed and not r.settled:
                self.awake.add(rid)
        occ = self.world.occupancy
        for v in self.dirty:
            for rid in occ.get(v, ()):
                r = robots[rid]
                if not r.settled:
                    self.awake.add(rid)
        self.dirty = set()

    def next_event_round(self, t):
        nxt = INF
        heap, robots = self.heap, self.world.robots
        while heap:
            w, rid = heap[0]
            r = robots[rid]
            if r.wake == w and not r.crashed and not r.settled and rid not in self.awake:
                nxt = w
                break
            heapq.heappop(heap)
        if self.adversary is not None:
            nxt = min(nxt, self.adversary.next_event(t))
        return nxt

    def execute_round(self, t):
        world = self.world
        world.round = t
        grid = self.grid
        robots = world.robots
        events = self.trace.events
        if self.adversary is not None:
            ids = self.adversary.plan_crashes(t, world)
            if ids:
                self._crash(t, ids)
        self._wake(t)
        active = sorted(self.awake)
        self.awake = set()
        occ = world.occupancy
        snaps = {}
        for rid in active:
            v = robots[rid].node
            if v not in snaps:
                snaps[v] = tuple(
                    Peer(o.id, o.settled, dict(o.mem))
                    for o in (robots[i] for i in sorted(occ[v]))
                )
        program = self.program
        moves = []
        dirty = self.dirty
        awake = self.awake
        degrees = grid.degrees
        oriented = grid.oriented
        for rid in active:
            r = robots[rid]
            v = r.node
            view = View(t, degrees[v], r.arrived_via, snaps[v],
                        grid._dirs[v] if oriented else None)
            r.arrived_via = None
            act = program.step(r, view)
            if r.events:
                for tag in r.events:
                    if isinstance(tag, tuple):
                        events.append((t, rid, tag[0], tag[1]))
                    else:
                        events.append((t, rid, "phase", tag))
                r.events = []
            if r.mem.dirty:
                r.mem.dirty = False
                dirty.add(v)
                bits = measure_memory(r)
                if bits > r.peak_bits:
                    r.peak_bits = bits
            try:
                kind, arg = act
            except (TypeError, ValueError):
                raise SimulationError(f"robot {rid} returned invalid action {act!r} in round {t}")
            if kind == 1:
                if not isinstance(arg, int) or not 1 <= arg <= degrees[v]:
                    raise SimulationError(f"robot {rid} chose invalid port {arg!r} at a degree-{degrees[v]} node in round {t}")
                moves.append((rid, arg))
            elif kind == 2:
                r.settled = True
                self.unsettled -= 1
                events.append((t, rid, "settled", None))
                dirty.add(v)
            elif kind == 0:
                if arg is None or arg <= t + 1:
                    awake.add(rid)
                else:
                    r.wake = arg
                    if arg != INF:
                        heapq.heappush(self.heap, (arg, rid))
            else:
                raise SimulationError(f"robot {rid} returned unknown action kind {kind!r} in round {t}")
        moved = []
        for rid, p in moves:
            r = robots[rid]
            u = r.node
            w, entry = grid.adj[u][p - 1]
            occ[u].discard(rid)
            occ.setdefault(w, set()).add(rid)
            r.node = w
            r.arrived_via = entry
            events.append((t, rid, "moved", p))
            dirty.add(u)
            dirty.add(w)
            awake.add(rid)
            moved.append(rid)
        world.moved_last = frozenset(moved)
        self.next_round = t + 1

    def run(self):
        t = 0
        exhausted = False
        while True:
            if t > self.budget:
                exhausted = True
                t = self.budget
                break
            self.execute_round(t)
            if self.unsettled == 0:
                break
            if self.awake or self.dirty:
                t += 1
                continue
            nxt = self.next_event_round(t + 1)
            if nxt == INF:
                exhausted = True
                t = self.budget
                break
            t = max(t + 1, int(nxt))
        return self._result(t, exhausted)

    def _result(self, t, exhausted):
        from .checks import check_dispersion
        world = self.world
        peaks = {rid: r.peak_bits for rid, r in world.robots.items()}
        bounds = {}
        for r, rid, ev, arg in self.trace.events:
            if ev == "phase":
                tag = arg.split(":", 1)[0]
                b = bounds.get(tag)
                if b is None:
                    bounds[tag] = [r, r]
                else:
                    b[1] = r
        res = SimulationResult(
            dispersed=check_dispersion(world, "faulty" if self.program.faulty else "nonfaulty"),
            terminated=self.unsettled == 0,
            budget_exhausted=exhausted,
            rounds_used=t,
            peak_memory_bits=peaks,
            max_peak_memory_bits=max(peaks.values()),
            crashes=self.crash_count,
            k=len(world.robots),
            n=self.grid.n,
            protocol=self.program.protocol_id,
            digest=self.trace.digest(),
            phase_bounds=bounds,
        )
        return res, self.trace


def run_simulation(spec: GridSpec, placement, protocol: RobotProgram, adversary=None,
                   round_budget=None, k=None, grid: Grid | None = None):
    """Run one simulation. ``placement`` is an id->node map or an integer seed (needs k)."""
    grid = grid if grid is not None else build_grid(spec)
    if isinstance(placement, (int, np.integer)) and not isinstance(placement, bool):
        if k is None:
            raise ValueError("seeded placement needs k")
        if k > grid.n:
            raise ValueError(f"k={k} exceeds n={grid.n}")
        placement = seeded_placement(grid.n, k, int(placement))
    elif isinstance(placement, (list, tuple)):
        placement = {i + 1: v for i, v in enumerate(placement)}
    sim = Simulation(grid, dict(placement), protocol, adversary, round_budget)
    return sim.run()


def execute_round(sim: Simulation, t: int | None = None) -> WorldState:
    """Advance ``sim`` by exactly one round and return its world."""
    sim.execute_round(sim.next_round if t is None else t)
    return sim.world
