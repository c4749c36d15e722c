"""Ground-truth checkers over final worlds and traces."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

from . import constants as K
from .grid import Grid


@dataclass
class CheckReport:
    dispersed: bool = True
    lemma_violations: list = field(default_factory=list)
    collinearity_violations: list = field(default_factory=list)
    memory_violations: list = field(default_factory=list)
    phase_rounds: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return (self.dispersed and not self.lemma_violations
                and not self.collinearity_violations and not self.memory_violations)

    def violate(self, lemma: str, bound, observed) -> None:
        self.lemma_violations.append({"lemma": lemma, "bound": bound, "observed": observed})

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def check_dispersion(world, mode: str = "faulty") -> bool:
    """Every live robot settled (hence halted) and no node holds two live robots."""
    if mode not in ("faulty", "nonfaulty"):
        raise ValueError(f"unknown dispersion mode {mode!r}")
    seen = set()
    for r in world.robots.values():
        if r.crashed:
            if mode == "nonfaulty":
                return False
            continue
        if not r.settled or r.node in seen:
            return False
        seen.add(r.node)
    return True


def replay_positions(trace, grid: Grid):
    """Yield (event, node_before, node_after) for every event, replaying moves."""
    pos = {}
    for ev in trace:
        r, rid, name, arg = ev
        before = pos.get(rid)
        if name == "placed":
            pos[rid] = arg
        elif name == "moved":
            pos[rid] = grid.adj[before][arg - 1][0]
        yield ev, before, pos.get(rid)


def final_positions(trace, grid: Grid) -> dict:
    pos = {}
    for (_, rid, name, _), _, after in replay_positions(trace, grid):
        pos[rid] = after
    return pos


def check_collinearity(trace, grid: Grid) -> list:
    """Committed straight hops of each journey must stay on one grid line."""
    seg_start = {}
    seg_pts = defaultdict(list)
    pending = set()
    out = []

    def close(rid):
        pts = seg_pts.pop(rid, [])
        start = seg_start.pop(rid, None)
        if start is None or not pts:
            return
        coords = [grid.oracle_position(start)] + [grid.oracle_position(v) for v in pts]
        rows = {c[0] for c in coords}
        cols = {c[1] for c in coords}
        if len(rows) > 1 and len(cols) > 1:
            out.append({"robot": rid, "start": coords[0], "points": coords[1:]})

    for (r, rid, name, arg), before, after in replay_positions(trace, grid):
        if name == "phase":
            if arg == "line":
                close(rid)
                seg_start[rid] = before
            elif arg == "hop":
                pending.add(rid)
        elif name == "moved" and rid in pending:
            pending.discard(rid)
            if rid in seg_start:
                seg_pts[rid].append(after)
        elif name in ("settled", "crashed"):
            close(rid)
    for rid in list(seg_start):
        close(rid)
    return out


def phase_events(trace):
    """Map tag -> list of (round, robot, payload) for phase events."""
    out = defaultdict(list)
    for r, rid, name, arg in trace:
        if name == "phase":
            tag, _, payload = arg.partition(":")
            out[tag].append((r, rid, payload))
    return out


def _first_rounds(pe, tag):
    out = {}
    for r, rid, _ in pe.get(tag, ()):
        out.setdefault(rid, r)
    return out


def _crash_rounds(trace):
    return [r for r, _, name, _ in trace if name == "crashed"]


def check_gathering(trace, grid: Grid) -> list:
    """Robots finishing the gathering stage must all stand on one node."""
    finals = {}
    for (r, rid, name, arg), _, after in replay_positions(trace, grid):
        if name == "phase" and arg == "s2.final":
            finals.setdefault(r, set()).add(after)
    return [{"round": r, "nodes": sorted(nodes)} for r, nodes in sorted(finals.items()) if len(nodes) > 1]


def iteration_stats(trace) -> list:
    """Per column-mode iteration: needy columns, robots sent, columns reported
    full and robots settled or crashed before the next iteration starts."""
    pe = phase_events(trace)
    starts = {}
    for r, _, payload in pe.get("s3.iter", ()):
        i, c, needy, sent, kind = payload.split(":")
        starts.setdefault(int(i), (r, int(c), int(needy), int(sent), kind))
    order = sorted(starts)
    out = []
    for pos, i in enumerate(order):
        r0, c, needy, sent, kind = starts[i]
        r1 = starts[order[pos + 1]][0] if pos + 1 < len(order) else float("inf")
        full = {p for r, _, p in pe.get("s3.full", ()) if r0 <= r < r1}
        done = sum(1 for r, _, name, _ in trace if name in ("settled", "crashed") and r0 <= r < r1)
        out.append({"iter": i, "round": r0, "robots": c, "needy": needy, "sent": sent,
                    "kind": kind, "full": len(full), "resolved": done})
    return out


def check_run(program, result, trace, grid: Grid) -> CheckReport:
    """Every checked property of one run of alg1/alg2/alg3."""
    rep = CheckReport()
    pid = program.protocol_id
    spec = grid.spec
    span = spec.span
    logn = K.log_n(spec.n)
    rep.dispersed = bool(result.dispersed)
    rep.collinearity_violations = check_collinearity(trace, grid)
    pe = phase_events(trace)
    rounds = result.rounds_used
    rep.stats["rounds"] = rounds
    rep.stats["retries"] = len(pe.get("retry", ()))
    rep.stats["peak_bits"] = result.max_peak_memory_bits

    if pid == "alg1":
        even = spec.cols % 2 == 0 and spec.rows % 2 == 0
        kc = K.K_ALG1_EVEN if even else K.K_ALG1_ODD
        if rounds > kc * span:
            rep.violate("alg1.rounds", kc * span, rounds)
        mem_cap = K.MEM_LOG_FACTOR * logn
    elif pid == "alg2":
        bnd = _first_rounds(pe, "s1.bnd")
        corner = _first_rounds(pe, "s1.corner")
        walk = max((corner[i] - r for i, r in bnd.items() if i in corner), default=0)
        rep.stats["boundary_walk"] = walk
        if walk > 3 * span:
            rep.violate("alg2.boundary_walk", 3 * span, walk)
        begin = [r for r, _, _ in pe.get("s2.begin", ())]
        done = [r for r, _, _ in pe.get("s2.done", ())]
        if begin and done:
            s2 = max(done) - min(begin)
            rep.stats["stage2"] = s2
            if s2 > 18 * span:
                rep.violate("alg2.stage2", 18 * span, s2)
        rep.phase_rounds = {"T1": program.T1, "T2": program.T2, "T3": program.T3}
        if rounds > K.K_ALG2 * span:
            rep.violate("alg2.rounds", K.K_ALG2 * span, rounds)
        mem_cap = K.MEM_LOG_FACTOR * logn
    elif pid == "alg3":
        trips = {}
        for _, rid, payload in pe.get("s2.trip", ()):
            trips[rid] = max(trips.get(rid, 0), int(payload) + 1)
        most = max(trips.values(), default=0)
        cap = K.clog2(result.k) + 1
        rep.stats["trips"] = most
        if most > cap:
            rep.violate("alg3.trips", cap, most)
        its = iteration_stats(trace)
        rep.stats["iterations"] = len(its)
        if len(its) > 2 * logn:
            rep.violate("alg3.iterations", 2 * logn, len(its))
        for it in its:
            if it["kind"] != "c":
                continue
            if 2 * it["full"] < it["needy"] and 2 * it["resolved"] < it["sent"]:
                rep.violate("alg3.halving", it, None)
        begin = [r for r, _, _ in pe.get("s2.begin", ())]
        done = [r for r, _, _ in pe.get("s2.done", ())]
        if begin and done:
            s2 = max(done) - min(begin)
            rep.stats["stage2"] = s2
            cap2 = 12 * span * logn + 6 * span
            if s2 > cap2:
                rep.violate("alg3.stage2", cap2, s2)
        bad = check_gathering(trace, grid)
        if bad:
            rep.violate("alg3.gathering", 1, bad)
        rep.phase_rounds = {"T1": program.T1, "T2": program.T2, "T3": program.T3}
        if rounds > K.K_ALG3 * span * logn:
            rep.violate("alg3.rounds", K.K_ALG3 * span * logn, rounds)
        mem_cap = K.ALG3_MEM_FACTOR * span * logn
    else:
        raise ValueError(f"unknown protocol {pid!r}")
    rep.stats["mem_cap"] = mem_cap
    if result.max_peak_memory_bits > mem_cap:
        rep.memory_violations.append({"bound": mem_cap, "observed": result.max_peak_memory_bits})
    return rep


def trace_dispersed(trace, grid: Grid) -> bool:
    """Dispersion judged from the trace alone: live robots settled on distinct nodes."""
    pos = final_positions(trace, grid)
    settled, crashed = set(), set()
    for _, rid, name, _ in trace:
        if name == "settled":
            settled.add(rid)
        elif name == "crashed":
            crashed.add(rid)
    live = [rid for rid in pos if rid not in crashed]
    nodes = [pos[rid] for rid in live]
    return all(rid in settled for rid in live) and len(set(nodes)) == len(nodes)


@dataclass
class TraceSummary:
    dispersed: bool
    rounds_used: int
    max_peak_memory_bits: int
    k: int


def check_bounds(trace, protocol: str, grid: Grid, rounds_used=None, peak_bits=0) -> CheckReport:
    """Bound checks from a stored trace. Memory cannot be recovered from a trace,
    so ``peak_bits`` comes from the stored result (0 skips the ceiling)."""
    from .config import make_program
    from .engine import GridInfo
    k = sum(1 for ev in trace if ev[2] == "placed")
    program = make_program(protocol)
    spec = grid.spec
    program.setup(GridInfo(grid.n, spec.cols, spec.rows, grid.oriented), k)
    if rounds_used is None:
        rounds_used = max((ev[0] for ev in trace), default=0)
    summary = TraceSummary(trace_dispersed(trace, grid), int(rounds_used), int(peak_bits), k)
    return check_run(program, summary, trace, grid)
