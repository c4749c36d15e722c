"""Robot-program building blocks shared by the unoriented protocols.

All state lives in ``robot.mem``; each helper reads the co-located snapshot in
``view.peers``. Group members run identical code on identical inputs, so they
always take identical decisions without exchanging messages.
"""

from __future__ import annotations

from .constants import R_HOP
from .engine import STAY, SETTLE, move, sleep_until

# line-walk sub-states
LS_START, LS_SCOUT, LS_WAIT, LS_SYNC = 1, 2, 3, 4
ST_RUN, ST_OK, ST_FAIL = 0, 1, 2
MV_DESC, MV_BACK, MV_JUMP, MV_HOME = 0, 1, 2, 3
# line modes
TRAVEL, MEASURE, SETTLE_MODE = 0, 1, 2

EDGE = "edge"
HOPPED = "hopped"
ENTERED = "entered"

E_KEYS = (None, "e1", "e2", "e3", "e4")
C_KEYS = (None, "c1", "c2", "c3")
PROBE_KEYS = ("p", "e1", "e2", "e3", "e4", "c1", "c2", "c3", "dep", "mv", "r1", "r2", "st", "lm", "dl")
LINE_KEYS = PROBE_KEYS + ("ls", "gk", "b", "lh", "lmode")
WALK_KEYS = ("bb", "bt", "bs", "bh", "bc")


def declare_fields(widths: dict, idw: int, clockw: int, hopw: int) -> None:
    """Register the bit widths of every kernel field."""
    port = 3
    widths.update({
        "ls": 3, "gk": idw, "b": port, "lh": 1, "lmode": 2, "p": port,
        "e1": port, "e2": port, "e3": port, "e4": port,
        "c1": port, "c2": port, "c3": port,
        "dep": 3, "mv": 2, "r1": port, "r2": port, "st": 2, "lm": idw, "dl": clockw,
        "bb": port, "bt": port, "bs": 2, "bh": hopw, "bc": 3,
        "ec": 3, "sc": 1, "cnt": hopw,
    })


def resolve_straight_port(ports, b: int, R) -> int:
    """Port opposite the backward port b, given the two return-entry ports R."""
    R = [r for r in R if r is not None]
    if len(set(R)) != 2:
        raise ValueError("probe failure: need exactly two return entries")
    ports = set(ports)
    if b in R:
        return R[0] if R[1] == b else R[1]
    rest = ports - set(R) - {b}
    if len(rest) != 1:
        raise ValueError("inconsistent port sets")
    return rest.pop()


def settled_peer(peers):
    for p in peers:
        if p.settled:
            return p.id
    return None


def settle_allowed(robot, view) -> bool:
    """At most one robot settles per node: the lowest flagged candidate, only on an empty node."""
    cands = []
    others = False
    for p in view.peers:
        if p.settled:
            return False
        if p.id != robot.id:
            others = True
        if p.mem.get("sc"):
            cands.append(p.id)
    if not others:
        return True
    return bool(cands) and min(cands) == robot.id


# -- boundary walk ----------------------------------------------------------

def bw_init(m, back: int = 0, tried: int = 0) -> None:
    m["bb"] = back
    m["bt"] = tried
    m["bs"] = 0
    m["bh"] = 0
    m["bc"] = 0


def bw_step(robot, view):
    """One round of boundary walking. Returns HOPPED right after a committed hop
    (without acting; call again to continue) or a move action."""
    m = robot.mem
    bs = m["bs"]
    if bs == 1:
        a = view.arrived_via
        if view.degree == 4:
            m["bs"] = 2
            return move(a)
        m["bb"] = a
        m["bt"] = 0
        m["bh"] = m["bh"] + 1
        if view.degree == 2:
            m["bc"] = m["bc"] + 1
        m["bs"] = 0
        return HOPPED
    if bs == 2:
        m["bs"] = 0
    bb, bt = m["bb"], m["bt"]
    for q in range(1, view.degree + 1):
        if q != bb and q != bt:
            m["bt"] = q
            m["bs"] = 1
            return move(q)
    raise RuntimeError("boundary walk has no port left")


def ec_start(m, back: int) -> None:
    m["ec"] = 1
    m["bb"] = back
    m["bt"] = 0


def ec_step(robot, view):
    """Enter the column at the current boundary node; ENTERED once at its first interior node."""
    m = robot.mem
    ec = m["ec"]
    if ec == 1:
        q = 1 if m["bb"] != 1 else 2
        m["bt"] = q
        m["ec"] = 2
        return move(q)
    if ec == 2:
        if view.degree == 4:
            return ENTERED
        m["ec"] = 3
        return move(view.arrived_via)
    if ec == 3:
        q = ({1, 2, 3} - {m["bb"], m["bt"]}).pop()
        m["ec"] = 4
        return move(q)
    return ENTERED


# -- straight lines -----------------------------------------------------------

class LineKernel:
    """Straight-line movement of a group (or lone robot) across internal nodes."""

    def __init__(self, faulty: bool, r_hop: int = R_HOP):
        self.faulty = faulty
        self.r_hop = r_hop

    def begin(self, robot, mode: int, gk: int, b=None, arrived=False) -> None:
        m = robot.mem
        m["ls"] = LS_START
        m["gk"] = gk
        m["b"] = b
        m["lh"] = 1 if arrived else 0
        m["lmode"] = mode
        if mode == SETTLE_MODE:
            m["sc"] = 1
        robot.note("line")

    def finish(self, robot) -> None:
        robot.mem.clear_fields(LINE_KEYS)

    def step(self, robot, view):
        ls = robot.mem["ls"]
        if ls == LS_SCOUT:
            return self._scout(robot, view)
        if ls == LS_START:
            m = robot.mem
            if m["lh"]:
                m["b"] = view.arrived_via
                m["lh"] = 0
                if view.degree == 4 and m["lmode"] == MEASURE and settled_peer(view.peers) is None:
                    m["cnt"] = (m.get("cnt") or 0) + 1
            if view.degree < 4:
                return EDGE
        return self._decide(robot, view)

    # group decisions happen at START, at the round after scouts report, and at timeout
    def _decide(self, robot, view):
        m = robot.mem
        t = view.round
        ph, gk, my_ls = m["ph"], m["gk"], m["ls"]
        merge_gks = set()
        members, syncs, waits = [], [], []
        arriving = False
        for p in view.peers:
            if p.settled:
                continue
            pm = p.mem
            if pm.get("ph") != ph:
                continue
            pls = pm.get("ls")
            if pm.get("gk") == gk:
                if pls in (LS_START, LS_WAIT, LS_SYNC):
                    members.append(p)
                    if pls == LS_SYNC:
                        syncs.append(p)
                    elif pls == LS_WAIT:
                        waits.append(p)
            elif my_ls == LS_START and pls == LS_START and m["lmode"] == TRAVEL:
                merge_gks.add(pm.get("gk"))
                members.append(p)
            if pls == LS_START and pm.get("lh"):
                arriving = True
        if merge_gks:
            if arriving:
                # fresh arrivals have not recorded their backward port yet
                return STAY
            new_gk = min(merge_gks | {gk})
            if new_gk != gk:
                src = next(p for p in members if p.mem.get("gk") == new_gk)
                m["gk"] = new_gk
                if src.mem.get("b") != m.get("b"):
                    m["b"] = src.mem["b"]
                    robot.note("line")
                robot.events.append(("merged", new_gk))
        if my_ls == LS_WAIT and not syncs:
            if t < m["dl"]:
                return sleep_until(m["dl"])
            robot.note("retry")
            return self._partition(robot, view, members)
        if syncs:
            ok = [p for p in syncs if p.mem["st"] == ST_OK]
            if ok and (waits or not self.faulty):
                sm = ok[0].mem
                s = resolve_straight_port(range(1, view.degree + 1), m["b"], (sm.get("r1"), sm.get("r2")))
                return self._hop(robot, s)
            robot.note("retry")
        return self._partition(robot, view, members)

    def _partition(self, robot, view, members):
        m = robot.mem
        mode = m["lmode"]
        peers = view.peers
        occupant = settled_peer(peers)
        settler = None
        if occupant is None and mode == SETTLE_MODE:
            gk = m["gk"]
            cands = [p.id for p in peers if not p.settled and p.mem.get("sc") and p.mem.get("gk") == gk]
            if len([p for p in peers if not p.settled]) == 1:
                cands = [robot.id]
            if cands:
                settler = min(cands)
                if settler == robot.id:
                    self.finish(robot)
                    m["sc"] = None
                    return SETTLE
        ids = sorted(p.id for p in members if p.id != settler)
        if robot.id not in ids:
            ids.append(robot.id)
            ids.sort()
        self._clear_probe(m)
        if len(ids) == 1:
            lm = settler if settler is not None else occupant
            if lm is None:
                # alone on an empty node
                if settle_allowed(robot, view):
                    self.finish(robot)
                    m["sc"] = None
                    return SETTLE
                m["sc"] = 1
                m["ls"] = LS_START
                return STAY
            return self._probe_start(robot, view, lm)
        nscouts = (len(ids) + 1) // 2 if self.faulty else 1
        if robot.id in ids[-nscouts:]:
            return self._probe_start(robot, view, None)
        m["ls"] = LS_WAIT
        m["dl"] = view.round + self.r_hop + 1
        return sleep_until(m["dl"])

    def _clear_probe(self, m):
        m.clear_fields(PROBE_KEYS)

    def _probe_start(self, robot, view, landmark):
        m = robot.mem
        m["ls"] = LS_SCOUT
        m["lm"] = landmark
        b = m.get("b")
        p = 1 if b != 1 else 2
        m["p"] = p
        m["dep"] = 1
        m["mv"] = MV_DESC
        m["st"] = ST_RUN
        return move(p)

    def _landmark_here(self, robot, view) -> bool:
        m = robot.mem
        lm = m.get("lm")
        if lm is not None:
            for p in view.peers:
                if p.id == lm and p.settled:
                    return True
            return False
        gk, ph = m["gk"], m["ph"]
        for p in view.peers:
            pm = p.mem
            if pm.get("ls") == LS_WAIT and pm.get("gk") == gk and pm.get("ph") == ph and not p.settled:
                return True
        return False

    def _scout(self, robot, view):
        m = robot.mem
        mv = m["mv"]
        d = m["dep"]
        if mv == MV_DESC:
            a = view.arrived_via
            m[E_KEYS[d]] = a
            if d == 4:
                if self._landmark_here(robot, view):
                    if m.get("r1") is None:
                        m["r1"] = a
                    else:
                        m["r2"] = a
                        return self._probe_done(robot, view, ST_OK)
                    m["dep"] = 1
                    m["mv"] = MV_JUMP
                    return move(m["p"])
                m["dep"] = 3
                m["mv"] = MV_BACK
                return move(a)
            m[C_KEYS[d]] = 0
        elif mv == MV_HOME:
            return self._probe_done(robot, view, ST_OK if m.get("r2") is not None else ST_FAIL)
        # choose the next child at depth d
        e = m[E_KEYS[d]]
        c = m[C_KEYS[d]]
        for q in range(c + 1, view.degree + 1):
            if q != e:
                m[C_KEYS[d]] = q
                m["dep"] = d + 1
                m["mv"] = MV_DESC
                return move(q)
        if d == 1:
            m["dep"] = 0
            m["mv"] = MV_HOME
        else:
            m["dep"] = d - 1
            m["mv"] = MV_BACK
        return move(e)

    def _probe_done(self, robot, view, status):
        m = robot.mem
        if m.get("lm") is not None:
            if status == ST_OK:
                s = resolve_straight_port(range(1, view.degree + 1), m["b"], (m.get("r1"), m.get("r2")))
                return self._hop(robot, s)
            robot.note("retry")
            self._clear_probe(m)
            m["ls"] = LS_START
            return STAY
        m["st"] = status
        m["ls"] = LS_SYNC
        return STAY

    def _hop(self, robot, s):
        m = robot.mem
        self._clear_probe(m)
        m["ls"] = LS_START
        m["lh"] = 1
        if m["lmode"] == SETTLE_MODE:
            m["sc"] = 1
        robot.note("hop")
        return move(s)

    def departing(self, robot) -> bool:
        m = robot.mem
        return m.get("ls") == LS_SCOUT and m.get("lm") is None and m.get("dep") == 1 and m.get("mv") == MV_DESC and m.get("e1") is None
