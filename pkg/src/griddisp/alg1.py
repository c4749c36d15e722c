"""Fault-tolerant dispersion on oriented grids.

Everyone gathers at the corners by round 2L (L = grid length). If both
dimensions are even, each corner keeps up to a quadrant's worth of robots, the
surplus walks clockwise to corners with room, and at 6L every corner fills
its own quadrant column by column. Otherwise all corner robots meet at the
central node, walk to the north-west corner and fill the whole grid from there
by 6L.
"""

from __future__ import annotations

from .constants import bits_for, clog2, K_ALG1_EVEN, K_ALG1_ODD
from .engine import RobotProgram, SETTLE, move, sleep_until, INF
from .grid import W, S, E, N, corner_identity
from .kernels import settle_allowed

G_LINE, G_BND, G_CORNER = 1, 2, 3
KEPT, WALK = 4, 5
TO_CENTER, AT_CENTER, TO_NW, AT_NW = 6, 7, 8, 9
ROW, COLUMN = 10, 11

CLOCKWISE = {"NW": E, "NE": S, "SE": W, "SW": N}
# (row direction, column direction) of each quadrant, seen from its corner
QUADRANT = {"NW": (E, S), "NE": (W, S), "SE": (W, N), "SW": (E, N)}
CORNER_POS = {"NW": (0, 0), "NE": (0, 1), "SE": (1, 1), "SW": (1, 0)}


def port_of(view, d):
    return view.directions.index(d) + 1


class Alg1(RobotProgram):
    protocol_id = "alg1"
    faulty = True

    def setup(self, info, k):
        super().setup(info, k)
        if not info.oriented:
            raise ValueError("alg1 needs an oriented grid")
        self.L = info.length
        self.w = info.width
        self.even = info.length % 2 == 0 and info.width % 2 == 0
        self.t_gather = 2 * self.L
        if self.even:
            self.t_dispatch = 6 * self.L
            self.cap = (self.L // 2) * (self.w // 2)
            self.ncols = self.L // 2
            self.end = K_ALG1_EVEN * self.L
        else:
            self.t_center = 3 * self.L
            self.t_dispatch = 4 * self.L
            self.ncols = self.L
            self.end = K_ALG1_ODD * self.L
        self.center = ((self.w - 1) // 2, (self.L - 1) // 2)
        idw = max(1, clog2(k))
        self.widths.update({
            "id": idw, "clk": bits_for(self.end), "ph": 4, "hd": 4, "sc": 1,
            "cnt": bits_for(max(info.n, self.L)), "nx": 2, "cnt2": bits_for(self.L),
        })

    def default_budget(self):
        return self.end

    def init_robot(self, r):
        r.mem["id"] = r.id
        r.mem["clk"] = 0
        r.mem["ph"] = G_LINE

    def step(self, r, view):
        if self.k == 1:
            # a single robot is dispersed wherever it stands
            return SETTLE
        ph = r.mem["ph"]
        if ph == G_LINE:
            return self._to_boundary(r, view)
        if ph == G_BND:
            return self._to_corner(r, view)
        if ph == G_CORNER:
            return self._at_corner(r, view)
        if ph == KEPT:
            return self._dispatch(r, view)
        if ph == WALK:
            return self._walk(r, view)
        if ph in (TO_CENTER, TO_NW):
            return self._legs(r, view)
        if ph == AT_CENTER:
            return self._leave_center(r, view)
        if ph == AT_NW:
            return self._dispatch(r, view)
        if ph == ROW:
            return self._row(r, view)
        if ph == COLUMN:
            return self._column(r, view)
        raise RuntimeError(f"unknown phase {ph}")

    # -- gathering ----------------------------------------------------------
    def _to_boundary(self, r, view):
        m = r.mem
        if view.degree < 4:
            return self._start_boundary(r, view)
        if m.get("hd") is None:
            m["hd"] = view.directions[0]
            r.note("line")
        r.note("hop")
        return move(port_of(view, m["hd"]))

    def _start_boundary(self, r, view):
        m = r.mem
        if view.degree == 2:
            return self._reach_corner(r, view)
        dirs = view.directions
        missing = ({W, S, E, N} - set(dirs)).pop()
        along = [p + 1 for p, d in enumerate(dirs) if d != (missing + 2) % 4 and d != missing]
        m["hd"] = dirs[min(along) - 1]
        m["ph"] = G_BND
        r.note("line")
        return self._to_corner(r, view)

    def _to_corner(self, r, view):
        if view.degree == 2:
            return self._reach_corner(r, view)
        r.note("hop")
        return move(port_of(view, r.mem["hd"]))

    def _reach_corner(self, r, view):
        m = r.mem
        m["ph"] = G_CORNER
        m["hd"] = None
        r.note("corner")
        return self._at_corner(r, view)

    def _at_corner(self, r, view):
        t = view.round
        if t < self.t_gather:
            return sleep_until(self.t_gather)
        m = r.mem
        name = corner_identity(view.directions)
        group = sorted(p.id for p in view.peers if not p.settled and p.mem.get("ph") == G_CORNER)
        if self.even:
            if group.index(r.id) < self.cap:
                return self._keep(r)
            m["ph"] = WALK
            m["hd"] = CLOCKWISE[name]
            r.note("line")
            r.note("hop")
            return move(port_of(view, m["hd"]))
        # odd branch: go to the centre, first along the port-1 side
        d0, d1 = view.directions
        m["ph"] = TO_CENTER
        return self._plan_legs(r, view, d0, self._hops_towards(name, d0),
                               d1, self._hops_towards(name, d1))

    def _hops_towards(self, name, d):
        cr, cc = CORNER_POS[name]
        if d in (N, S):
            return abs(self.center[0] - (0 if cr == 0 else self.w - 1))
        return abs(self.center[1] - (0 if cc == 0 else self.L - 1))

    def _plan_legs(self, r, view, d0, h0, d1, h1):
        m = r.mem
        m["hd"] = d0
        m["cnt"] = h0
        m["nx"] = d1
        m["cnt2"] = h1
        r.note("line")
        return self._legs(r, view)

    def _legs(self, r, view):
        m = r.mem
        if m["cnt"] == 0 and m["nx"] is not None:
            m["hd"] = m["nx"]
            m["cnt"] = m["cnt2"]
            m["nx"] = None
            m["cnt2"] = None
            r.note("line")
        if m["cnt"] > 0:
            m["cnt"] = m["cnt"] - 1
            r.note("hop")
            return move(port_of(view, m["hd"]))
        m["hd"] = None
        if m["ph"] == TO_CENTER:
            m["ph"] = AT_CENTER
            return self._leave_center(r, view)
        m["ph"] = AT_NW
        m["sc"] = 1
        return sleep_until(self.t_dispatch)

    def _leave_center(self, r, view):
        t = view.round
        if t < self.t_center:
            return sleep_until(self.t_center)
        r.note("center")
        r.mem["ph"] = TO_NW
        return self._plan_legs(r, view, N, self.center[0], W, self.center[1])

    # -- even branch balancing ---------------------------------------------
    def _keep(self, r):
        m = r.mem
        m["ph"] = KEPT
        m["hd"] = None
        m["sc"] = 1
        return sleep_until(self.t_dispatch)

    def _walk(self, r, view):
        m = r.mem
        if view.degree != 2:
            r.note("hop")
            return move(port_of(view, m["hd"]))
        kept = sum(1 for p in view.peers if not p.settled and p.mem.get("ph") == KEPT)
        spare = self.cap - kept
        walkers = sorted(p.id for p in view.peers if not p.settled and p.mem.get("ph") == WALK)
        if walkers.index(r.id) < spare:
            return self._keep(r)
        m["hd"] = CLOCKWISE[corner_identity(view.directions)]
        r.note("line")
        r.note("hop")
        return move(port_of(view, m["hd"]))

    # -- dispatch -------------------------------------------------------------
    def _dispatch(self, r, view):
        t = view.round
        if t < self.t_dispatch:
            return sleep_until(self.t_dispatch)
        m = r.mem
        ph = m["ph"]
        group = sorted(p.id for p in view.peers if not p.settled and p.mem.get("ph") == ph)
        name = corner_identity(view.directions) if self.even else "NW"
        row_d, col_d = QUADRANT[name]
        quota = -(-len(group) // self.ncols)
        col = group.index(r.id) // quota
        m["hd"] = (row_d << 2) | col_d
        if col == 0:
            m["ph"] = COLUMN
            r.note("line")
            return self._column(r, view)
        m["ph"] = ROW
        m["cnt"] = col
        r.note("line")
        return self._row_step(r, view)

    def _row(self, r, view):
        m = r.mem
        if m["cnt"] == 0:
            m["ph"] = COLUMN
            r.note("line")
            return self._column(r, view)
        return self._row_step(r, view)

    def _row_step(self, r, view):
        m = r.mem
        m["cnt"] = m["cnt"] - 1
        m["sc"] = 1 if m["cnt"] == 0 else 0
        r.note("hop")
        return move(port_of(view, m["hd"] >> 2))

    def _column(self, r, view):
        m = r.mem
        if settle_allowed(r, view):
            m["sc"] = None
            return SETTLE
        col_d = m["hd"] & 3
        m["sc"] = 1
        if col_d not in view.directions:
            return sleep_until(INF)
        r.note("hop")
        return move(port_of(view, col_d))
