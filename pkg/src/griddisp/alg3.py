"""Crash-tolerant dispersion on unoriented grids.

Straight moves use halving scouts, corner agreement needs a returned seeker
and a stay-at-home robot to report the same minimum, and the last stage runs in
fixed iteration windows: the gathered robots either sweep the boundary or
split evenly over the columns not yet reported full. Robots that find their
column full climb back out and tell the corner.
"""

from __future__ import annotations

from .constants import HOP_COST, K_ALG3
from .engine import move, sleep_until
from .kernels import SETTLE_MODE, WALK_KEYS
from .unoriented import UnorientedDispersion, S3_HOME, S3_COL, COLUMN_KEYS, CJ_ASCEND


class Alg3(UnorientedDispersion):
    protocol_id = "alg3"
    faulty = True

    def _schedule(self):
        hop = HOP_COST + 1
        self.W3 = 6 * self.a + 8 + hop * (2 * self.b - 3) + 2 * hop
        self.iterations = 2 * self.L
        self.T3_end = self.T3 + self.iterations * self.W3

    def default_budget(self):
        return max(self.T3_end, K_ALG3 * self.span * self.L)

    def _next_window(self, t):
        if t < self.T3:
            return self.T3
        return self.T3 + ((t - self.T3) // self.W3 + 1) * self.W3

    def _s3_home(self, r, view):
        t = view.round
        if t < self.T3 or (t - self.T3) % self.W3:
            return sleep_until(self._next_window(t))
        m = r.mem
        i = (t - self.T3) // self.W3
        members = [p for p in view.peers if not p.settled and p.mem.get("ph") == S3_HOME]
        ids = sorted(p.id for p in members)
        tab = 0
        full = 0
        for p in members:
            tab |= p.mem.get("tab") or 0
            full |= p.mem.get("bf") or 0
        c = len(ids)
        if not full and c <= self.P:
            m["tab"], m["bf"] = tab, full
            r.note(f"s3.iter:{i}:{c}:0:{c}:b")
            return self._bs_begin(r, back=0, limit=4)
        needy = [j for j in range(1, self.cols + 1) if not tab >> j & 1]
        if not needy:
            tab = 0
            needy = list(range(1, self.cols + 1))
        m["tab"], m["bf"] = tab, full
        g = c // len(needy)
        sent = min(c, g * len(needy)) if g else c
        r.note(f"s3.iter:{i}:{c}:{len(needy)}:{sent}:c")
        rank = ids.index(r.id)
        size = max(g, 1)
        q = rank // size
        if rank >= sent or q >= len(needy):
            return sleep_until(self._next_window(t))
        return self._col_begin(r, view, S3_COL, needy[q], ids[q * size], SETTLE_MODE)

    def _far_end(self, r, view):
        # column full all the way down: climb back to the boundary
        m = r.mem
        gk = m["gk"]
        self.line.finish(r)
        self.line.begin(r, SETTLE_MODE, gk, arrived=True)
        m["pst"] = CJ_ASCEND
        return move(view.arrived_via)

    def _column_return(self, r, view):
        m = r.mem
        j = m["jc"]
        m["tab"] = (m.get("tab") or 0) | (1 << j)
        m.clear_fields(WALK_KEYS + COLUMN_KEYS + ("gk", "lmode", "sc"))
        m["ph"] = S3_HOME
        r.note(f"s3.full:{j}")
        return sleep_until(self._next_window(view.round))

    def _bnd_done(self, r, view):
        m = r.mem
        m["bf"] = 1
        m["ph"] = S3_HOME
        return sleep_until(self._next_window(view.round))

