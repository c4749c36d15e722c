"""Dispersion on unoriented grids without crashes.

One traveller per corner group tours the boundary once, so every group learns
the minimum-label corner and the number of corners already taken by lone
robots. In the last stage the gathered group either settles along the
boundary, or first sends one pair per column to count free nodes and then
dispatches exactly that many robots into each column.
"""

from __future__ import annotations

from .constants import K_ALG2
from .engine import sleep_until, INF
from .kernels import MEASURE, SETTLE_MODE, HOPPED, WALK_KEYS, bw_init, bw_step
from .unoriented import (
    UnorientedDispersion, S3_HOME, S3_PAIR, S3_COL, CJ_HOMEWARD, COLUMN_KEYS, popcount,
)


class Alg2(UnorientedDispersion):
    protocol_id = "alg2"
    faulty = False

    def default_budget(self):
        return 2 * K_ALG2 * self.span

    def _members(self, r, view):
        lab = r.mem["lab"]
        return [p for p in view.peers
                if not p.settled and p.mem.get("ph") == S3_HOME and p.mem.get("lab") == lab]

    def _free_boundary(self, m):
        return self.P - popcount(m.get("lone") or 0)

    def _s3_home(self, r, view):
        m = r.mem
        if view.round < self.T3:
            return sleep_until(self.T3)
        if m.get("sb") is None:
            return self._first_split(r, view)
        members = self._members(r, view)
        back = [p for p in members if p.mem.get("pd")]
        if len(back) < 2 * self.cols:
            return sleep_until(INF)
        return self._dispatch(r, view, members)

    def _first_split(self, r, view):
        m = r.mem
        ids = sorted(p.id for p in self._members(r, view))
        c = len(ids)
        free = self._free_boundary(m)
        if c <= free:
            r.note(f"s3.boundary:{c}")
            return self._bs_begin(r, back=0, limit=None)
        # one pair per column, highest ids; a slice of the lowest ids starts on the boundary
        # right away, and at least one robot stays to mark home
        sent = min(free, c - 2 * self.cols - 1)
        m["sb"] = sent
        r.note(f"s3.pairs:{c}:{sent}")
        rank = ids.index(r.id)
        if rank < sent:
            return self._bs_begin(r, back=0, limit=None)
        top = c - 1 - rank
        if top < 2 * self.cols:
            j = top // 2 + 1
            pair = ids[c - 2 * j: c - 2 * j + 2]
            m["cnt"] = 0
            return self._col_begin(r, view, S3_PAIR, j, min(pair), MEASURE)
        return sleep_until(INF)

    def _homeward(self, r, view):
        m = r.mem
        res = bw_step(r, view)
        if res is not HOPPED:
            return res
        if view.degree == 2 and self._members(r, view):
            m.clear_fields(WALK_KEYS + ("pst", "hp", "gk", "lmode"))
            m["ph"] = S3_HOME
            m["pd"] = 1
            return sleep_until(INF)
        return bw_step(r, view)

    def _far_end(self, r, view):
        m = r.mem
        if m["ph"] != S3_PAIR:
            return super()._far_end(r, view)
        self.line.finish(r)
        m["pst"] = CJ_HOMEWARD
        bw_init(m, back=view.arrived_via)
        return bw_step(r, view)

    def _dispatch(self, r, view, members):
        m = r.mem
        ids = sorted(p.id for p in members)
        demand = [0] * (self.cols + 1)
        for p in members:
            if p.mem.get("pd"):
                demand[p.mem["jc"]] = p.mem["cnt"]
        rest = max(0, self._free_boundary(m) - m["sb"])
        rank = ids.index(r.id)
        m.clear_fields(COLUMN_KEYS + ("pd", "cnt", "sb"))
        if rank < rest:
            r.note("s3.dispatch")
            return self._bs_begin(r, back=0, limit=None)
        lo = rest
        for j in range(1, self.cols + 1):
            hi = lo + demand[j]
            if rank < hi:
                r.note("s3.dispatch")
                return self._col_begin(r, view, S3_COL, j, ids[lo], SETTLE_MODE)
            lo = hi
        r.note("s3.spill")
        return self._bs_begin(r, back=0, limit=None)
