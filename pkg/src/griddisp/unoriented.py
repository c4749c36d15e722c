"""Three-stage dispersion on unoriented grids (shared by alg2 and alg3).

Stage 1 moves every robot that is not a lone interior robot to a corner.
Stage 2 makes the corner groups agree on the corner whose smallest robot id
is globally minimal and gather there. Stage 3 spreads the gathered robots
over the boundary and the columns hanging off one side of that corner.

All stage boundaries are fixed rounds computed from n (and the grid length),
so every robot follows the same calendar without exchanging messages.
"""

from __future__ import annotations

from .constants import HOP_COST, bits_for, clog2
from .engine import RobotProgram, STAY, SETTLE, move, sleep_until
from .kernels import (
    LineKernel, TRAVEL, SETTLE_MODE, EDGE, HOPPED, ENTERED,
    WALK_KEYS, bw_init, bw_step, ec_start, ec_step, declare_fields, settle_allowed,
)

INIT, LINE1, BWALK1, CORNER = 0, 1, 2, 3
S2_HOME, S2_SEEK, S2_RELOC, S2_READY = 4, 5, 6, 7
S3_MEAS, S3_HOME, S3_PAIR, S3_COL, S3_BND = 8, 9, 10, 11, 12

STAGE2_KEYS = ("best", "boff", "rt", "cm", "pz", "trip")
# column journey sub-states
CJ_CARAVAN, CJ_ENTER, CJ_LINE, CJ_HOMEWARD, CJ_ASCEND, CJ_EXIT = 0, 1, 2, 3, 4, 5
COLUMN_KEYS = ("pst", "jc", "hp", "ec")


def popcount(x: int) -> int:
    return bin(x).count("1")


class UnorientedDispersion(RobotProgram):
    protocol_id = "unoriented"
    faulty = False

    def setup(self, info, k):
        super().setup(info, k)
        self.a = max(info.length, info.width)
        self.b = min(info.length, info.width)
        self.span = self.a
        self.square = info.length == info.width
        self.P = 2 * (info.length - 1) + 2 * (info.width - 1)
        self.cols = self.a - 2
        self.L = max(1, clog2(info.n))
        self.line = LineKernel(self.faulty)
        self.trips = self.L if self.faulty else 1
        hop = HOP_COST + 1
        extra = self.L if self.faulty else 0
        self.T1 = 1 + hop * (max(0, self.span - 3) + extra) + 3 * (self.span - 1) + 2
        self.W2 = 3 * self.P + 8
        self.W_rel = 3 * (info.length + info.width - 2) + 4
        self.T2 = self.T1 + self.trips * self.W2 + self.W_rel
        # squares still wait one round so everyone sees the new phase
        self.W_meas = 1 if self.square else 6 * (self.a - 1) + 4
        self.T3 = self.T2 + self.W_meas
        self._schedule()
        idw = max(1, clog2(k))
        clockw = bits_for(self.default_budget())
        hopw = bits_for(2 * self.P)
        declare_fields(self.widths, idw, clockw, hopw)
        self.widths.update({
            "id": idw, "clk": clockw, "ph": 4,
            "lab": idw, "best": idw, "boff": 2, "rt": 1, "cm": 1, "pz": 1,
            "trip": bits_for(self.trips), "lone": 4,
            "dp": 2, "pst": 3, "jc": bits_for(self.a), "hp": 2, "pd": 1,
            "bz": 1, "bl": 3, "sb": hopw, "bf": 1,
            "tab": max(1, self.a * 2 * clog2(self.a)),
        })

    def _schedule(self):
        pass

    def init_robot(self, r):
        m = r.mem
        m["id"] = r.id
        m["clk"] = 0
        m["ph"] = INIT

    def departing(self, r):
        m = r.mem
        if m.get("ph") == S2_SEEK:
            return m.get("bh") == 0 and m.get("bs") == 1 and m.get("bc") == 0
        return self.line.departing(r)

    def step(self, r, view):
        if self.k == 1:
            # a single robot is dispersed wherever it stands
            return SETTLE
        return getattr(self, self._handlers[r.mem["ph"]])(r, view)

    # -- stage 1 --------------------------------------------------------------
    def _init(self, r, view):
        m = r.mem
        if view.degree == 4:
            group = sorted(p.id for p in view.peers if not p.settled)
            if len(group) == 1:
                r.note("s1.single")
                return SETTLE
            m["ph"] = LINE1
            self.line.begin(r, TRAVEL, group[0])
            return self.line._hop(r, 1)
        if view.degree == 3:
            r.note("s1.bnd")
            m["ph"] = BWALK1
            bw_init(m)
            return bw_step(r, view)
        return self._reach_corner(r, view)

    def _line1(self, r, view):
        res = self.line.step(r, view)
        if res is EDGE:
            m = r.mem
            self.line.finish(r)
            m["ph"] = BWALK1
            bw_init(m, back=view.arrived_via if view.arrived_via else 0)
            return bw_step(r, view)
        if res is SETTLE:
            r.note("s1.single")
        return res

    def _bwalk1(self, r, view):
        res = bw_step(r, view)
        if res is HOPPED:
            if view.degree == 2:
                r.mem.clear_fields(WALK_KEYS)
                return self._reach_corner(r, view)
            res = bw_step(r, view)
        return res

    def _reach_corner(self, r, view):
        m = r.mem
        r.note("s1.corner")
        if view.round >= self.T1:
            # missed the gathering calendar; fall back to settling on the boundary
            return self._bs_begin(r, back=0, limit=None)
        m["ph"] = CORNER
        return sleep_until(self.T1)

    def _corner(self, r, view):
        if view.round < self.T1:
            return sleep_until(self.T1)
        m = r.mem
        group = sorted(p.id for p in view.peers if not p.settled and p.mem.get("ph") == CORNER)
        r.note("s2.begin")
        if len(group) == 1:
            return self._lone_at_corner(r, view)
        m["ph"] = S2_HOME
        m["lab"] = group[0]
        m["best"] = group[0]
        m["boff"] = 0
        m["rt"] = 0
        m["cm"] = 0
        m["lone"] = 0
        return self._start_trip(r, view, group, 0)

    def _lone_at_corner(self, r, view):
        r.mem.clear_fields(STAGE2_KEYS + ("lab", "lone"))
        if settle_allowed(r, view):
            r.note("s2.lone")
            return SETTLE
        return self._bs_begin(r, back=0, limit=None)

    # -- stage 2 --------------------------------------------------------------
    def _trip_start_round(self, m_idx):
        return self.T1 + m_idx * self.W2

    def _start_trip(self, r, view, group, idx):
        m = r.mem
        m["trip"] = idx
        nseek = (len(group) + 1) // 2 if self.faulty else 1
        r.note(f"s2.trip:{idx}")
        if r.id in group[-nseek:]:
            m["ph"] = S2_SEEK
            m["pz"] = 0
            bw_init(m, back=2)
            return bw_step(r, view)
        return sleep_until(self._trip_start_round(idx + 1))

    @staticmethod
    def _sigma(port):
        # leaving a corner through its port 1 means travelling in that corner's forward direction
        return 1 if port == 2 else -1

    def _seek(self, r, view):
        m = r.mem
        if m["pz"]:
            m["pz"] = 0
            return bw_step(r, view)
        res = bw_step(r, view)
        if res is not HOPPED:
            return res
        if view.degree != 2:
            return bw_step(r, view)
        cp = m["bc"]
        if cp == 4:
            m["ph"] = S2_HOME
            m["rt"] = 1
            m["pz"] = None
            m.clear_fields(WALK_KEYS)
            return sleep_until(self._trip_start_round(m["trip"] + 1))
        sigma = self._sigma(view.arrived_via)
        best, boff = m["best"], m["boff"]
        for p in view.peers:
            if p.settled:
                m["lone"] = m["lone"] | (1 << cp)
                continue
            pm = p.mem
            if pm.get("ph") == S2_HOME and pm.get("best") is not None and pm["best"] < best:
                best = pm["best"]
                boff = (cp + sigma * pm["boff"]) % 4
        m["best"] = best
        m["boff"] = boff
        m["pz"] = 1
        return STAY

    def _s2_home(self, r, view):
        m = r.mem
        t = view.round
        nxt = self._trip_start_round(m["trip"] + 1)
        if t < nxt:
            if self.faulty:
                self._learn_from_seekers(r, view)
            return sleep_until(nxt)
        return self._trip_end(r, view)

    def _learn_from_seekers(self, r, view):
        m = r.mem
        best, boff = m["best"], m["boff"]
        for p in view.peers:
            pm = p.mem
            if p.settled or pm.get("ph") != S2_SEEK or not pm.get("pz"):
                continue
            if pm["best"] < best:
                best = pm["best"]
                boff = (self._sigma(pm["bb"]) * (pm["boff"] - pm["bc"])) % 4
        m["best"] = best
        m["boff"] = boff

    def _trip_end(self, r, view):
        m = r.mem
        idx = m["trip"] + 1
        members = [p for p in view.peers
                   if not p.settled and p.mem.get("ph") == S2_HOME and p.mem.get("lab") == m["lab"]]
        group = sorted(p.id for p in members)
        best = min((p.mem["best"], p.mem["boff"]) for p in members)
        lone = 0
        for p in members:
            lone |= p.mem["lone"]
        committed = any(p.mem["cm"] for p in members)
        if not committed:
            back = [p.mem for p in members if p.mem["rt"]]
            stay = [p.mem for p in members if not p.mem["rt"]]
            if not self.faulty:
                committed = bool(back)
                if back:
                    best = (back[0]["best"], back[0]["boff"])
            else:
                committed = any(s["best"] == h["best"] and s["boff"] == h["boff"] for s in back for h in stay)
            if committed:
                r.note("s2.commit")
        m["best"], m["boff"] = best
        m["lone"] = lone
        m["cm"] = 1 if committed else 0
        m["rt"] = 0
        if len(group) == 1:
            return self._lone_at_corner(r, view)
        if idx >= self.trips:
            return self._relocate(r, view)
        if committed:
            m["trip"] = idx
            return sleep_until(self._trip_start_round(idx + 1))
        return self._start_trip(r, view, group, idx)

    def _relocate(self, r, view):
        m = r.mem
        off = m["boff"]
        m["lab"] = m["best"]
        m.clear_fields(("best", "rt", "cm", "pz", "trip"))
        if off == 0:
            m["boff"] = None
            return self._ready(r, view)
        m["ph"] = S2_RELOC
        if off == 3:
            bw_init(m, back=1)
            m["boff"] = 1
        else:
            bw_init(m, back=2)
        return bw_step(r, view)

    def _reloc(self, r, view):
        m = r.mem
        res = bw_step(r, view)
        if res is HOPPED:
            if view.degree == 2 and m["bc"] == m["boff"]:
                m.clear_fields(WALK_KEYS)
                m["boff"] = None
                return self._ready(r, view)
            res = bw_step(r, view)
        return res

    def _ready(self, r, view):
        m = r.mem
        m["ph"] = S2_READY
        r.note("s2.done")
        return sleep_until(self.T2)

    def _s2_ready(self, r, view):
        if view.round < self.T2:
            return sleep_until(self.T2)
        r.note("s2.final")
        return self._stage3_begin(r, view)

    # -- stage 3, shared ------------------------------------------------------
    def _stage3_begin(self, r, view):
        m = r.mem
        m["dp"] = 1
        if self.square:
            m["ph"] = S3_HOME
            return sleep_until(self.T3)
        # walk the port-1 side and back to learn whether it is the long one
        m["ph"] = S3_MEAS
        m["pst"] = 0
        bw_init(m, back=2)
        return bw_step(r, view)

    def _meas(self, r, view):
        m = r.mem
        res = bw_step(r, view)
        if res is not HOPPED:
            return res
        if view.degree != 2:
            return bw_step(r, view)
        if m["pst"] == 0:
            m["dp"] = 1 if m["bh"] + 1 == self.a else 2
            m["pst"] = 1
            a = m["bb"]
            bw_init(m, back=3 - a)
            return bw_step(r, view)
        m.clear_fields(WALK_KEYS + ("pst",))
        m["ph"] = S3_HOME
        return sleep_until(self.T3)

    def _col_begin(self, r, view, ph, j, gk, mode):
        m = r.mem
        m["ph"] = ph
        m["jc"] = j
        m["gk"] = gk
        m["lmode"] = mode
        m["pst"] = CJ_CARAVAN
        bw_init(m, back=3 - m["dp"])
        return bw_step(r, view)

    def _column(self, r, view):
        m = r.mem
        pst = m["pst"]
        if pst == CJ_CARAVAN:
            res = bw_step(r, view)
            if res is not HOPPED:
                return res
            if m["bh"] != m["jc"]:
                return bw_step(r, view)
            m["hp"] = m["bb"]
            ec_start(m, back=m["hp"])
            m["pst"] = CJ_ENTER
            if m["lmode"] == SETTLE_MODE:
                m["sc"] = 1
            return ec_step(r, view)
        if pst == CJ_ENTER:
            res = ec_step(r, view)
            if res is not ENTERED:
                return res
            m.clear_fields(WALK_KEYS + ("ec",))
            gk, mode = m["gk"], m["lmode"]
            self.line.begin(r, mode, gk, arrived=True)
            m["pst"] = CJ_LINE
            return self._col_line(r, view)
        if pst in (CJ_LINE, CJ_ASCEND):
            return self._col_line(r, view)
        if pst == CJ_HOMEWARD:
            return self._homeward(r, view)
        if pst == CJ_EXIT:
            res = bw_step(r, view)
            if res is not HOPPED:
                return res
            if view.degree != 2:
                return bw_step(r, view)
            return self._column_return(r, view)
        raise RuntimeError(f"bad column state {pst}")

    def _col_line(self, r, view):
        m = r.mem
        res = self.line.step(r, view)
        if res is SETTLE:
            m.clear_fields(COLUMN_KEYS + ("dp", "sc"))
            return res
        if res is not EDGE:
            return res
        if m["pst"] == CJ_ASCEND:
            # back at the boundary end of the column: leave towards home
            self.line.finish(r)
            m["pst"] = CJ_EXIT
            bw_init(m)
            m["bs"] = 1
            return move(m["hp"])
        return self._far_end(r, view)

    def _far_end(self, r, view):
        # more robots than free column nodes: fall back to the boundary
        self.line.finish(r)
        m = r.mem
        m.clear_fields(COLUMN_KEYS)
        return self._bs_begin(r, back=view.arrived_via, limit=None)

    def _homeward(self, r, view):
        raise NotImplementedError

    def _column_return(self, r, view):
        raise NotImplementedError

    def _s3_home(self, r, view):
        raise NotImplementedError

    # -- boundary settling ----------------------------------------------------
    def _bs_begin(self, r, back, limit):
        m = r.mem
        m["ph"] = S3_BND
        bw_init(m, back=back)
        m["sc"] = 1
        m["bz"] = 1
        m["bl"] = limit
        return STAY

    def _bnd(self, r, view):
        m = r.mem
        if m["bz"]:
            if settle_allowed(r, view):
                m.clear_fields(WALK_KEYS + ("bz", "bl", "sc", "dp", "lab", "lone", "tab", "bf"))
                return SETTLE
            if m["bl"] is not None and m["bc"] >= m["bl"]:
                m.clear_fields(WALK_KEYS + ("bz", "bl", "sc"))
                return self._bnd_done(r, view)
            m["bz"] = 0
            return bw_step(r, view)
        res = bw_step(r, view)
        if res is HOPPED:
            m["bz"] = 1
            return self._bnd(r, view)
        return res

    def _bnd_done(self, r, view):
        raise NotImplementedError

    _handlers = {
        INIT: "_init", LINE1: "_line1", BWALK1: "_bwalk1", CORNER: "_corner",
        S2_HOME: "_s2_home", S2_SEEK: "_seek", S2_RELOC: "_reloc", S2_READY: "_s2_ready",
        S3_MEAS: "_meas", S3_HOME: "_s3_home", S3_PAIR: "_column", S3_COL: "_column",
        S3_BND: "_bnd",
    }
