"""Crash policies. Crashes land at the start of a round."""

from __future__ import annotations

import numpy as np

INF = float("inf")


class CrashPolicy:
    name = "none"
    cap = 0

    def setup(self, world, program) -> None:
        self.world = world
        self.program = program
        self.spent = 0

    def plan_crashes(self, rnd: int, world) -> set:
        return set()

    def next_event(self, rnd: int):
        """Earliest round >= rnd at which this policy may crash someone unprompted."""
        return INF

    def to_dict(self) -> dict:
        return {"policy": self.name}

    def _take(self, world, ids) -> set:
        out = set()
        for rid in sorted(ids):
            if self.spent >= self.cap:
                break
            r = world.robots.get(rid)
            if r is None or r.crashed:
                continue
            out.add(rid)
            self.spent += 1
        return out


class NoCrashes(CrashPolicy):
    name = "none"


class FixedSchedule(CrashPolicy):
    name = "fixed"

    def __init__(self, schedule, cap=None):
        self.schedule = sorted((int(r), int(i)) for r, i in schedule)
        self.cap = len(self.schedule) if cap is None else int(cap)
        self.by_round = {}
        for r, i in self.schedule:
            self.by_round.setdefault(r, []).append(i)

    def plan_crashes(self, rnd, world):
        ids = self.by_round.get(rnd)
        return self._take(world, ids) if ids else set()

    def next_event(self, rnd):
        for r, _ in self.schedule:
            if r >= rnd:
                return r
        return INF

    def to_dict(self):
        return {"policy": "fixed", "schedule": [list(e) for e in self.schedule]}


class RandomCrashes(CrashPolicy):
    """Every live robot crashes with probability p in each round, at most ``cap`` in total.

    Sampled as one geometric first-crash round per robot, which has the same
    distribution as a Bernoulli trial per robot per round but lets the engine
    skip quiet rounds.
    """

    name = "random"

    def __init__(self, p: float, seed: int = 0, cap=None):
        if not 0 <= p <= 1:
            raise ValueError("crash probability must lie in [0, 1]")
        self.p = float(p)
        self.seed = int(seed)
        self.cap_arg = cap

    def setup(self, world, program):
        super().setup(world, program)
        k = len(world.robots)
        self.cap = k // 2 if self.cap_arg is None else min(int(self.cap_arg), k)
        rng = np.random.Generator(np.random.Philox(key=[self.seed, 0x63726173]))
        self.when = {}
        if self.p > 0:
            # numpy's geometric counts trials from 1; round r is trial r + 1
            first = rng.geometric(self.p, size=k) - 1
            for rid in range(1, k + 1):
                self.when.setdefault(int(first[rid - 1]), []).append(rid)
        self.rounds = sorted(self.when)

    def plan_crashes(self, rnd, world):
        ids = self.when.get(rnd)
        return self._take(world, ids) if ids else set()

    def next_event(self, rnd):
        if self.spent >= self.cap:
            return INF
        for r in self.rounds:
            if r >= rnd:
                return r
        return INF

    def to_dict(self):
        d = {"policy": "random", "p": self.p, "seed": self.seed}
        if self.cap_arg is not None:
            d["f"] = self.cap_arg
        return d


class TargetScouts(CrashPolicy):
    """Crash robots that just left on a scouting or seeker trip, with probability q."""

    name = "target_scouts"

    def __init__(self, seed: int = 0, cap=None, q: float = 1.0):
        self.seed = int(seed)
        self.cap_arg = cap
        self.q = float(q)

    def setup(self, world, program):
        super().setup(world, program)
        k = len(world.robots)
        self.cap = k // 2 if self.cap_arg is None else min(int(self.cap_arg), k)
        self.rng = np.random.Generator(np.random.Philox(key=[self.seed, 0x74617267]))

    def plan_crashes(self, rnd, world):
        if self.spent >= self.cap or not world.moved_last:
            return set()
        targets = [rid for rid in sorted(world.moved_last)
                   if not world.robots[rid].crashed and self.program.departing(world.robots[rid])]
        if not targets:
            return set()
        if self.q < 1.0:
            # one coin per departing group, keyed by the group's departure node
            groups = {}
            for rid in targets:
                groups.setdefault(world.robots[rid].node, []).append(rid)
            chosen = []
            for node in sorted(groups):
                if self.rng.random() < self.q:
                    chosen.extend(groups[node])
            targets = chosen
        return self._take(world, targets)

    def to_dict(self):
        d = {"policy": "target_scouts", "seed": self.seed, "q": self.q}
        if self.cap_arg is not None:
            d["f"] = self.cap_arg
        return d


def halving_schedule(trace) -> list:
    """Crash script built from a crash-free reference trace: every robot that
    leaves on a seeker trip dies the round after it departs."""
    tripping = {(r, rid) for r, rid, name, arg in trace
                if name == "phase" and isinstance(arg, str) and arg.startswith("s2.trip")}
    out = []
    for r, rid, name, _ in trace:
        if name == "moved" and (r, rid) in tripping:
            out.append((r + 1, rid))
    return sorted(set(out))


def policy_from_dict(d: dict | None) -> CrashPolicy:
    if d is None:
        return NoCrashes()
    kind = d.get("policy", "none")
    if kind == "none":
        return NoCrashes()
    if kind == "fixed":
        return FixedSchedule(d.get("schedule", []), d.get("f"))
    if kind == "random":
        return RandomCrashes(float(d["p"]), int(d.get("seed", 0)), d.get("f"))
    if kind == "target_scouts":
        return TargetScouts(int(d.get("seed", 0)), d.get("f"), float(d.get("q", 1.0)))
    raise ValueError(f"unknown crash policy {kind!r}")


def plan_crashes(policy: CrashPolicy, rnd: int, world) -> set:
    return policy.plan_crashes(rnd, world)
