"""Run configuration: parsing, validation and the protocol registry."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .adversary import policy_from_dict
from .grid import GridSpec, GridSpecError


class ConfigError(ValueError):
    pass


def _registry():
    from .alg1 import Alg1
    from .alg2 import Alg2
    from .alg3 import Alg3
    return {"alg1": Alg1, "alg2": Alg2, "alg3": Alg3}


PROTOCOL_IDS = ("alg1", "alg2", "alg3")
POLICIES = ("none", "fixed", "random", "target_scouts", "halving")


def make_program(protocol: str):
    try:
        return _registry()[protocol]()
    except KeyError:
        raise ConfigError(f"unknown protocol {protocol!r}; pick one of {', '.join(PROTOCOL_IDS)}") from None


def check_compatible(protocol: str, spec: GridSpec, adversary: dict | None) -> None:
    if protocol not in PROTOCOL_IDS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    policy = (adversary or {}).get("policy", "none")
    if policy not in POLICIES:
        raise ConfigError(f"unknown crash policy {policy!r}")
    if protocol == "alg1" and not spec.oriented:
        raise ConfigError("alg1 needs an oriented grid")
    if protocol == "alg2" and policy != "none":
        raise ConfigError("alg2 does not tolerate crashes; use adversary none")


@dataclass
class RunConfig:
    grid: GridSpec
    protocol: str
    k: int
    seed: int | None = None
    placement: dict | None = None
    adversary: dict = field(default_factory=lambda: {"policy": "none"})
    round_budget: int | None = None
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - {"grid", "robots", "protocol", "adversary", "round_budget", "outputs"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            spec = GridSpec.from_dict(d["grid"])
        except KeyError:
            raise ConfigError("config needs a grid") from None
        except (GridSpecError, TypeError) as e:
            raise ConfigError(f"bad grid: {e}") from None
        protocol = d.get("protocol")
        adversary = d.get("adversary") or {"policy": "none"}
        if not isinstance(adversary, dict):
            raise ConfigError("adversary must be an object")
        check_compatible(protocol, spec, adversary)
        try:
            if adversary.get("policy") != "halving":
                policy_from_dict(adversary)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad adversary: {e}") from None

        robots = d.get("robots")
        if not isinstance(robots, dict):
            raise ConfigError("config needs robots: {k, seed} or {placement}")
        placement = None
        seed = None
        if "placement" in robots:
            raw = robots["placement"]
            if isinstance(raw, list):
                raw = {str(i + 1): v for i, v in enumerate(raw)}
            if not isinstance(raw, dict) or not raw:
                raise ConfigError("placement must be a non-empty id->node map")
            try:
                placement = {int(i): int(v) for i, v in raw.items()}
            except (TypeError, ValueError):
                raise ConfigError("placement ids and nodes must be integers") from None
            if sorted(placement) != list(range(1, len(placement) + 1)):
                raise ConfigError("placement ids must be 1..k")
            bad = [v for v in placement.values() if not 0 <= v < spec.n]
            if bad:
                raise ConfigError(f"placement nodes out of range: {bad[:3]}")
            k = len(placement)
            if robots.get("k", k) != k:
                raise ConfigError("k disagrees with the placement size")
        else:
            k = robots.get("k")
            seed = robots.get("seed", 0)
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise ConfigError("placement seed must be a non-negative integer")
        if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= spec.n:
            raise ConfigError(f"k must be an integer in [1, {spec.n}]")
        budget = d.get("round_budget")
        if budget is not None and (not isinstance(budget, int) or budget < 0):
            raise ConfigError("round_budget must be a non-negative integer")
        outputs = d.get("outputs") or {}
        if not isinstance(outputs, dict) or set(outputs) - {"result", "trace", "csv"}:
            raise ConfigError("outputs may only name result, trace and csv paths")
        return cls(spec, protocol, k, seed, placement, adversary, budget, outputs)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        robots = {"k": self.k}
        if self.placement is not None:
            robots["placement"] = {str(i): v for i, v in sorted(self.placement.items())}
        else:
            robots["seed"] = self.seed
        d = {"grid": self.grid.to_dict(), "robots": robots, "protocol": self.protocol,
             "adversary": self.adversary, "round_budget": self.round_budget}
        if self.outputs:
            d["outputs"] = self.outputs
        return d

    def placement_arg(self):
        return self.placement if self.placement is not None else self.seed

    def make_policy(self):
        return policy_from_dict(self.adversary)
