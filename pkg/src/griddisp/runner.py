"""Run one configured simulation with all checks, or a whole sweep of them."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .adversary import FixedSchedule, halving_schedule, policy_from_dict
from .checks import check_run
from .config import ConfigError, RunConfig, check_compatible, make_program
from .engine import run_simulation
from .grid import GridSpec, build_grid

CSV_FIELDS = ("protocol", "shape", "n", "k", "adversary", "port_seed", "seed", "rounds",
              "dispersed", "peak_mem_bits", "crashes", "retries", "ok", "digest")


@dataclass
class Outcome:
    result: object
    trace: object
    report: object

    @property
    def passed(self) -> bool:
        return self.report.ok and not self.result.budget_exhausted


def build_policy(adversary: dict, spec, placement, protocol, k, round_budget=None, grid=None):
    """Crash policy for a run. "halving" needs a crash-free reference run first."""
    if adversary.get("policy") == "halving":
        _, ref = run_simulation(spec, placement, make_program(protocol), None,
                                round_budget=round_budget, k=k, grid=grid)
        return FixedSchedule(halving_schedule(ref))
    return policy_from_dict(adversary)


def execute(spec: GridSpec, protocol: str, k: int, placement, adversary=None,
            round_budget=None, grid=None) -> Outcome:
    adversary = adversary or {"policy": "none"}
    grid = grid if grid is not None else build_grid(spec)
    policy = build_policy(adversary, spec, placement, protocol, k, round_budget, grid)
    program = make_program(protocol)
    result, trace = run_simulation(spec, placement, program, policy,
                                   round_budget=round_budget, k=k, grid=grid)
    report = check_run(program, result, trace, grid)
    return Outcome(result, trace, report)


def run_config(cfg: RunConfig) -> Outcome:
    return execute(cfg.grid, cfg.protocol, cfg.k, cfg.placement_arg(), cfg.adversary, cfg.round_budget)


# -- sweeps -----------------------------------------------------------------

def _ks(spec, n):
    out = []
    for k in spec:
        if k == "n":
            out.append(n)
        elif k == "half":
            out.append(max(1, n // 2))
        elif isinstance(k, int) and not isinstance(k, bool) and 1 <= k <= n:
            out.append(k)
        else:
            raise ConfigError(f"bad k entry {k!r}")
    return sorted(set(out))


def _shapes(d):
    for s in d.get("sides", []):
        yield {"kind": "square", "side": s}
    for ln, wd in d.get("rectangles", []):
        yield {"kind": "rectangle", "length": ln, "width": wd}


def adversary_label(adv: dict) -> str:
    policy = adv.get("policy", "none")
    if policy == "random":
        return f"random:{adv['p']}"
    if policy == "target_scouts" and adv.get("q", 1.0) != 1.0:
        return f"target_scouts:{adv['q']}"
    return policy


def sweep_cells(d: dict) -> list:
    """Expand a sweep spec into independent cells. Incompatible combinations are skipped."""
    if not isinstance(d, dict):
        raise ConfigError("sweep spec must be a JSON object")
    unknown = set(d) - {"sides", "rectangles", "protocols", "adversaries", "seeds", "port_seeds", "ks",
                        "round_budget"}
    if unknown:
        raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
    seeds = d.get("seeds", 1)
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    port_seeds = d.get("port_seeds", [0])
    port_seeds = list(range(port_seeds)) if isinstance(port_seeds, int) else list(port_seeds)
    cells = []
    for shape in _shapes(d):
        for protocol in d.get("protocols", []):
            orientation = "oriented" if protocol == "alg1" else "unoriented"
            for ps in port_seeds:
                try:
                    spec = GridSpec.from_dict({**shape, "orientation": orientation, "port_seed": ps})
                except ValueError as e:
                    raise ConfigError(f"bad shape {shape}: {e}") from None
                for adv in d.get("adversaries", [{"policy": "none"}]):
                    if protocol not in ("alg1", "alg2", "alg3"):
                        raise ConfigError(f"unknown protocol {protocol!r}")
                    try:
                        check_compatible(protocol, spec, adv)
                    except ConfigError:
                        continue
                    for k in _ks(d.get("ks", ["n"]), spec.n):
                        for seed in seeds:
                            cells.append((spec.to_dict(), protocol, k, seed, adv, d.get("round_budget")))
    return cells


def run_cell(cell) -> dict:
    shape, protocol, k, seed, adv, budget = cell
    spec = GridSpec.from_dict(shape)
    adv = dict(adv)
    if adv.get("policy") in ("random", "target_scouts") and "seed" not in adv:
        adv["seed"] = seed
    out = execute(spec, protocol, k, seed, adv, budget)
    res, rep = out.result, out.report
    shape_s = f"{spec.cols}x{spec.rows}"
    return {
        "protocol": protocol, "shape": shape_s, "n": spec.n, "k": k,
        "adversary": adversary_label(adv), "port_seed": spec.port_seed, "seed": seed,
        "rounds": res.rounds_used, "dispersed": int(res.dispersed),
        "peak_mem_bits": res.max_peak_memory_bits, "crashes": res.crashes,
        "retries": rep.stats.get("retries", 0), "ok": int(out.passed), "digest": res.digest,
    }


def _sort_key(row):
    return tuple(row[f] for f in CSV_FIELDS)


def run_sweep(d: dict, jobs: int = 1) -> list:
    cells = sweep_cells(d)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(run_cell, cells, chunksize=4))
    else:
        rows = [run_cell(c) for c in cells]
    return sorted(rows, key=_sort_key)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
