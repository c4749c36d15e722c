"""griddisp command line: run, sweep, replay.

Exit codes: 0 pass, 1 check failure (or exhausted budget, digest mismatch),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checks import check_bounds
from .config import ConfigError, RunConfig
from .engine import RoundTrace
from .grid import build_grid
from .runner import rows_to_csv, run_config, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from None


def _load_config(path) -> RunConfig:
    try:
        return RunConfig.from_dict(_load_json(path))
    except ConfigError as e:
        raise UsageError(str(e)) from None


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out = run_config(cfg)
    res, rep = out.result, out.report
    payload = {"config": cfg.to_dict(), "result": res.to_dict(), "report": rep.to_dict(),
               "passed": out.passed}
    result_path = args.out or cfg.outputs.get("result")
    text = json.dumps(payload, sort_keys=True, indent=2)
    if result_path:
        Path(result_path).write_text(text + "\n")
    else:
        print(text)
    trace_path = args.trace or cfg.outputs.get("trace")
    if trace_path:
        out.trace.write(trace_path)
    if cfg.outputs.get("csv"):
        from .runner import CSV_FIELDS
        row = {"protocol": cfg.protocol, "shape": f"{cfg.grid.cols}x{cfg.grid.rows}", "n": res.n,
               "k": res.k, "adversary": cfg.adversary.get("policy", "none"),
               "port_seed": cfg.grid.port_seed, "seed": cfg.seed if cfg.seed is not None else "",
               "rounds": res.rounds_used, "dispersed": int(res.dispersed),
               "peak_mem_bits": res.max_peak_memory_bits, "crashes": res.crashes,
               "retries": rep.stats.get("retries", 0), "ok": int(out.passed), "digest": res.digest}
        path = Path(cfg.outputs["csv"])
        fresh = not path.exists()
        with path.open("a") as fh:
            if fresh:
                fh.write(",".join(CSV_FIELDS) + "\n")
            fh.write(",".join(str(row[f]) for f in CSV_FIELDS) + "\n")
    status = "pass" if out.passed else "FAIL"
    print(f"{status}: {cfg.protocol} n={res.n} k={res.k} rounds={res.rounds_used} "
          f"crashes={res.crashes} digest={res.digest}", file=sys.stderr)
    return EXIT_OK if out.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    spec = _load_json(args.config)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    try:
        rows = run_sweep(spec, jobs=args.jobs)
    except ConfigError as e:
        raise UsageError(str(e)) from None
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = sum(1 for r in rows if not r["ok"])
    print(f"{len(rows)} runs, {failed} failed", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_replay(args) -> int:
    if not args.trace:
        raise UsageError("replay needs --trace")
    if not Path(args.trace).exists():
        raise UsageError(f"no such file: {args.trace}")
    stored = None
    if args.config:
        d = _load_json(args.config)
        if "result" in d and "config" in d:
            stored = d
            try:
                cfg = RunConfig.from_dict(d["config"])
            except ConfigError as e:
                raise UsageError(str(e)) from None
        else:
            try:
                cfg = RunConfig.from_dict(d)
            except ConfigError as e:
                raise UsageError(str(e)) from None
            if cfg.outputs.get("result") and Path(cfg.outputs["result"]).exists():
                stored = _load_json(cfg.outputs["result"])
    else:
        raise UsageError("replay needs --config (the run config or its stored result)")
    try:
        trace = RoundTrace.read(args.trace)
    except (ValueError, KeyError) as e:
        raise UsageError(f"unreadable trace: {e}") from None
    rounds = peak = None
    if stored is not None:
        rounds = stored["result"]["rounds_used"]
        peak = stored["result"]["max_peak_memory_bits"]
    report = check_bounds(trace, cfg.protocol, build_grid(cfg.grid), rounds, peak or 0)
    out = {"report": report.to_dict(), "digest": trace.digest()}
    code = EXIT_OK if report.ok else EXIT_FAIL
    if stored is not None:
        out["stored_digest"] = stored["result"]["digest"]
        if out["stored_digest"] != out["digest"]:
            out["digest_match"] = False
            code = EXIT_FAIL
        else:
            out["digest_match"] = True
    print(json.dumps(out, sort_keys=True, indent=2))
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="griddisp", description="Robot dispersion on port-labeled grids.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one configured simulation and check it")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="result JSON path (overrides the config)")
    run.add_argument("--trace", help="write the JSONL trace here")
    run.set_defaults(func=cmd_run)
    sw = sub.add_parser("sweep", help="run a parameter sweep and emit CSV")
    sw.add_argument("--config", required=True, help="sweep spec JSON")
    sw.add_argument("--out", help="CSV path (default stdout)")
    sw.add_argument("--jobs", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)
    rp = sub.add_parser("replay", help="re-check a stored trace")
    rp.add_argument("--trace")
    rp.add_argument("--config")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
