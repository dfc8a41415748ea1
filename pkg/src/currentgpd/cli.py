"""Verification command line: run suites, list them, dump grid maps.

Reports are deterministic for a fixed (config, seed) up to the wall-time
fields; suites execute in parallel with per-suite derived seeds, so the
partitioning cannot change any result.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from .catalog import Circle
from .errors import ConfigError, UnknownId
from .gridmaps import (GridSpec, circle_identity_loop, circle_winding_loop,
                       constant_grid_map, gridmap_to_csv)
from .suites import SUITES, SuiteContext, run_suite
from .tolerances import DEFAULT, TOLERANCE_KEYS

_CONFIG_KEYS = {"suites", "grid", "tolerances", "seed", "instances",
                "samples", "out"}
_GRID_KEYS = {"kind", "n", "ell"}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in raw:
        raise ConfigError("config key 'seed' is mandatory")
    if not isinstance(raw["seed"], int):
        raise ConfigError("'seed' must be an integer")
    grid = raw.get("grid", {"kind": "circle", "n": 64, "ell": 1})
    unknown = set(grid) - _GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    tols = raw.get("tolerances", {})
    unknown = set(tols) - set(TOLERANCE_KEYS)
    if unknown:
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    for key, val in tols.items():
        if not isinstance(val, (int, float)) or val <= 0:
            raise ConfigError(f"tolerance {key} must be positive")
    suites = raw.get("suites", sorted(SUITES))
    for sid in suites:
        if sid not in SUITES:
            raise ConfigError(f"unknown suite id {sid!r}")
    from .groupoids import GROUPOIDS
    instances = raw.get("instances", sorted(GROUPOIDS))
    for inst in instances:
        if inst not in GROUPOIDS:
            raise ConfigError(f"unknown catalog instance {inst!r}")
    samples = raw.get("samples", {})
    for key, val in samples.items():
        if key not in SUITES:
            raise ConfigError(f"unknown suite id in samples: {key!r}")
        if not isinstance(val, int) or val <= 0:
            raise ConfigError(f"sample count for {key} must be a positive int")
    return {
        "suites": list(suites),
        "grid": {"kind": grid.get("kind", "circle"),
                 "n": int(grid.get("n", 64)), "ell": int(grid.get("ell", 1))},
        "tolerances": dict(tols),
        "seed": raw["seed"],
        "instances": list(instances),
        "samples": dict(samples),
        "out": raw.get("out"),
    }


def execute(config: dict) -> dict:
    try:
        grid = GridSpec(config["grid"]["kind"], config["grid"]["n"],
                        config["grid"]["ell"])
    except ValueError as e:
        raise ConfigError(str(e)) from e
    ctx = SuiteContext(
        seed=config["seed"],
        grid=grid,
        tol=DEFAULT.with_overrides(**config["tolerances"]),
        instances=config["instances"],
        samples=config.get("samples", {}),
    )
    results = {}
    with ThreadPoolExecutor(max_workers=4) as pool:
        futures = {sid: pool.submit(run_suite, sid, ctx)
                   for sid in config["suites"]}
        for sid, fut in futures.items():
            results[sid] = fut.result()
    records = [r for sid in sorted(results) for r in results[sid]]
    records.sort(key=lambda r: r.check_name)
    overall = all(r.status in ("pass", "obstructed-as-expected")
                  for r in records)
    return {
        "seed": config["seed"],
        "grid": config["grid"],
        "status": "pass" if overall else "fail",
        "records": [r.to_dict() for r in records],
    }


def write_report(report: dict, out_path=None):
    text = json.dumps(report, sort_keys=True, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


# -- named grid maps -----------------------------------------------------------

def named_gridmap(name: str, n: int):
    circle = Circle()
    grid = GridSpec("circle", n)
    if name == "identity-loop":
        return circle_identity_loop(grid, circle)
    if name == "constant-loop":
        return constant_grid_map(grid, circle.point_from_ambient([1.0, 0.0]))
    if name == "winding-2-loop":
        return circle_winding_loop(grid, circle, 2)
    raise UnknownId(f"no grid map registered under {name!r}")


NAMED_GRIDMAPS = ("identity-loop", "constant-loop", "winding-2-loop")


# -- entry point ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="currentgpd",
                                description="verification suites for groupoids "
                                            "of grid maps")
    sub = p.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run verification suites from a config")
    runp.add_argument("--config", required=True)
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    runp.add_argument("--out", default=None, help="override the report path")
    runp.add_argument("--suite", action="append", default=None,
                      help="run only these suites (repeatable)")

    sub.add_parser("list-suites", help="list suite ids and their anchors")

    dump = sub.add_parser("dump-gridmap", help="write a named grid map as CSV")
    dump.add_argument("id")
    dump.add_argument("--out", required=True)
    dump.add_argument("--n", type=int, default=8)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-suites":
        width = max(len(s) for s in SUITES)
        for sid in sorted(SUITES):
            anchor, _ = SUITES[sid]
            sys.stdout.write(f"{sid:<{width}}  {anchor}\n")
        return 0
    if args.command == "dump-gridmap":
        try:
            gm = named_gridmap(args.id, args.n)
        except UnknownId as e:
            sys.stderr.write(f"error: {e}\n")
            return 2
        gridmap_to_csv(gm, args.out)
        return 0
    # run
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        if args.out is not None:
            config["out"] = args.out
        if args.suite:
            for sid in args.suite:
                if sid not in SUITES:
                    raise ConfigError(f"unknown suite id {sid!r}")
            config["suites"] = list(args.suite)
        report = execute(config)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2
    write_report(report, config.get("out"))
    return 0 if report["status"] == "pass" else 1


if __name__ == "__main__":
    raise SystemExit(main())
