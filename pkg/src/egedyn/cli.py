"""Command-line entry point.

Usage::

    egedyn simulate   [--config PATH] [--seed S] [--threads K] [--out DIR] [--set KEY=VALUE ...]
    egedyn verify     ...
    egedyn identities ...
    egedyn two-by-two ...
    egedyn stats      ...

The configuration is one JSON document with sections ``sim`` (simulation
parameters), ``stats`` (static-ensemble parameters) and
``subcommand-defaults`` (per-subcommand options).  ``--set a.b=v`` overrides
any entry by dotted path; ``v`` is parsed as JSON when possible.

Exit status: 0 all reports pass, 1 a report failed, 2 configuration error,
3 numerical degeneracy (the offending time and matrix go to stderr).
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, DegeneracyError
from .process import SimConfig
from .reports import apply_family_threshold, reports_to_json, summary_line
from .spectral import simulate_ensemble
from .spectral_stats import StatsConfig, pooled_eigenvalues, write_cloud_csv
from .suites import (identities_suite, overlap_bridge_suite, stats_suite, two_by_two_suite,
                     verify_suite)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3
SUBCOMMANDS = ("simulate", "verify", "identities", "two-by-two", "stats")

DEFAULT_CONFIG = {
    "sim": {"N": 3, "tau": 0.5, "dt": 1e-3, "steps": 100, "seed": 0, "replicas": 200,
            "initial": {"kind": "sampled_simple", "scale": 1.0}},
    "stats": {"N": 200, "tau": 0.0, "t": 1.0, "samples": 20, "alpha": 1.0, "bins": 10,
              "seed": 0},
    "subcommand-defaults": {
        "simulate": {"store_overlaps": False},
        "verify": {"draws": 20000, "vandermonde_replicas": 2000},
        "identities": {"matrices": 100, "sizes": [3, 4, 5, 6, 7, 8],
                       "bridge_sizes": [2, 3, 4, 5, 6, 7, 8]},
        "two-by-two": {"taus": [0.0, 0.5, 0.7], "draws": 100000, "replicas": 500,
                       "exp_samples": 10000},
        "stats": {"profile_samples": 1000, "cloud_csv": True},
    },
}


class ConfigError(Exception):
    pass


def _merge(base: dict, extra: dict, path=""):
    for key, val in extra.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key}")
        if isinstance(base[key], dict) and key != "initial":
            if not isinstance(val, dict):
                raise ConfigError(f"{path}{key} must be an object")
            _merge(base[key], val, f"{path}{key}.")
        else:
            base[key] = val


def _set_dotted(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown config path {key}")
        node = node[p]
    # the initial condition is validated later and may gain keys (values)
    free = parts[:-1] == ["sim", "initial"]
    if not isinstance(node, dict) or not (parts[-1] in node or free):
        raise ConfigError(f"unknown config path {key}")
    node[parts[-1]] = value


def resolve_config(config_path=None, overrides=(), seed=None) -> dict:
    """Defaults, then the config file, then ``--set`` overrides, then ``--seed``."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if config_path is not None:
        try:
            with open(config_path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {config_path}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        _merge(cfg, doc)
    for a in overrides:
        _set_dotted(cfg, a)
    if seed is not None:
        cfg["sim"]["seed"] = seed
        cfg["stats"]["seed"] = seed
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _threads(arg) -> int:
    raw = arg if arg is not None else os.environ.get("EGEDYN_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"threads must be an integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError("threads must be positive")
    return k


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _run_suite(sub: str, cfg: dict, threads: int, out: Path) -> tuple:
    """Run one subcommand; returns (reports, written files)."""
    sim = SimConfig.from_dict(cfg["sim"])
    opts = cfg["subcommand-defaults"][sub]
    written = []
    if sub == "simulate":
        tracks = simulate_ensemble(sim, store_overlaps=bool(opts["store_overlaps"]),
                                   threads=threads)
        width = max(4, len(str(sim.replicas - 1)))
        for r in range(tracks.replicas):
            path = out / f"trajectory_{r:0{width}d}.csv"
            tracks.trajectory(r).to_csv(path)
            written.append(path)
        return [], written
    if sub == "verify":
        reports = verify_suite(sim, draws=int(opts["draws"]),
                               vandermonde_replicas=int(opts["vandermonde_replicas"]),
                               threads=threads)
    elif sub == "identities":
        reports = identities_suite(sim.seed, int(opts["matrices"]), opts["sizes"])
        reports += overlap_bridge_suite(sim.seed, int(opts["matrices"]), opts["bridge_sizes"])
    elif sub == "two-by-two":
        reports = two_by_two_suite(sim.seed, opts["taus"], int(opts["draws"]),
                                   replicas=int(opts["replicas"]),
                                   exp_samples=int(opts["exp_samples"]))
    else:
        scfg = StatsConfig.from_dict(cfg["stats"])
        reports = stats_suite(scfg, profile_samples=int(opts["profile_samples"]))
        if opts.get("cloud_csv"):
            path = out / "cloud_stats.csv"
            write_cloud_csv(path, pooled_eigenvalues(scfg))
            written.append(path)
    return apply_family_threshold(reports), written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="egedyn", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"egedyn {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON configuration file")
        s.add_argument("--seed", type=int, help="master seed (overrides sim.seed and stats.seed)")
        s.add_argument("--threads", help="worker threads (default: $EGEDYN_THREADS or 1)")
        s.add_argument("--out", default="egedyn_out", help="output directory")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry by dotted path")
        s.add_argument("--quiet", action="store_true", help="do not echo the JSON reports")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _now()
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg = resolve_config(args.config, args.set, args.seed)
        threads = _threads(args.threads)
        SimConfig.from_dict(cfg["sim"])
        StatsConfig.from_dict(cfg["stats"])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ArgumentError, TypeError, ValueError) as e:
        print(f"egedyn: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        reports, written = _run_suite(args.subcommand, cfg, threads, out)
    except DegeneracyError as e:
        print(f"egedyn: degenerate spectrum: {e}", file=sys.stderr)
        print(f"  t = {e.t}  replica = {e.replica}  min_gap = {e.min_gap:.3e}", file=sys.stderr)
        if e.state is not None:
            print("  J =", np.array2string(np.asarray(e.state), precision=17,
                                            max_line_width=200), file=sys.stderr)
        return EXIT_DEGENERATE
    except (ArgumentError, TypeError, KeyError) as e:
        print(f"egedyn: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.subcommand != "simulate":
        path = out / f"report_{args.subcommand.replace('-', '_')}.json"
        text = reports_to_json(reports)
        path.write_text(text)
        written.insert(0, path)
        if not args.quiet:
            sys.stdout.write(text)
        print(summary_line(reports))
        code = EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL
    else:
        print(f"PASS: wrote {len(written)} trajectory files")
        code = EXIT_PASS
    manifest = {
        "subcommand": args.subcommand,
        "config_hash": config_hash(cfg),
        "seed": cfg["sim"]["seed"],
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in written],
        "exit_code": code,
        "config": cfg,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
