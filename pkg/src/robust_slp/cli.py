"""Batch command-line front end.

Subcommands::

    robust-slp power-sweep CONFIG -o OUTDIR
    robust-slp ser         CONFIG -o OUTDIR [--true-xi2 V]
    robust-slp feasibility CONFIG -o OUTDIR [--sweep violation_prob|variance]
    robust-slp benchmark   CONFIG -o OUTDIR
    robust-slp validate    CONFIG -o OUTDIR
    robust-slp tightness   [--grid 0.01,0.05,...] -o FILE.csv

``CONFIG`` is an INI-style scenario file (see :mod:`robust_slp.simkit.config`)
or a ``manifest.json`` written by an earlier run, which replays that run.
Each experiment writes ``<kind>.csv``, ``<kind>.json`` and ``manifest.json``
into the existing directory ``OUTDIR``.

Exit codes: 0 ok, 2 config error, 3 I/O error, 4 solver failure.
The only environment variable read is ``ROBUST_SLP_VERBOSE`` (``1`` for
progress messages, ``2`` for debug output), equivalent to ``-v``/``-vv``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from datetime import datetime, timezone

import numpy as np

from robust_slp.errors import ConfigError, SlpError
from robust_slp.robustcons import compare_tightness
from robust_slp.simkit import (
    ScenarioConfig,
    benchmark_runtime,
    run_feasibility,
    run_power_sweep,
    run_ser,
    run_validation,
    version_string,
)
from robust_slp.simkit.config import SWEEPS

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_SOLVER = 0, 2, 3, 4
VERBOSE_ENV = "ROBUST_SLP_VERBOSE"

log = logging.getLogger("robust_slp")


class _IOFailure(Exception):
    pass


# -- file helpers -----------------------------------------------------------

def _atomic_write(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(path) -> ScenarioConfig:
    """Scenario from an INI file or from the ``config`` entry of a manifest."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc.strerror or exc}") from None
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("file", f"invalid JSON manifest: {exc}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("config"), dict):
            raise ConfigError("config", "manifest lacks a config object")
        return ScenarioConfig.from_dict(doc["config"])
    return ScenarioConfig.from_ini(text)


def _check_outdir(path):
    if not os.path.isdir(path):
        raise _IOFailure(f"output directory {path} does not exist")
    if not os.access(path, os.W_OK):
        raise _IOFailure(f"output directory {path} is not writable")


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- experiments ----------------------------------------------------------------

def _failures(report) -> int:
    if "failed_count" in report.columns:
        return int(sum(report.column("failed_count")))
    if report.kind == "validate":
        return sum(1 for s in report.column("status") if s not in ("Optimal", "PrimalInfeasible"))
    return 0


def _run_experiment(command, runner, args) -> int:
    cfg = load_config(args.config)
    _check_outdir(args.output)
    log.info("%s: config hash %s", command, cfg.config_hash())
    started = _now()
    t0 = time.perf_counter()
    report = runner(cfg, args)
    elapsed = time.perf_counter() - t0
    csv_path = os.path.join(args.output, f"{report.kind}.csv")
    json_path = os.path.join(args.output, f"{report.kind}.json")
    manifest_path = os.path.join(args.output, "manifest.json")
    manifest = {
        "command": command,
        "version": version_string(),
        "config": cfg.to_dict(),
        "config_hash": report.metadata["config_hash"],
        "arguments": _extra_args(args),
        "outputs": {"csv": os.path.basename(csv_path), "json": os.path.basename(json_path)},
        "started": started,
        "finished": _now(),
        "wall_seconds": elapsed,
    }
    try:
        _atomic_write(csv_path, report.to_csv())
        _atomic_write(json_path, report.to_json())
        _atomic_write(manifest_path, json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise _IOFailure(f"cannot write outputs: {exc.strerror or exc}") from None
    log.info("%s: wrote %s (%d rows) in %.1f s", command, csv_path, len(report.records), elapsed)
    failed = _failures(report)
    if failed:
        print(f"error: {failed} solve(s) ended without a status certificate", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _extra_args(args):
    out = {}
    for key in ("true_xi2", "sweep"):
        if getattr(args, key, None) is not None:
            out[key] = getattr(args, key)
    return out


RUNNERS = {
    "power-sweep": lambda cfg, a: run_power_sweep(cfg),
    "ser": lambda cfg, a: run_ser(cfg, true_xi2=a.true_xi2),
    "feasibility": lambda cfg, a: run_feasibility(cfg, sweep=a.sweep),
    "benchmark": lambda cfg, a: benchmark_runtime(cfg),
    "validate": lambda cfg, a: run_validation(cfg),
}


# -- tightness ----------------------------------------------------------------

TIGHTNESS_COLUMNS = ("upsilon", "rho", "psi", "alpha", "tightest_method")


def _parse_grid(text):
    if text is None:
        return tuple(float(u) for u in np.linspace(0.005, 0.5, 100))
    try:
        grid = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError("grid", f"cannot parse {text!r}") from None
    if not grid:
        raise ConfigError("grid", "must not be empty")
    bad = [u for u in grid if not (0.0 < u <= 0.5)]
    if bad:
        raise ConfigError("grid", f"violation probability must lie in (0, 1/2], got {bad[0]}")
    return grid


def tightness_csv(grid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(TIGHTNESS_COLUMNS)
    for u in grid:
        r = compare_tightness(u)
        w.writerow([repr(u), repr(r.rho), repr(r.psi), repr(r.alpha), r.tightest.short])
    return buf.getvalue()


def _run_tightness(args) -> int:
    grid = _parse_grid(args.grid)
    out = args.output
    parent = os.path.dirname(os.path.abspath(out))
    _check_outdir(parent)
    started = _now()
    text = tightness_csv(grid)
    manifest = {
        "command": "tightness",
        "version": version_string(),
        "config": {"grid": list(grid)},
        "outputs": {"csv": os.path.basename(out)},
        "started": started,
        "finished": _now(),
    }
    try:
        _atomic_write(out, text)
        _atomic_write(out + ".manifest.json", json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise _IOFailure(f"cannot write {out}: {exc.strerror or exc}") from None
    log.info("tightness: wrote %s (%d rows)", out, len(grid))
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-slp",
                                     description="Robust symbol-level precoding experiments.")
    parser.add_argument("--version", action="version", version=version_string())
    parser.add_argument("-v", "--verbose", action="count", default=None,
                        help=f"progress messages on stderr (also via {VERBOSE_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("config", help="scenario file (INI) or manifest.json of a previous run")
        p.add_argument("-o", "--output", required=True, help="existing output directory")
        if name == "ser":
            p.add_argument("--true-xi2", type=float, default=None,
                           help="error variance of the true channel (default: design value)")
        if name == "feasibility":
            p.add_argument("--sweep", choices=SWEEPS, default=None,
                           help="override the [feasibility] sweep key")
    p = sub.add_parser("tightness")
    p.add_argument("--grid", default=None, help="comma-separated violation probabilities")
    p.add_argument("-o", "--output", required=True, help="CSV file to write")
    return parser


def _verbosity(flag):
    if flag is not None:
        return flag
    try:
        return int(os.environ.get(VERBOSE_ENV, "0"))
    except ValueError:
        return 0


def _setup_logging(level):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING if level <= 0 else logging.INFO if level == 1 else logging.DEBUG)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(_verbosity(args.verbose))
    try:
        if args.command == "tightness":
            return _run_tightness(args)
        return _run_experiment(args.command, RUNNERS[args.command], args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SlpError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
