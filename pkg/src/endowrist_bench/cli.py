"""Command-line entry point: ``endowrist-bench <subcommand>``.

Exit status: 0 success, 1 domain or I/O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import BenchError

SEED_ENV = "ENDOWRIST_BENCH_SEED"
log = logging.getLogger("endowrist_bench")


class UsageError(Exception):
    pass


def _seed(args, fallback: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}")
    return fallback


def _existing(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {p}")
    return p


def _load_calibration(path):
    from .fixtures import load_calibration
    from .kinematics import InstrumentCalibration

    return InstrumentCalibration.load(_existing(path)) if path else load_calibration()


def _load_emulator_config(path, calib):
    from .controller import EmulatorConfig
    from .fixtures import EMULATOR_FILE, data_path

    if path:
        return EmulatorConfig.load(_existing(path))
    if calib is None:
        return EmulatorConfig.load(data_path(EMULATOR_FILE))
    return EmulatorConfig.for_instrument(calib)


# -- subcommands -----------------------------------------------------------

def cmd_emulate(args) -> int:
    from .controller import Emulator, serve, serve_tcp
    from .kinematics import InstrumentCalibration

    calib = InstrumentCalibration.load(_existing(args.calib)) if args.calib else None
    config = _load_emulator_config(args.config, calib)
    if calib is None:
        calib = _load_calibration(config.calibration_path)
    config = replace(config, seed=_seed(args, config.seed))
    emulator = Emulator(config, calib)
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        if not port.isdigit():
            raise UsageError("--listen expects HOST:PORT")
        try:
            serve_tcp(host or "127.0.0.1", int(port), emulator)
        except KeyboardInterrupt:
            pass
    else:
        serve(sys.stdin.buffer, sys.stdout.buffer, emulator)
    return 0


def cmd_calibrate(args) -> int:
    from .calibration import build_instrument_calibration, read_records
    from .kinematics import InstrumentCalibration

    records = read_records(_existing(args.records))
    calib, report = build_instrument_calibration(records, instrument_id=args.instrument_id)
    sys.stdout.write(report.text())
    if args.out:
        calib.save(args.out)
        InstrumentCalibration.load(args.out)
    if args.report:
        Path(args.report).write_text(report.dumps())
        json.loads(Path(args.report).read_text())
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import (ExperimentAborted, RECORD_COLUMNS, build_schedule, compute_statistics,
                             export_results, read_stats, run_experiment, start_session)
    from .stereo import StereoRig, default_rig

    calib = _load_calibration(args.calib)
    rig = StereoRig.load(_existing(args.rig)) if args.rig else default_rig()
    config = _load_emulator_config(args.config, None)
    if args.repeats < 0:
        raise UsageError("--repeats must be >= 0")
    seed = _seed(args, config.seed)
    config = replace(config, seed=seed)
    emulator, client = start_session(config, calib)
    schedule = build_schedule(calib, args.repeats, include_yaw=not args.pitch_only)
    try:
        records = run_experiment(client, emulator, rig, schedule, calib, config, seed=seed,
                                 occlusion=not args.no_occlusion, overshoot_deg=args.overshoot)
    except ExperimentAborted as exc:
        stats = compute_statistics(exc.records, calib)
        export_results(exc.records, stats, Path(args.out) / "partial", figures=False)
        log.error("%s (partial results in %s)", exc, Path(args.out) / "partial")
        return 1
    stats = compute_statistics(records, calib)
    written = export_results(records, stats, args.out, figures=not args.no_figures)
    # re-read what was written before reporting success
    read_stats(Path(args.out) / "stats.json")
    with open(Path(args.out) / "records.csv") as fh:
        if tuple(next(csv.reader(fh))) != RECORD_COLUMNS:
            raise BenchError("records.csv header mismatch")
    print(f"records {stats.n_records}  excluded {stats.n_excluded} {stats.excluded_by_view}")
    print(f"pitch  direction RMSE {stats.pitch.direction_rmse:.3f} deg  model RMSE {stats.pitch.model_rmse:.3f}  "
          f"max std {stats.pitch.max_std:.3f}")
    print(f"yaw    direction RMSE {stats.yaw.direction_rmse:.3f} deg  model RMSE {stats.yaw.model_rmse:.3f}  "
          f"max std {stats.yaw.max_std:.3f}")
    for p in written:
        log.info("wrote %s", p)
    return 0


def cmd_fit_backlash(args) -> int:
    from .evaluation import fit_backlash, read_stats

    stats = read_stats(_existing(args.stats))
    est = fit_backlash(stats, _load_calibration(args.calib))
    print(f"{'axis':<5}{'disc [deg]':>12}{'tip offset':>12}{'poses':>7}")
    for a, e in est.items():
        print(f"{a:<5}{e.disc_deg:>12.3f}{e.tip_offset_deg:>12.3f}{e.n_poses:>7d}")
    if args.out:
        Path(args.out).write_text(json.dumps({a: vars(e) for a, e in est.items()}, indent=2) + "\n")
    return 0


def cmd_fixtures(args) -> int:
    from .fixtures import write_fixtures

    for p in write_fixtures(args.out):
        print(p)
    return 0


# -- dispatch --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="endowrist-bench", description="Instrument twin, calibration and evaluation bench.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("emulate", help="serve the controller twin over stdio or TCP")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--stdio", action="store_true", help="serve stdin/stdout (default)")
    mode.add_argument("--listen", metavar="HOST:PORT")
    p.add_argument("--config", help="emulator config JSON")
    p.add_argument("--calib", help="calibration JSON (default: from config or the shipped fixture)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("calibrate", help="station records CSV -> calibration JSON + report")
    p.add_argument("--records", required=True)
    p.add_argument("--out", help="calibration JSON to write")
    p.add_argument("--report", help="report JSON to write")
    p.add_argument("--instrument-id", default="large_needle_driver")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="run the repeatability/hysteresis experiment")
    p.add_argument("--calib", help="calibration JSON (default: shipped fixture)")
    p.add_argument("--rig", help="stereo rig JSON (default: built-in rig)")
    p.add_argument("--config", help="emulator config JSON (default: shipped reproduction config)")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--overshoot", type=float, default=25.0, help="approach overshoot, disc deg")
    p.add_argument("--pitch-only", action="store_true")
    p.add_argument("--no-occlusion", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fit-backlash", help="stats JSON -> per-axis disc backlash estimates")
    p.add_argument("--stats", required=True)
    p.add_argument("--calib")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit_backlash)

    p = sub.add_parser("fixtures", help="write the shipped fixture files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixtures)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BenchError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
