"""Command-line experiment runner.

Subcommands write one CSV plus a JSON manifest sidecar (``<out>.json``).
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import sys
import time

import numpy as np

from . import experiments as ex
from .detector import DetectorConfig
from .exceptions import (ConfigError, DomainError, EigenDecompositionError,
                         NotPositiveDefinite, RankDeficient)
from .measures import MeasureKind

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

MEASURES = [k.value for k in MeasureKind]


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _int_list(text):
    try:
        vals = [int(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        return ex.parse_float_list(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="flat key = value scenario file")
    common.add_argument("--seed", type=_u64, metavar="U64")
    common.add_argument("--trials", type=_positive_int, metavar="N",
                        help="Monte Carlo trials per point")
    common.add_argument("--pf", type=float, metavar="REAL",
                        help="false-alarm probability (default 1e-2)")
    common.add_argument("--measure", action="append", choices=MEASURES,
                        help="geometric measure; repeat for several")
    common.add_argument("--enhanced", action="store_true",
                        help="use the enhanced (dimension-reduced) detector")
    common.add_argument("--n", type=_int_list, metavar="INT",
                        help="enhanced dimension, or a comma list")
    common.add_argument("--scr-db", type=_float_list, metavar="LIST",
                        help="comma-separated SCR grid in dB")
    common.add_argument("--out", metavar="PATH", help="output CSV path")

    p = argparse.ArgumentParser(prog="geocfar",
                                description="Matrix CFAR detection experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("pd-sweep", parents=[common],
                   help="detection probability versus SCR")
    o = sub.add_parser("ordering", parents=[common],
                       help="normalized statistics of band-limited targets")
    o.add_argument("--bandwidths", type=_int_list, default=[1, 2, 3, 4, 5],
                   metavar="LIST")
    o.add_argument("--reference", choices=["true", "clutter-component"],
                   default="true")
    e = sub.add_parser("enhance-study", parents=[common],
                       help="enhanced detector Pd across n and bandwidth")
    e.add_argument("--bandwidths", type=_int_list, default=[1, 2, 3],
                   metavar="LIST")
    a = sub.add_parser("analyze", parents=[common],
                       help="extremal spectra of the adjusted potentials")
    a.add_argument("--m", type=_positive_int, default=None,
                   help="spectrum length (default: number of pulses)")
    sub.add_parser("calibrate", parents=[common],
                   help="calibrate thresholds and check the false-alarm rate")
    return p


def _resolve(args):
    cfg = ex.load_config(args.config) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.scr_db is not None:
        cfg["scr_db"] = ",".join(repr(v) for v in args.scr_db)
    if args.pf is not None:
        cfg["false_alarm_probability"] = args.pf
    scenario = ex.scenario_from_config(cfg)
    trials = args.trials or cfg.get("trials", ex.DESK_TRIALS)
    measures = args.measure or (
        [v.strip() for v in cfg["measure"].split(",")] if "measure" in cfg
        else ["rd", "kld", "ldd"])
    enhanced = args.enhanced or ex.parse_bool(cfg.get("enhanced", "false"))
    if args.n is not None:
        n_list = args.n
    elif "n" in cfg:
        n_list = _int_list(cfg["n"])
    else:
        n_list = None
    return scenario, cfg, trials, measures, enhanced, n_list


def _detectors(measures, enhanced, n_list, pf, cal_trials, guard):
    out = []
    for kind in measures:
        if enhanced:
            if not n_list:
                raise ConfigError("--enhanced needs --n")
            out += [DetectorConfig(kind=kind, enhanced=True, n=n, pf=pf,
                                   calibration_trials=cal_trials,
                                   guard_cells=guard) for n in n_list]
        else:
            out.append(DetectorConfig(kind=kind, pf=pf,
                                      calibration_trials=cal_trials,
                                      guard_cells=guard))
    return out


def run(argv=None):
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    scenario, cfg, trials, measures, enhanced, n_list = _resolve(args)
    cal = cfg.get("calibration_trials")
    dets = _detectors(measures, enhanced, n_list, scenario.pf, cal,
                      scenario.guard_cells)
    manifest = ex.RunManifest(command=args.command, scenario=scenario,
                              detectors=dets, trials_per_point=trials,
                              calibration_trials=cal)
    cmd = args.command
    if cmd == "pd-sweep":
        rows = ex.run_pd_sweep(manifest)
    elif cmd == "ordering":
        manifest.targets = ex.bandlimited_targets(args.bandwidths)
        manifest.extra["reference"] = args.reference
        rows = ex.run_measure_ordering(manifest, reference=args.reference)
    elif cmd == "enhance-study":
        manifest.targets = ex.bandlimited_targets(args.bandwidths)
        manifest.n_grid = n_list or [1, 2, 3]
        rows = ex.run_enhancement_study(manifest)
    elif cmd == "analyze":
        m = args.m or scenario.num_pulses
        scr = [10.0 ** (d / 10.0) for d in scenario.scr_grid_db]
        manifest.extra.update(m=m, scr_linear=scr)
        rows = ex.run_analysis_report(measures, m, scr)
    else:
        rows = ex.run_false_alarm_check(manifest)
    out = args.out or f"{cmd}.csv"
    manifest.outputs = [str(out)]
    manifest.wall_time = time.perf_counter() - start
    ex.write_csv(rows, out)
    ex.write_manifest(manifest, out)
    return out


def main(argv=None):
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            out = run(argv)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotPositiveDefinite, RankDeficient, EigenDecompositionError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
