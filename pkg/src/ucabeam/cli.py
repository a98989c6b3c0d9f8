"""Command-line front end.

Subcommands::

    synth        scenario file -> CFR matrix file
    padp         CFR -> PADP CSV (--method cbf|fibf)
    estimate     CFR -> path-estimate CSV, residual summary and optional per-iteration grids
    sweep-rp     residual power rate over bandwidth x distance x elevation
    beampattern  single-path CBF/FIBF peaks and patterns versus distance

Every failure exits nonzero after one line on stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import formats
from .beamform import SteeringConfig, cbf_padp, fibf_padp
from .estimator import CancellationConfig, estimate_paths, rp_sweep
from .numerics import DelayGrid
from .scene import PathTruth, ScattererLocation, UcaGeometry, path_response

log = logging.getLogger("ucabeam")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list:
    try:
        values = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty number list")
    return values


def _steering_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--zero-pad", type=int, default=None, help="delay zero-padding factor K/L (default 4)")
    p.add_argument("--azimuths", type=int, default=None, help="azimuth grid size (default 720)")
    p.add_argument("--mode-cap", type=int, default=None, help="highest phase mode M (default: automatic)")
    p.add_argument("--window", choices=("hann", "hamming", "none"), default=None,
                   help="taper across frequency (default hann)")


def _steering(args, base: Optional[SteeringConfig] = None) -> SteeringConfig:
    base = base or SteeringConfig()
    changes = {}
    if args.zero_pad is not None:
        changes["zero_pad_factor"] = args.zero_pad
    if args.azimuths is not None:
        changes["azimuth_count"] = args.azimuths
    if args.mode_cap is not None:
        changes["mode_cap"] = args.mode_cap
    if args.window is not None:
        changes["window"] = args.window
    return replace(base, **changes)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ucabeam", description="Near-field UCA beamspace channel estimation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="synthesize a CFR matrix from a scenario file")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None, help="noise seed (overrides the scenario)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("padp", help="power-angle-delay profile of a CFR file")
    p.add_argument("cfr")
    p.add_argument("--method", choices=("cbf", "fibf"), default="fibf")
    p.add_argument("--floor", type=float, default=-40.0, help="dB clipping floor (default -40)")
    _steering_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="successive-cancellation path estimation")
    p.add_argument("cfr")
    p.add_argument("--scenario", default=None, help="take estimator settings from this scenario file")
    p.add_argument("--eta", type=float, default=None, help="dynamic range in dB (default 40)")
    p.add_argument("--eta-t", type=float, default=None, help="label threshold in dB (default 45)")
    p.add_argument("--max-iterations", type=int, default=None)
    _steering_args(p)
    p.add_argument("--trace-dir", default=None, help="write per-iteration CIR and PADP CSVs here")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep-rp", help="residual power rate table for single-path scenes")
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--elements", type=int, default=720)
    p.add_argument("--fc", type=float, default=29e9, help="centre frequency in Hz")
    p.add_argument("--points", type=int, default=750)
    p.add_argument("--bandwidths", type=_floats, default=[0.4e9, 1e9, 2e9, 3e9], help="Hz, comma separated")
    p.add_argument("--distances", type=_floats, default=[3.0, 5.0, 10.0, 30.0], help="m, comma separated")
    p.add_argument("--elevations", type=_floats, default=[90.0, 120.0], help="deg, comma separated")
    p.add_argument("--azimuth", type=float, default=180.0, help="path azimuth in deg")
    p.add_argument("--eta-t", type=float, default=None)
    _steering_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("beampattern", help="single-path unit patterns versus distance")
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--elements", type=int, default=720)
    p.add_argument("--frequency", type=float, default=29e9)
    p.add_argument("--distances", type=_floats, default=[3, 5, 10, 20, 30, 50, 70, 193])
    p.add_argument("--elevation", type=float, default=90.0)
    p.add_argument("--azimuth", type=float, default=180.0)
    p.add_argument("--azimuths", type=int, default=720)
    p.add_argument("--mode-cap", type=int, default=None)
    p.add_argument("--patterns", default=None, help="also write full patterns (long format) here")
    p.add_argument("--out", required=True)
    return parser


def _cmd_synth(args) -> None:
    sc = formats.load_scenario(args.scenario)
    channel = sc.synthesize(args.seed)
    formats.write_cfr(channel, args.out)
    log.info("wrote %d x %d matrix to %s", channel.values.shape[0], channel.values.shape[1], args.out)


def _cmd_padp(args) -> None:
    channel = formats.read_cfr(args.cfr)
    config = _steering(args)
    padp = (cbf_padp if args.method == "cbf" else fibf_padp)(channel, config)
    formats.export_padp(padp, args.out, args.floor)


def _estimation_config(args) -> CancellationConfig:
    config = CancellationConfig()
    if args.scenario is not None:
        config = formats.load_scenario(args.scenario).estimator.to_config()
    changes = {"steering": _steering(args, config.steering)}
    if args.eta is not None:
        changes["dynamic_range_db"] = args.eta
    if args.eta_t is not None:
        changes["label_threshold_db"] = args.eta_t
    if args.max_iterations is not None:
        changes["max_iterations"] = args.max_iterations
    if args.trace_dir is not None:
        changes["keep_snapshots"] = True
    return replace(config, **changes)


def _cmd_estimate(args) -> None:
    channel = formats.read_cfr(args.cfr)
    config = _estimation_config(args)
    estimates, trace = estimate_paths(channel, config)
    formats.export_estimates(estimates, args.out)
    out = Path(args.out)
    formats.export_trace_summary(trace, out.with_name(out.stem + "_trace.csv"))
    if args.trace_dir is not None:
        d = Path(args.trace_dir)
        d.mkdir(parents=True, exist_ok=True)
        grid = channel.grid
        delays = DelayGrid.for_spectrum(grid.count, grid.spacing, config.steering.zero_pad_factor).delays
        formats.export_cir(trace.initial_cir, delays, d / "cir_0.csv")
        for rec in trace.records:
            q = rec.estimate.iteration
            formats.export_padp(rec.padp, d / f"padp_{q}.csv")
            formats.export_cir(rec.cir, delays, d / f"cir_{q}.csv")
    log.info("%d paths; stop: %s", len(estimates), trace.stop_reason)


def _cmd_sweep_rp(args) -> None:
    geom = UcaGeometry(args.radius, args.elements)
    config = CancellationConfig(steering=_steering(args))
    if args.eta_t is not None:
        config = replace(config, label_threshold_db=args.eta_t)
    points = rp_sweep(geom, args.fc, args.bandwidths, args.distances,
                      [math.radians(e) for e in args.elevations], config, args.points,
                      math.radians(args.azimuth % 360.0))
    rows = [[repr(p.bandwidth), repr(p.distance), formats._num(math.degrees(p.elevation)),
             formats._num(p.rate, 6)] for p in points]
    formats.export_table(["bandwidth_hz", "distance_m", "elevation_deg", "rp_percent"], rows, args.out)


def _cmd_beampattern(args) -> None:
    from .beamform import unit_patterns

    geom = UcaGeometry(args.radius, args.elements)
    az_axis = np.degrees(2.0 * np.pi * np.arange(args.azimuths) / args.azimuths)
    summary, long_rows = [], []
    for d in args.distances:
        loc = ScattererLocation(d, math.radians(args.elevation), math.radians(args.azimuth % 360.0))
        h = path_response(geom, [args.frequency], PathTruth(1.0, 0.0, loc))[:, 0]
        cbf, fibf = unit_patterns(geom, args.frequency, h, args.azimuths, args.mode_cap)
        with np.errstate(divide="ignore"):
            cbf_db, fibf_db = 20 * np.log10(np.abs(cbf)), 20 * np.log10(np.abs(fibf))
        summary.append([repr(float(d)), formats._num(cbf_db.max(), 4), formats._num(fibf_db.max(), 4),
                        formats._num(az_axis[int(np.argmax(fibf_db))], 4)])
        if args.patterns:
            long_rows += [[repr(float(d)), formats._num(a, 4), formats._num(c, 4), formats._num(f, 4)]
                          for a, c, f in zip(az_axis, cbf_db, fibf_db)]
    formats.export_table(["distance_m", "cbf_peak_db", "fibf_peak_db", "fibf_peak_azimuth_deg"],
                         summary, args.out)
    if args.patterns:
        formats.export_table(["distance_m", "azimuth_deg", "cbf_db", "fibf_db"], long_rows, args.patterns)


_COMMANDS = {"synth": _cmd_synth, "padp": _cmd_padp, "estimate": _cmd_estimate,
             "sweep-rp": _cmd_sweep_rp, "beampattern": _cmd_beampattern}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except (ValueError, OSError, IndexError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
