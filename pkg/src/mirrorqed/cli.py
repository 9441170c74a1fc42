"""Command-line front end.

Subcommands: spectrum, sweep2d, power-sweep (config-driven runs that write
delimited text plus a manifest), calibrate-velocity, fit (single-atom fit of
a trace file), and splitting (anti-crossing extraction from a dip table).

Exit codes: 0 success, 1 config error, 2 solver error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import (
    ConfigError,
    InsufficientDipsError,
    MirrorQEDError,
    SolverError,
    VelocityInconsistencyError,
)
from .observables import (
    DipReport,
    ReflectionPoint,
    fit_single_atom,
    splitting_from_dips,
)
from .sweep import (
    ExperimentConfig,
    calibrate_velocity,
    emit,
    run_power_sweep,
    run_spectrum,
    run_sweep2d,
    saturation_knee,
)
from .units import TWO_PI


class _Parser(argparse.ArgumentParser):
    # route usage errors through the config-error exit code instead of
    # argparse's default SystemExit(2)
    def error(self, message):
        raise ConfigError(message)


def _add_run_arguments(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("config", help="JSON experiment configuration")
    sp.add_argument(
        "--output-dir", default=None, help="override the config output directory"
    )
    sp.add_argument(
        "--stem", default=None, help="override the config output file stem"
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="mirrorqed",
        description=(
            "Simulate microwave reflection off transmon atoms in front of a "
            "mirror-terminated transmission line."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("spectrum", help="1D probe-frequency trace")
    _add_run_arguments(sp)
    sp.set_defaults(func=_cmd_spectrum)

    sp = sub.add_parser("sweep2d", help="probe frequency x atom tuning map")
    _add_run_arguments(sp)
    sp.set_defaults(func=_cmd_sweep2d)

    sp = sub.add_parser("power-sweep", help="probe frequency x probe power map")
    _add_run_arguments(sp)
    sp.set_defaults(func=_cmd_power_sweep)

    sp = sub.add_parser(
        "calibrate-velocity", help="phase velocity from resonance-null frequencies"
    )
    sp.add_argument("--length-mm", type=float, required=True)
    sp.add_argument(
        "--node",
        action="append",
        required=True,
        metavar="GHZ:ORDER",
        help="node frequency in GHz and odd quarter-wave order, repeatable",
    )
    sp.set_defaults(func=_cmd_calibrate)

    sp = sub.add_parser("fit", help="fit the single-atom model to a trace file")
    sp.add_argument("trace", help="delimited trace file")
    sp.add_argument(
        "--mode", choices=("auto", "magnitude", "complex"), default="auto"
    )
    sp.add_argument("--prominence", type=float, default=0.02)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("splitting", help="anti-crossing splitting from a dip table")
    sp.add_argument("dips", help="dip table written by sweep2d")
    sp.set_defaults(func=_cmd_splitting)

    return parser


def _load_trace(path: str) -> list[ReflectionPoint]:
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.size == 0:
        raise ConfigError(f"{path}: trace file is empty")
    if data.shape[1] >= 3:
        r = data[:, 1] + 1j * data[:, 2]
    elif data.shape[1] == 2:
        r = data[:, 1].astype(complex)
    else:
        raise ConfigError(
            f"{path}: expected columns (freq_GHz, re_r, im_r, ...) or "
            "(freq_GHz, abs_r)"
        )
    return [
        ReflectionPoint(omega_p=f * TWO_PI * 1e9, r=complex(val))
        for f, val in zip(data[:, 0], r)
    ]


def _load_dip_table(path: str) -> tuple[list[float], list[list[DipReport]]]:
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.size == 0:
        raise InsufficientDipsError(f"{path}: dip table is empty")
    if data.shape[1] < 4:
        raise ConfigError(
            f"{path}: need a 2D dip table with columns "
            "(tune, center_GHz, depth, fwhm_MHz)"
        )
    tune_values: list[float] = []
    dip_lists: list[list[DipReport]] = []
    for row in data:
        tune = float(row[0])
        if not tune_values or tune != tune_values[-1]:
            tune_values.append(tune)
            dip_lists.append([])
        dip_lists[-1].append(
            DipReport(center_ghz=float(row[1]), depth=float(row[2]),
                      fwhm_mhz=float(row[3]))
        )
    return tune_values, dip_lists


def _print_paths(paths) -> None:
    for path in paths:
        print(f"wrote {path}")


def _cmd_spectrum(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    result = run_spectrum(config)
    _print_paths(emit(result, directory=args.output_dir, stem=args.stem))
    for dip in result.dips[0]:
        print(
            f"dip: center_GHz={dip.center_ghz:.9g} depth={dip.depth:.6g} "
            f"fwhm_MHz={dip.fwhm_mhz:.6g}"
        )
    return 0


def _cmd_sweep2d(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    result = run_sweep2d(config)
    _print_paths(emit(result, directory=args.output_dir, stem=args.stem))
    try:
        splitting, tune = splitting_from_dips(result.tune_axis, result.dips)
    except InsufficientDipsError as exc:
        print(f"no splitting extracted: {exc}")
    else:
        print(
            f"splitting_MHz = {splitting / (TWO_PI * 1e6):.9g} at "
            f"{result.tune_label} = {tune:.9g}"
        )
    return 0


def _cmd_power_sweep(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    result = run_power_sweep(config)
    _print_paths(emit(result, directory=args.output_dir, stem=args.stem))
    try:
        knee_db, plateau = saturation_knee(result)
    except (SolverError, ValueError) as exc:
        print(f"no saturation knee located: {exc}")
    else:
        print(f"saturation_knee_db = {knee_db:.9g}")
        print(f"plateau_splitting_MHz = {plateau / (TWO_PI * 1e6):.9g}")
    return 0


def _cmd_calibrate(args) -> int:
    nodes = []
    for raw in args.node:
        try:
            freq_text, order_text = raw.split(":")
            nodes.append((float(freq_text), int(order_text)))
        except ValueError as exc:
            raise ConfigError(
                f"--node expects GHZ:ORDER (e.g. 4.745:7), got {raw!r}"
            ) from exc
    velocity, spread = calibrate_velocity(nodes, args.length_mm)
    print(f"v_m_per_s = {velocity:.9g}")
    print(f"max_rel_spread = {spread:.6g}")
    return 0


def _cmd_fit(args) -> int:
    trace = _load_trace(args.trace)
    omega10, gamma_eff, gamma_phi = fit_single_atom(
        trace, mode=args.mode, prominence=args.prominence
    )
    print(f"f10_GHz = {omega10 / (TWO_PI * 1e9):.9g}")
    print(f"Gamma_over_2pi_MHz = {gamma_eff / (TWO_PI * 1e6):.9g}")
    print(f"gamma_phi_over_2pi_MHz = {gamma_phi / (TWO_PI * 1e6):.9g}")
    return 0


def _cmd_splitting(args) -> int:
    tune_values, dip_lists = _load_dip_table(args.dips)
    splitting, tune = splitting_from_dips(tune_values, dip_lists)
    print(f"splitting_MHz = {splitting / (TWO_PI * 1e6):.9g}")
    print(f"at_tune = {tune:.9g}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, InsufficientDipsError, VelocityInconsistencyError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (MirrorQEDError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
