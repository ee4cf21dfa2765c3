from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from cavity_config import ExperimentConfig, load_experiment_config
from cavity_detection import AnalyzerSettings
from cavity_errors import QuadratureError
from cavity_fitting import fit_lorentzian
from cavity_reports import (
    calibration_report,
    calibration_summary,
    cavity_parameters,
    fit_summary,
    format_block,
    format_calibration_csv,
    format_sensitivity_csv,
    format_sensitivity_line,
    generate_spectrum,
    parse_sweep,
    sensitivity_table,
    to_json,
)
from cavity_spectrum_io import format_spectrum_csv, read_spectrum_file

logger = logging.getLogger("cavity_cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_IO = 3


class _Color:
    RESET = "\x1b[0m"
    BOLD = "\x1b[1m"

    RED = "\x1b[31m"
    GREEN = "\x1b[32m"
    YELLOW = "\x1b[33m"
    BLUE = "\x1b[34m"


def _use_color() -> bool:
    if os.getenv("NO_COLOR"):
        return False
    term = os.getenv("TERM", "").lower()
    if term in ("dumb", ""):
        return False
    return sys.stderr.isatty()


def _c(text: str, color: str) -> str:
    if not _use_color():
        return text
    return f"{color}{text}{_Color.RESET}"


def _status_badge(status: str) -> str:
    s = status.upper()
    if s == "OK":
        return _c(f"[{s}]", _Color.GREEN + _Color.BOLD)
    if s == "WARN":
        return _c(f"[{s}]", _Color.YELLOW + _Color.BOLD)
    if s == "FAIL":
        return _c(f"[{s}]", _Color.RED + _Color.BOLD)
    return _c(f"[{s}]", _Color.BLUE + _Color.BOLD)


def _status(status: str, message: str) -> None:
    # Status lines go to stderr; stdout carries only data.
    print(f"{_status_badge(status)} {message}", file=sys.stderr)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="")
        _status("OK", f"wrote {output}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_params(config: ExperimentConfig, args: argparse.Namespace) -> int:
    report = cavity_parameters(config)
    _emit(format_block(report.values), args.output)
    for flag in report.flags:
        _status("WARN", flag)
    return EXIT_OK


def cmd_sensitivity(config: ExperimentConfig, args: argparse.Namespace) -> int:
    if args.sweep:
        _emit(format_sensitivity_csv(sensitivity_table(config, parse_sweep(args.sweep))), args.output)
        return EXIT_OK
    if args.freq < 0:
        raise ValueError("frequency must be >= 0")
    f, dx, fm = sensitivity_table(config, [args.freq])
    _emit(format_sensitivity_line(float(f[0]), float(dx[0]), float(fm[0])), args.output)
    return EXIT_OK


def _analyzer_settings(config: ExperimentConfig, args: argparse.Namespace) -> AnalyzerSettings:
    base = config.analyzer
    center = args.center if args.center is not None else (base.f_start + base.f_stop) / 2
    span = args.span if args.span is not None else base.f_stop - base.f_start
    return AnalyzerSettings.centered(
        center,
        span,
        rbw=args.rbw if args.rbw is not None else base.rbw,
        n_averages=args.averages if args.averages is not None else base.n_averages,
        n_points=args.points if args.points is not None else base.n_points,
        seed=base.seed,
    )


def cmd_spectrum(config: ExperimentConfig, args: argparse.Namespace) -> int:
    settings = _analyzer_settings(config, args)
    spectrum, displacement = generate_spectrum(config, args.kind, settings, analytic=args.analytic)
    _emit(format_spectrum_csv(spectrum, displacement), args.output)
    peak = float(spectrum.values.max())
    _status(
        "OK",
        f"{args.kind} spectrum: {len(spectrum)} bins, "
        f"{'analytic' if args.analytic else f'seed {settings.seed}'}, peak {peak:.4g} x shot noise",
    )
    return EXIT_OK


def _amplitudes(text: str) -> list[float]:
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise ValueError(f"amplitudes must be comma-separated numbers, got {text!r}") from None


def cmd_calibrate(config: ExperimentConfig, args: argparse.Namespace) -> int:
    report = calibration_report(config, _amplitudes(args.amplitudes), args.freq)
    _emit(format_calibration_csv(report), args.output)
    summary = calibration_summary(report)
    _status("OK", f"log-log slope {summary['loglog_slope']:.6f} over {summary['points']} points")
    _status(
        "OK",
        f"FM shot floor {1e3 * report.shot_floor_from_points:.4g} mHz/sqrt(Hz) from the points, "
        f"{1e3 * report.shot_floor_fm:.4g} mHz/sqrt(Hz) from the model",
    )
    nonlinear = [p.fm_amplitude for p, m in zip(report.points, report.intensity_modulations) if m is None]
    if nonlinear:
        _status("WARN", f"{len(nonlinear)} amplitude(s) outside the mode-cleaner linear regime")
    return EXIT_OK


def cmd_fit(config: ExperimentConfig | None, args: argparse.Namespace) -> int:
    spectrum, _ = read_spectrum_file(args.input)
    result = fit_lorentzian(spectrum, weights=args.weights)
    summary = fit_summary(result, args.weights)
    _emit(format_block(summary), args.output)
    if args.json:
        Path(args.json).write_text(to_json(summary, indent=2) + "\n", encoding="utf-8")
    if not result.converged:
        _status("FAIL", f"fit did not converge after {result.iterations} iterations")
        return EXIT_NOT_CONVERGED
    _status("OK", f"Q = {result.model.quality_factor:.6g}, f_M = {result.model.center:.10g} Hz")
    return EXIT_OK


COMMANDS = {
    "params": cmd_params,
    "sensitivity": cmd_sensitivity,
    "spectrum": cmd_spectrum,
    "calibrate": cmd_calibrate,
    "fit": cmd_fit,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("--output", default=None, help="Write data here instead of stdout.")
    io.add_argument("--verbose", action="store_true", help="Debug logging on stderr.")
    common = argparse.ArgumentParser(add_help=False, parents=[io])
    common.add_argument(
        "--config",
        default=None,
        help="Experiment config file (default: $CAVITY_SENSE_CONFIG, then ./experiment.cfg, "
        "then built-in defaults).",
    )

    p = argparse.ArgumentParser(
        prog="cavity-sense",
        description="High-finesse cavity displacement sensor: sensitivity, spectra, calibration, fits.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("params", parents=[common], help="Derived cavity and resonator quantities.")

    sens = sub.add_parser("sensitivity", parents=[common], help="Shot-noise displacement floor.")
    which = sens.add_mutually_exclusive_group(required=True)
    which.add_argument("--freq", type=float, help="Single analysis frequency in Hz.")
    which.add_argument("--sweep", help="f0:f1:n frequency sweep, CSV output.")

    spectrum = sub.add_parser("spectrum", parents=[common], help="Normalized spectrum CSV.")
    spectrum.add_argument("kind", choices=["thermal", "excitation"])
    spectrum.add_argument("--rbw", type=float, default=None, help="Resolution bandwidth in Hz.")
    spectrum.add_argument("--averages", type=int, default=None)
    spectrum.add_argument("--span", type=float, default=None, help="Span in Hz.")
    spectrum.add_argument("--center", type=float, default=None, help="Center in Hz (default f_M).")
    spectrum.add_argument("--points", type=int, default=None)
    spectrum.add_argument(
        "--seed", type=int, default=None, help="Trace seed (overrides $CAVITY_SENSE_SEED)."
    )
    spectrum.add_argument("--analytic", action="store_true", help="Skip the averaging noise.")

    cal = sub.add_parser("calibrate", parents=[common], help="FM calibration curve.")
    cal.add_argument("--amplitudes", required=True, help="Comma-separated FM amplitudes in Hz.")
    cal.add_argument("--freq", type=float, default=None, help="Measurement frequency in Hz.")

    fit = sub.add_parser("fit", parents=[io], help="Lorentzian fit of a spectrum CSV.")
    fit.add_argument("--input", required=True, help="Spectrum CSV from `spectrum`.")
    fit.add_argument("--model", choices=["lorentzian"], default="lorentzian")
    fit.add_argument("--weights", choices=["none", "chi2"], default="none")
    fit.add_argument("--json", default=None, help="Also write the result as JSON here.")
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        # fit works from the CSV alone and takes no --config.
        config = (
            load_experiment_config(args.config, seed=getattr(args, "seed", None))
            if "config" in args
            else None
        )
        return COMMANDS[args.command](config, args)
    except OSError as exc:
        _status("FAIL", f"I/O error: {exc}")
        return EXIT_IO
    except QuadratureError as exc:
        _status("FAIL", str(exc))
        return EXIT_NOT_CONVERGED
    except ValueError as exc:
        _status("FAIL", str(exc))
        return EXIT_INVALID


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
