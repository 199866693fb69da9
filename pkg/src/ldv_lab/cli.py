"""Command-line entry point.

    ldv-lab simulate  --config FILE --scenario NAME [--seed N] --out DIR [--format csv|json]
    ldv-lab calibrate [--seed N] --out DIR
    ldv-lab compare   [--seed N] --out DIR
    ldv-lab spectrum  --config FILE --scenario NAME --channel ldv|accel --out FILE

Exit status is 0 when every tolerance check passes, 1 when a check fails and
2 on a configuration or runtime error.
"""
from __future__ import annotations

import argparse
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import config, harness, report
from .errors import LDVError
from .rng import RandomSeed

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_ERROR = 2

LDV = "ldv"
ACCEL = "accel"


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "scenario"


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args) -> harness.Scenario:
    scenarios = config.load_scenarios(args.config)
    if args.scenario not in scenarios:
        raise LDVError(f"no scenario {args.scenario!r} in {args.config}; have {sorted(scenarios)}")
    s = scenarios[args.scenario]
    if getattr(args, "seed", None) is not None:
        s = replace(s, seed=RandomSeed(args.seed, s.seed.stream_id, s.seed.path))
    return s


def _verdict(ok: bool) -> str:
    return "pass" if ok else "FAIL"


def _print_comparisons(rows) -> None:
    print(f"{'component':<18}{'truth':>9}{'ldv':>11}{'accel':>11}{'ldv err':>10}{'acc err':>10}")
    for r in rows:
        print(
            f"{r.component:<18}{r.truth_frequency:>9.3f}{r.ldv_frequency:>11.4f}{r.accel_frequency:>11.4f}"
            f"{r.ldv_error:>+10.4f}{r.accel_error:>+10.4f}  {_verdict(r.passed)}"
        )


def cmd_simulate(args) -> int:
    s = _scenario(args)
    result = harness.simulate(s)
    path = _outdir(args.out) / f"{_slug(s.name)}.{args.format}"
    report.emit_report([result.report], args.format, path)
    _print_comparisons([result.report])
    print(f"wrote {path}")
    return EXIT_OK if result.report.passed else EXIT_FAILED_CHECK


def cmd_calibrate(args) -> int:
    rows = harness.run_calibration_table(RandomSeed(args.seed))
    out = _outdir(args.out)
    for fmt in report.FORMATS:
        report.emit_report(rows, fmt, out / f"calibration.{fmt}")
    print(f"{'applied':>9}{'displacement':>14}{'indicated':>12}{'tolerance':>11}")
    for r in rows:
        print(
            f"{r.applied_frequency:>9.2f}{r.applied_displacement:>14.4e}{r.indicated_frequency:>12.4f}"
            f"{r.tolerance:>11.2f}  {_verdict(r.passed)}"
        )
    print(f"wrote {out / 'calibration.csv'} and {out / 'calibration.json'}")
    return EXIT_OK if harness.all_passed(rows) else EXIT_FAILED_CHECK


def cmd_compare(args) -> int:
    rows = harness.run_component_suite(RandomSeed(args.seed))
    out = _outdir(args.out)
    for fmt in report.FORMATS:
        report.emit_report(rows, fmt, out / f"comparison.{fmt}")
    _print_comparisons(rows)
    print(f"wrote {out / 'comparison.csv'} and {out / 'comparison.json'}")
    return EXIT_OK if harness.all_passed(rows) else EXIT_FAILED_CHECK


def cmd_spectrum(args) -> int:
    s = _scenario(args)
    result = harness.simulate(s)
    if args.channel == LDV:
        spectrum, peak, tolerance = result.ldv_spectrum, result.ldv_peak, s.tolerance
    else:
        spectrum, peak, tolerance = result.accel_spectrum, result.accel_peak, s.accel_tolerance
    out = Path(args.out)
    if out.parent != Path("."):
        out.parent.mkdir(parents=True, exist_ok=True)
    report.emit_spectrum_data(spectrum, out)
    ok = s.truth_frequency is None or abs(peak.frequency - s.truth_frequency) <= tolerance
    print(f"{args.channel} peak {peak.frequency:.4f} Hz  {_verdict(ok)}")
    print(f"wrote {out}")
    return EXIT_OK if ok else EXIT_FAILED_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldv-lab", description="Heterodyne laser Doppler vibrometer simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=_u64, default=None, help="override the scenario seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=report.FORMATS, default=report.CSV)
    p.set_defaults(func=cmd_simulate)

    for name, func, text in (
        ("calibrate", cmd_calibrate, "run the 11-point calibration sweep"),
        ("compare", cmd_compare, "run the automotive component suite"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--seed", type=_u64, default=0)
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=func)

    p = sub.add_parser("spectrum", help="write one channel's spectrum as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--channel", choices=(LDV, ACCEL), default=LDV)
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LDVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
