"""Subcommand CLI tying the simulator and the locator together.

Exit codes: 0 when a source is located, 2 when the pipeline ends without a
source (no candidates, unlocatable, or an empty detection list), 1 on any
other error.
"""

import argparse
import json
import sys

from . import io
from .config import PipelineConfig
from .errors import NoCandidates, PipelineError, Unlocatable
from .locator import locate
from .simulator import natural_modes, solve_equilibrium
from .spectrum import window_spectra


def _failure_payload(config: PipelineConfig, verdict: str) -> dict:
    return {
        "config_echo": config.to_mapping(),
        "candidates_hz": [],
        "detections": [],
        "diagnostics": {},
        "verdict": verdict,
        "elapsed_s": None,
    }


def _cmd_locate(args) -> int:
    config = io.load_config(args.config) if args.config else PipelineConfig()
    window = io.load_pmu_csv(args.input)
    rocof = io.load_rocof_csv(args.input) if config.derivative_source == "rocof" else None
    try:
        report = locate(window, config, rocof=rocof)
    except (NoCandidates, Unlocatable) as exc:
        verdict = "no candidates" if isinstance(exc, NoCandidates) else "unlocatable"
        print(f"{verdict}: {exc}", file=sys.stderr)
        if args.output:
            with open(args.output, "w") as fh:
                json.dump(_failure_payload(config, verdict), fh, indent=2)
                fh.write("\n")
        return 2
    if args.output:
        io.write_report(report, args.output)
    else:
        json.dump(io.report_to_mapping(report), sys.stdout, indent=2)
        print()
    for d in report.detections:
        print(f"rank {d.rank}: {d.machine} at {d.frequency_hz:g} Hz (zeta {d.zeta:.4g})")
    if not report.detections:
        print("no source located")
        return 2
    return 0


def _cmd_simulate(args) -> int:
    scenario = io.load_scenario(args.scenario)
    window = scenario.run()
    io.write_window_csv(window, args.output)
    print(f"wrote {window.m} samples x {window.r} machines to {args.output}")
    return 0


def _cmd_spectrum(args) -> int:
    window = io.load_pmu_csv(args.input)
    io.write_spectra(window_spectra(window), args.output)
    print(f"wrote spectra for {2 * window.r} channels to {args.output}")
    return 0


def _cmd_modes(args) -> int:
    scenario = io.load_scenario(args.scenario)
    delta = (
        scenario.initial_delta
        if scenario.initial_delta is not None
        else solve_equilibrium(scenario.model)
    )
    modes = natural_modes(scenario.model, delta)
    print("frequency_hz  damping_ratio")
    for f, z in modes:
        print(f"{f:12.6f}  {z:13.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foloc",
        description="Locate forced-oscillation sources from measurement windows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("locate", help="run the localization pipeline on a CSV window")
    p.add_argument("--input", required=True, help="measurement CSV")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--output", help="report JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_locate)

    p = sub.add_parser("simulate", help="integrate a scenario into a CSV window")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--output", required=True, help="measurement CSV to write")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("spectrum", help="export per-channel amplitude spectra")
    p.add_argument("--input", required=True, help="measurement CSV")
    p.add_argument("--output", required=True, help="spectra CSV to write")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("modes", help="print natural modes of a scenario's model")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.set_defaults(func=_cmd_modes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
