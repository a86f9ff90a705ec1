"""File formats: measurement CSV, scenario and config JSON, report JSON,
spectra CSV.

Measurement CSV layout (self-describing units):

    time_s, <label>:angle:<rad|deg>, <label>:speed:<radps|hz>, ...

one row per sample, values printed with 17 significant digits so float64
round-trips bit-exactly.  Angle unit "deg" and speed unit "hz" convert to
the internal radians / rad/s at load.  Columns of a third kind
``<label>:rocof:<radps2|hzps>`` are tolerated and read separately by
``load_rocof_csv`` for the measured-derivative path.  Bus voltage-angle and
bus-frequency channels are ingested through the identical schema; the
pipeline is agnostic to whether channels are rotor or bus quantities.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .errors import IoError, ParseError, UnitError
from .simulator import DEFAULT_WARMUP_S, ForcingSpec, GridModel, SwitchSpec, simulate
from .types import (
    Detection,
    FrequencyCandidateSet,
    LocationReport,
    MeasurementWindow,
    validate_window,
)

_ANGLE_UNITS = {"rad": 1.0, "deg": math.pi / 180.0}
_SPEED_UNITS = {"radps": 1.0, "hz": 2.0 * math.pi}
_ROCOF_UNITS = {"radps2": 1.0, "hzps": 2.0 * math.pi}


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _parse_header(header: list[str]) -> dict:
    if not header or header[0].strip() != "time_s":
        raise ParseError("first column must be time_s")
    columns = {"angle": {}, "speed": {}, "rocof": {}}
    order: list[str] = []
    for pos, name in enumerate(header[1:], start=1):
        parts = name.strip().split(":")
        if len(parts) != 3:
            raise ParseError(f"column {name!r} is not <label>:<kind>:<unit>")
        label, kind, unit = parts
        if kind not in columns:
            raise ParseError(f"column {name!r} has unknown kind {kind!r}")
        units = {"angle": _ANGLE_UNITS, "speed": _SPEED_UNITS, "rocof": _ROCOF_UNITS}[kind]
        if unit not in units:
            raise UnitError(f"column {name!r} has unknown unit {unit!r}")
        if label in columns[kind]:
            raise ParseError(f"duplicate column for {label}:{kind}")
        columns[kind][label] = (pos, units[unit])
        if kind == "angle" and label not in order:
            order.append(label)
    missing = set(columns["angle"]) ^ set(columns["speed"])
    if missing:
        raise ParseError(f"labels missing an angle or speed column: {sorted(missing)}")
    if not order:
        raise ParseError("no channel columns found")
    return {"labels": order, "columns": columns, "width": len(header)}


def _read_rows(path) -> tuple[dict, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError("empty file") from None
            layout = _parse_header(header)
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != layout["width"]:
                    raise ParseError(
                        f"line {lineno}: expected {layout['width']} fields, got {len(row)}"
                    )
                try:
                    rows.append([float(v) for v in row])
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: {exc}") from None
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if not rows:
        raise ParseError("no data rows")
    return layout, np.array(rows)


def load_pmu_csv(path) -> MeasurementWindow:
    """Load a measurement window, converting units to radians and rad/s."""
    layout, data = _read_rows(path)
    labels = layout["labels"]
    t = data[:, 0]
    angles = np.column_stack(
        [data[:, layout["columns"]["angle"][lbl][0]] * layout["columns"]["angle"][lbl][1]
         for lbl in labels]
    )
    speeds = np.column_stack(
        [data[:, layout["columns"]["speed"][lbl][0]] * layout["columns"]["speed"][lbl][1]
         for lbl in labels]
    )
    return validate_window(
        angles, speeds, _infer_rate(t), labels=tuple(labels), timestamps=t
    )


def load_rocof_csv(path) -> np.ndarray:
    """Read the optional rocof columns of a measurement CSV (m x r, rad/s^2),
    ordered like the window labels."""
    layout, data = _read_rows(path)
    rocof_cols = layout["columns"]["rocof"]
    missing = [lbl for lbl in layout["labels"] if lbl not in rocof_cols]
    if missing:
        raise ParseError(f"labels missing a rocof column: {missing}")
    return np.column_stack(
        [data[:, rocof_cols[lbl][0]] * rocof_cols[lbl][1] for lbl in layout["labels"]]
    )


def _infer_rate(timestamps: np.ndarray) -> float:
    """Sample rate from the time grid, snapped to 12 significant digits when
    that reproduces the spacing (so 30 Hz comes back as exactly 30.0)."""
    if timestamps.size < 2:
        raise ParseError("need at least two samples to infer the rate")
    span = timestamps[-1] - timestamps[0]
    if span <= 0:
        raise ParseError("timestamps must increase")
    raw = (timestamps.size - 1) / span
    snapped = float(f"{raw:.12g}")
    dt = np.diff(timestamps)
    if np.max(np.abs(dt - 1.0 / snapped)) <= 1e-6 / snapped:
        return snapped
    return raw


def write_window_csv(window: MeasurementWindow, path) -> None:
    """Write a window in the documented CSV layout (rad / radps units)."""
    header = ["time_s"]
    for lbl in window.labels:
        header += [f"{lbl}:angle:rad", f"{lbl}:speed:radps"]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(window.m):
                row = [_fmt(window.timestamps[k])]
                for j in range(window.r):
                    row += [_fmt(window.angle_cols[k, j]), _fmt(window.speed_cols[k, j])]
                writer.writerow(row)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def write_spectra(spectra, path) -> None:
    """Plot-ready CSV of per-channel spectra: bin_hz, amplitude, channel."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_hz", "amplitude", "channel"])
            for spec in spectra:
                for f, a in zip(spec.frequencies, spec.amplitudes):
                    writer.writerow([_fmt(f), _fmt(a), spec.channel])
    except OSError as exc:
        raise IoError(str(exc)) from exc


def report_to_mapping(report: LocationReport) -> dict:
    return {
        "config_echo": dict(report.config_echo),
        "candidates_hz": [float(f) for f in report.candidate_set.frequencies],
        "detections": [
            {
                "machine": d.machine,
                "frequency_hz": d.frequency_hz,
                "zeta": d.zeta,
                "rank": d.rank,
            }
            for d in report.detections
        ],
        "diagnostics": dict(report.diagnostics),
        "verdict": report.verdict,
        "elapsed_s": report.elapsed_s,
    }


def write_report(report: LocationReport, path) -> None:
    """Serialize a report as JSON with stable key order."""
    try:
        with open(path, "w") as fh:
            json.dump(report_to_mapping(report), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_report(path) -> LocationReport:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    detections = tuple(
        Detection(d["machine"], d["frequency_hz"], d["zeta"], d["rank"])
        for d in payload["detections"]
    )
    diagnostics = dict(payload["diagnostics"])
    candidates = FrequencyCandidateSet(
        np.array(payload["candidates_hz"], dtype=float),
        diagnostics["bin_width_hz"],
    )
    return LocationReport(
        detections=detections,
        candidate_set=candidates,
        elapsed_s=payload["elapsed_s"],
        diagnostics=diagnostics,
        config_echo=dict(payload["config_echo"]),
    )


def load_config(path) -> PipelineConfig:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return PipelineConfig.from_mapping(payload)


@dataclass(frozen=True)
class Scenario:
    """A simulation request: model, forcings, and run parameters."""

    model: GridModel
    forcings: tuple[ForcingSpec, ...]
    duration_s: float
    output_rate_hz: float
    seed: int
    internal_dt_s: float | None = None
    warmup_s: float = DEFAULT_WARMUP_S
    initial_delta: np.ndarray | None = None

    def run(self) -> MeasurementWindow:
        return simulate(
            self.model,
            list(self.forcings),
            self.duration_s,
            self.output_rate_hz,
            self.seed,
            internal_dt=self.internal_dt_s,
            warmup_s=self.warmup_s,
            initial_delta=self.initial_delta,
        )


def _forcing_from_mapping(entry: dict) -> ForcingSpec:
    switch = entry.get("switch")
    return ForcingSpec(
        target=entry["target"],
        waveform=entry["waveform"],
        amplitude=entry["amplitude"],
        frequency_hz=entry["frequency_hz"],
        phase=entry.get("phase", 0.0),
        start_s=entry.get("start_s", 0.0),
        end_s=entry.get("end_s") if entry.get("end_s") is not None else math.inf,
        switch=SwitchSpec(switch["at_s"], switch["frequency_hz"], switch["amplitude"])
        if switch
        else None,
    )


def load_scenario(path) -> Scenario:
    """Parse a scenario JSON file.

    Schema: {"model": {labels, inertia, damping, emf, mechanical_power,
    admittance_magnitude, admittance_angle, sigma_load}, "forcings": [...],
    "duration_s", "output_rate_hz", "seed", optional "internal_dt_s",
    "warmup_s", "initial_delta"}.
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    try:
        m = payload["model"]
        model = GridModel(
            labels=tuple(m["labels"]),
            inertia=m["inertia"],
            damping=m["damping"],
            emf=m["emf"],
            mechanical_power=m["mechanical_power"],
            admittance_mag=m["admittance_magnitude"],
            admittance_angle=m["admittance_angle"],
            sigma_load=m["sigma_load"],
        )
        forcings = tuple(_forcing_from_mapping(f) for f in payload.get("forcings", []))
        initial = payload.get("initial_delta")
        return Scenario(
            model=model,
            forcings=forcings,
            duration_s=payload["duration_s"],
            output_rate_hz=payload["output_rate_hz"],
            seed=payload["seed"],
            internal_dt_s=payload.get("internal_dt_s"),
            warmup_s=payload.get("warmup_s", DEFAULT_WARMUP_S),
            initial_delta=np.asarray(initial, dtype=float) if initial is not None else None,
        )
    except KeyError as exc:
        raise ParseError(f"scenario missing field {exc}") from None
