"""Core domain types shared by every stage of the pipeline.

All containers are immutable after construction (their arrays are locked),
so instances are safe to share read-only across threads.
"""

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import NonUniformSampling, ShapeMismatch, TooShort

#: Maximum tolerated relative deviation of the sample spacing from 1/sample_rate.
JITTER_TOL = 1e-6

#: Minimum window length accepted at ingestion.  Derivative estimation trims
#: one row, so already-validated windows may internally drop to m - 1 rows.
MIN_SAMPLES = 4


def _locked(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class MeasurementWindow:
    """Synchronized angle/speed deviation samples for a set of machines.

    ``angle_cols`` and ``speed_cols`` are m x r arrays holding angle
    deviations (rad) and speed deviations (rad/s); column j of each belongs
    to ``labels[j]``.  Timestamps are seconds, strictly increasing on a
    uniform grid of spacing ``1/sample_rate``.
    """

    sample_rate: float
    timestamps: np.ndarray
    labels: tuple[str, ...]
    angle_cols: np.ndarray
    speed_cols: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "timestamps", _locked(self.timestamps))
        object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
        object.__setattr__(self, "angle_cols", _locked(self.angle_cols))
        object.__setattr__(self, "speed_cols", _locked(self.speed_cols))
        if not np.isfinite(self.sample_rate) or self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive and finite")
        if self.timestamps.ndim != 1:
            raise ValueError("timestamps must be one-dimensional")
        m = self.timestamps.size
        if m < MIN_SAMPLES - 1:
            raise TooShort(f"window has {m} samples, need at least {MIN_SAMPLES - 1}")
        if self.angle_cols.ndim != 2 or self.speed_cols.ndim != 2:
            raise ShapeMismatch("channel blocks must be two-dimensional")
        if self.angle_cols.shape != self.speed_cols.shape:
            raise ShapeMismatch(
                f"angle block {self.angle_cols.shape} and speed block "
                f"{self.speed_cols.shape} differ"
            )
        if self.angle_cols.shape[0] != m:
            raise ShapeMismatch("channel rows do not match timestamp count")
        r = self.angle_cols.shape[1]
        if r < 2:
            raise ShapeMismatch(f"need at least 2 machines, got {r}")
        if len(self.labels) != r:
            raise ShapeMismatch("label count does not match channel columns")
        if len(set(self.labels)) != r:
            raise ValueError("machine labels must be unique")
        dt = 1.0 / self.sample_rate
        diffs = np.diff(self.timestamps)
        if np.any(diffs <= 0):
            raise NonUniformSampling("timestamps must be strictly increasing")
        if np.max(np.abs(diffs - dt)) > JITTER_TOL * dt:
            raise NonUniformSampling(
                "sample spacing deviates from 1/sample_rate by more than "
                f"{JITTER_TOL:g} relative"
            )

    @property
    def m(self) -> int:
        return self.timestamps.size

    @property
    def r(self) -> int:
        return self.angle_cols.shape[1]

    @property
    def mean_centered(self) -> bool:
        """Whether every channel mean is negligible at the data's scale."""
        scale = max(
            1.0,
            float(np.max(np.abs(self.angle_cols), initial=0.0)),
            float(np.max(np.abs(self.speed_cols), initial=0.0)),
        )
        worst = max(
            float(np.max(np.abs(self.angle_cols.mean(axis=0)))),
            float(np.max(np.abs(self.speed_cols.mean(axis=0)))),
        )
        return worst <= 1e-9 * scale

    def channels(self) -> Iterator[tuple[str, np.ndarray]]:
        """Yield every channel as (name, samples): angles first, then speeds."""
        for j, label in enumerate(self.labels):
            yield f"{label}:angle", self.angle_cols[:, j]
        for j, label in enumerate(self.labels):
            yield f"{label}:speed", self.speed_cols[:, j]

    def state_matrix(self) -> np.ndarray:
        """m x 2r matrix with angle columns first, then speed columns."""
        return np.hstack([self.angle_cols, self.speed_cols])

    def first_seconds(self, seconds: float) -> "MeasurementWindow":
        """Return the leading ``seconds`` of the window (whole window if shorter)."""
        keep = int(round(seconds * self.sample_rate))
        if keep >= self.m:
            return self
        return MeasurementWindow(
            self.sample_rate,
            self.timestamps[:keep],
            self.labels,
            self.angle_cols[:keep],
            self.speed_cols[:keep],
        )

    def drop_last_sample(self) -> "MeasurementWindow":
        return MeasurementWindow(
            self.sample_rate,
            self.timestamps[:-1],
            self.labels,
            self.angle_cols[:-1],
            self.speed_cols[:-1],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasurementWindow):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.labels == other.labels
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.angle_cols, other.angle_cols)
            and np.array_equal(self.speed_cols, other.speed_cols)
        )


@dataclass(frozen=True, eq=False)
class DerivativeMatrix:
    """Estimated state derivatives, (m-1) x 2r.

    Column order matches the state partition of the feature library:
    angle-rate columns first, then speed-rate columns.  The row count is
    exactly one less than the source window's, because the forward
    difference consumes the final sample.
    """

    values: np.ndarray
    source_rows: int

    def __post_init__(self):
        object.__setattr__(self, "values", _locked(self.values))
        if self.values.ndim != 2:
            raise ShapeMismatch("derivative matrix must be two-dimensional")
        if self.values.shape[0] != self.source_rows - 1:
            raise ShapeMismatch(
                f"derivative rows {self.values.shape[0]} must be one less than "
                f"source rows {self.source_rows}"
            )
        if self.values.shape[1] % 2 != 0 or self.values.shape[1] < 4:
            raise ShapeMismatch("derivative columns must be 2r with r >= 2")

    @property
    def r(self) -> int:
        return self.values.shape[1] // 2


@dataclass(frozen=True, eq=False)
class FrequencyCandidateSet:
    """Deduplicated candidate frequencies (Hz) with the FFT resolution of
    the window they came from."""

    frequencies: np.ndarray
    bin_width: float

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _locked(self.frequencies))
        if self.frequencies.ndim != 1:
            raise ValueError("frequencies must be one-dimensional")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        f = self.frequencies
        if f.size and np.any(f <= 0):
            raise ValueError("candidate frequencies must be positive")
        if f.size > 1:
            gaps = np.diff(f)
            if np.any(gaps <= 0):
                raise ValueError("candidate frequencies must be sorted ascending")
            if np.any(gaps <= self.bin_width / 2):
                raise ValueError("candidate spacing must exceed half a bin")

    @property
    def n(self) -> int:
        return self.frequencies.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyCandidateSet):
            return NotImplemented
        return self.bin_width == other.bin_width and np.array_equal(
            self.frequencies, other.frequencies
        )


@dataclass(frozen=True, eq=False)
class FeatureLibrary:
    """Regression feature matrix: bias, state columns, and trig columns.

    Column layout is ``[1, angle_1..angle_r, speed_1..speed_r,
    sin(2*pi*f_1*t), cos(2*pi*f_1*t), ..., sin(2*pi*f_n*t), cos(2*pi*f_n*t)]``
    evaluated at the window timestamps; ``descriptors`` tags each column in
    that exact order.
    """

    matrix: np.ndarray
    labels: tuple[str, ...]
    frequencies: np.ndarray
    descriptors: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _locked(self.matrix))
        object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
        object.__setattr__(self, "frequencies", _locked(self.frequencies))
        r, n = len(self.labels), self.frequencies.size
        if self.matrix.ndim != 2 or self.matrix.shape[1] != 1 + 2 * r + 2 * n:
            raise ShapeMismatch(
                f"library width {self.matrix.shape[1]} != 1 + 2r + 2n "
                f"for r={r}, n={n}"
            )
        if not np.all(self.matrix[:, 0] == 1.0):
            raise ValueError("bias column must be all ones")
        tags = ["bias"]
        tags += [f"angle:{lbl}" for lbl in self.labels]
        tags += [f"speed:{lbl}" for lbl in self.labels]
        for f in self.frequencies:
            tags += [f"sin:{f:.6g}Hz", f"cos:{f:.6g}Hz"]
        object.__setattr__(self, "descriptors", tuple(tags))

    @property
    def r(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.frequencies.size

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Sparse dynamics coefficients, stored feature-major.

    ``values`` is (1 + 2r + 2n) x 2r so that ``xdot ~= library @ values``
    holds directly; ``state_major`` exposes the transposed 2r x (1 + 2r + 2n)
    orientation for reporting.  Rows partition into the bias row, the 2r
    state rows (Jacobian block), and 2n paired sin/cos forcing rows; target
    columns are the r angle-rate equations followed by the r speed-rate
    equations.
    """

    values: np.ndarray
    labels: tuple[str, ...] | None = None
    frequencies: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _locked(self.values))
        if self.values.ndim != 2:
            raise ShapeMismatch("coefficient matrix must be two-dimensional")
        # The block layout is only enforced when machine labels / candidate
        # frequencies are attached; bare matrices from generic regressions
        # carry no layout.
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
            if self.values.shape[1] != 2 * len(self.labels):
                raise ShapeMismatch("label count does not match target columns")
        if self.frequencies is not None:
            object.__setattr__(self, "frequencies", _locked(self.frequencies))
            if self.labels is None:
                raise ShapeMismatch("frequencies attached without machine labels")
            expected = 1 + 2 * len(self.labels) + 2 * self.frequencies.size
            if self.values.shape[0] != expected:
                raise ShapeMismatch(
                    f"feature rows {self.values.shape[0]} do not match the "
                    f"bias/state/trig layout ({expected})"
                )

    def _layout(self) -> tuple[int, int]:
        targets, rows = self.values.shape[1], self.values.shape[0]
        if targets % 2 != 0:
            raise ShapeMismatch("target columns are not 2r")
        r = targets // 2
        trig_rows = rows - 1 - 2 * r
        if trig_rows < 0 or trig_rows % 2 != 0:
            raise ShapeMismatch(
                f"feature rows {rows} incompatible with the block layout for r={r}"
            )
        return r, trig_rows // 2

    @property
    def r(self) -> int:
        return self._layout()[0]

    @property
    def n(self) -> int:
        return self._layout()[1]

    @property
    def bias_row(self) -> np.ndarray:
        return self.values[0, :]

    @property
    def jacobian_block(self) -> np.ndarray:
        return self.values[1 : 1 + 2 * self.r, :]

    @property
    def forcing_block(self) -> np.ndarray:
        """2n x 2r block of trig coefficients; rows pair as (sin, cos) per
        candidate frequency."""
        return self.values[1 + 2 * self.r :, :]

    @property
    def state_major(self) -> np.ndarray:
        return self.values.T


@dataclass(frozen=True, eq=False)
class ZetaIndex:
    """n x r squared forcing magnitudes; entry (i, j) is the squared
    amplitude of the identified periodic input at frequency i on machine j."""

    values: np.ndarray
    frequencies: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _locked(self.values))
        object.__setattr__(self, "frequencies", _locked(self.frequencies))
        object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
        if self.values.ndim != 2:
            raise ShapeMismatch("zeta index must be two-dimensional")
        n, r = self.values.shape
        if self.frequencies.size != n or len(self.labels) != r:
            raise ShapeMismatch("zeta labels do not match its shape")
        if self.values.size and np.any(self.values < 0):
            raise ValueError("zeta entries must be non-negative")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]


class Detection(NamedTuple):
    """One flagged source: machine, frequency (Hz), squared forcing
    magnitude, and rank (1 = strongest)."""

    machine: str
    frequency_hz: float
    zeta: float
    rank: int


@dataclass(frozen=True, eq=False)
class LocationReport:
    """Localization verdict for one measurement window."""

    detections: tuple[Detection, ...]
    candidate_set: FrequencyCandidateSet
    elapsed_s: float
    diagnostics: dict
    config_echo: dict

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))

    @property
    def verdict(self) -> str:
        return "source located" if self.detections else "no source located"

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocationReport):
            return NotImplemented
        return (
            self.detections == other.detections
            and self.candidate_set == other.candidate_set
            and self.elapsed_s == other.elapsed_s
            and self.diagnostics == other.diagnostics
            and self.config_echo == other.config_echo
        )


def validate_window(
    angle_cols,
    speed_cols,
    sample_rate: float,
    labels=None,
    timestamps=None,
) -> MeasurementWindow:
    """Validate raw samples into a MeasurementWindow.

    ``angle_cols``/``speed_cols`` are rectangular m x r arrays in radians and
    rad/s.  Labels default to G1..Gr and timestamps to a uniform grid
    starting at zero.  Raises TooShort for m < 4, ShapeMismatch when the two
    blocks disagree, NonUniformSampling for jitter above tolerance.
    """
    angles = np.atleast_2d(np.asarray(angle_cols, dtype=float))
    speeds = np.atleast_2d(np.asarray(speed_cols, dtype=float))
    if angles.shape != speeds.shape:
        raise ShapeMismatch(
            f"angle block {angles.shape} and speed block {speeds.shape} differ"
        )
    m = angles.shape[0]
    if m < MIN_SAMPLES:
        raise TooShort(f"{m} samples, need at least {MIN_SAMPLES}")
    if labels is None:
        labels = tuple(f"G{j + 1}" for j in range(angles.shape[1]))
    if timestamps is None:
        timestamps = np.arange(m) / float(sample_rate)
    return MeasurementWindow(float(sample_rate), timestamps, labels, angles, speeds)
