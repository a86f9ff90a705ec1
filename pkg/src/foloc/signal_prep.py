"""Turn a raw measurement window into regression inputs X and Xdot."""

import numpy as np

from .errors import ShapeMismatch
from .types import DerivativeMatrix, MeasurementWindow


def detrend(window: MeasurementWindow) -> MeasurementWindow:
    """Subtract each channel's sample mean."""
    return MeasurementWindow(
        window.sample_rate,
        window.timestamps,
        window.labels,
        window.angle_cols - window.angle_cols.mean(axis=0),
        window.speed_cols - window.speed_cols.mean(axis=0),
    )


def channel_means(window: MeasurementWindow) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel means that detrend would remove (angles, speeds)."""
    return window.angle_cols.mean(axis=0), window.speed_cols.mean(axis=0)


def _moving_average(columns: np.ndarray, width: int) -> np.ndarray:
    kernel = np.ones(width) / width
    out = np.empty_like(columns)
    for j in range(columns.shape[1]):
        out[:, j] = np.convolve(columns[:, j], kernel, mode="same")
    return out


def estimate_derivatives(
    window: MeasurementWindow, smooth_width: int = 0
) -> tuple[MeasurementWindow, DerivativeMatrix]:
    """Two-point forward-difference derivative estimate.

    Xdot[k] = (X[k+1] - X[k]) * sample_rate for k = 0..m-2.  The returned
    window drops its final row so X and Xdot share m-1 rows; padding would
    fabricate data.  ``smooth_width`` > 1 applies a centered moving average
    to every channel before differencing (off by default; edge samples use a
    shrunken kernel).
    """
    angles, speeds = window.angle_cols, window.speed_cols
    if smooth_width > 1:
        angles = _moving_average(angles, smooth_width)
        speeds = _moving_average(speeds, smooth_width)
    state = np.hstack([angles, speeds])
    derivs = (state[1:] - state[:-1]) * window.sample_rate
    trimmed = MeasurementWindow(
        window.sample_rate,
        window.timestamps[:-1],
        window.labels,
        angles[:-1],
        speeds[:-1],
    )
    return trimmed, DerivativeMatrix(derivs, source_rows=window.m)


def ingest_rocof(window: MeasurementWindow, rocof_cols) -> DerivativeMatrix:
    """Build the derivative matrix from measured rate-of-change-of-frequency.

    The speed-derivative block is the measured ROCOF directly; the
    angle-derivative block is the measured speed channels (the first state
    equation).  Rows are truncated to m-1 for shape parity with the
    finite-difference path.
    """
    rocof = np.atleast_2d(np.asarray(rocof_cols, dtype=float))
    if rocof.shape != (window.m, window.r):
        raise ShapeMismatch(
            f"rocof block {rocof.shape} does not match window "
            f"({window.m}, {window.r})"
        )
    values = np.hstack([window.speed_cols, rocof])[:-1]
    return DerivativeMatrix(values, source_rows=window.m)
