"""Outlier-based localization and the end-to-end pipeline."""

import time

import numpy as np

from .config import PipelineConfig
from .errors import Unlocatable
from .signal_prep import channel_means, detrend, estimate_derivatives, ingest_rocof
from .sindy import build_library, extract_forcing_block, stlsq, structural_mask
from .spectrum import candidate_frequencies
from .types import Detection, LocationReport, MeasurementWindow, ZetaIndex

MAD_SCALE = 1.4826
MAD_SIGMAS = 3.0

#: Relative spread below which a dense all-nonzero forcing block is treated
#: as a regularized non-answer instead of a source.
UNIFORM_SPREAD = 0.10


def mad_cutoff(values: np.ndarray) -> tuple[float | None, bool]:
    """One-sided outlier cutoff med + 3 * 1.4826 * MAD.

    When more than half the entries are identical the MAD collapses to zero;
    fall back to the mean absolute deviation about the median, and when that
    is also zero return (None, True): nothing can be flagged.
    """
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    if mad > 0:
        return med + MAD_SIGMAS * MAD_SCALE * mad, False
    fallback = float(np.mean(np.abs(values - med)))
    if fallback > 0:
        return med + MAD_SIGMAS * MAD_SCALE * fallback, True
    return None, True


def mad_outliers(zeta: ZetaIndex, axis: str = "flat") -> list[tuple[int, int]]:
    """Flag (frequency index, machine index) cells whose value exceeds the
    scaled-MAD cutoff.  Only high outliers matter for a non-negative
    magnitude index.  ``axis="flat"`` scans the whole matrix at once (a
    single dominant cell stands out against the full background);
    ``axis="per-row"`` scans each frequency row independently.
    """
    if zeta.values.size == 0:
        raise ValueError("zeta index is empty")
    if axis not in ("flat", "per-row"):
        raise ValueError(f"unknown outlier axis {axis!r}")
    flagged = []
    if axis == "flat":
        cutoff, _ = mad_cutoff(zeta.values.ravel())
        if cutoff is not None:
            for i in range(zeta.n):
                for j in range(zeta.r):
                    if zeta.values[i, j] > cutoff:
                        flagged.append((i, j))
    else:
        for i in range(zeta.n):
            cutoff, _ = mad_cutoff(zeta.values[i])
            if cutoff is not None:
                for j in range(zeta.r):
                    if zeta.values[i, j] > cutoff:
                        flagged.append((i, j))
    return flagged


def rank_sources(zeta: ZetaIndex, k: int) -> list[tuple[str, float, float]]:
    """Top-k (machine, frequency, zeta) triples by descending zeta; ties
    break by (frequency index, machine index) ascending."""
    if k < 1:
        raise ValueError("k must be at least 1")
    cells = [
        (-zeta.values[i, j], i, j)
        for i in range(zeta.n)
        for j in range(zeta.r)
    ]
    cells.sort()
    return [
        (zeta.labels[j], float(zeta.frequencies[i]), float(zeta.values[i, j]))
        for _, i, j in cells[:k]
    ]


def locate(
    window: MeasurementWindow,
    config: PipelineConfig | None = None,
    rocof=None,
) -> LocationReport:
    """Run the full pipeline on one measurement window.

    detrend -> derivative estimate (finite difference, or measured ROCOF
    when configured) -> candidate frequencies -> feature library -> sparse
    regression -> forcing-magnitude index -> scaled-MAD outliers.  Raises
    NoCandidates when no periodic component is observable and Unlocatable
    when the regression returns a dense, uniform forcing block (all entries
    nonzero within 10% of each other and none flagged).
    """
    if config is None:
        config = PipelineConfig()
    started = time.perf_counter()
    clipped = window.first_seconds(config.window_seconds)
    angle_means, speed_means = channel_means(clipped)
    centered = detrend(clipped)

    if config.derivative_source == "rocof":
        if rocof is None:
            raise ValueError("derivative_source is 'rocof' but no rocof supplied")
        rocof = np.asarray(rocof, dtype=float)[: clipped.m]
        derivatives = ingest_rocof(centered, rocof)
        trimmed = centered.drop_last_sample()
    else:
        trimmed, derivatives = estimate_derivatives(centered)

    candidates = candidate_frequencies(
        centered,
        lag=config.zscore_lag,
        threshold=config.zscore_threshold,
        influence=config.zscore_influence,
        policy=config.aggregation,
        quorum=config.quorum,
    )
    library = build_library(trimmed, candidates)
    mask = structural_mask(library.r, library.n)
    xi, regression = stlsq(library, derivatives, config.lam, mask)
    zeta = extract_forcing_block(xi)

    flagged = mad_outliers(zeta, axis=config.outlier_axis)
    vals = zeta.values
    if not flagged and vals.min() > 0:
        spread = float((vals.max() - vals.min()) / vals.max())
        if spread <= UNIFORM_SPREAD:
            raise Unlocatable(
                "forcing block is dense and uniform "
                f"(relative spread {spread:.3f}); no source distinguishable"
            )

    ordered = sorted(flagged, key=lambda ij: (-vals[ij[0], ij[1]], ij[0], ij[1]))
    detections = tuple(
        Detection(zeta.labels[j], float(zeta.frequencies[i]), float(vals[i, j]), rank)
        for rank, (i, j) in enumerate(ordered, start=1)
    )
    cutoff, used_fallback = mad_cutoff(vals.ravel())
    diagnostics = {
        "samples": clipped.m,
        "channels": 2 * clipped.r,
        "bin_width_hz": candidates.bin_width,
        "candidate_count": candidates.n,
        "removed_angle_means": [float(v) for v in angle_means],
        "removed_speed_means": [float(v) for v in speed_means],
        "iterations": regression.iterations,
        "support_history": list(regression.support_history),
        "residual_fro": regression.residual_fro,
        "objective": regression.objective,
        "initial_support": regression.initial_support,
        "sub_lambda_survivors": regression.sub_lambda_survivors,
        "outlier_cutoff": cutoff,
        "outlier_fallback": used_fallback,
    }
    return LocationReport(
        detections=detections,
        candidate_set=candidates,
        elapsed_s=time.perf_counter() - started,
        diagnostics=diagnostics,
        config_echo=config.to_mapping(),
    )
