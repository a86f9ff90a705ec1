"""Candidate-frequency extraction: single-sided amplitude spectra, robust
z-score peak detection, and cross-channel aggregation."""

from dataclasses import dataclass

import numpy as np

from .errors import NoCandidates, SpectrumTooShort
from .types import FrequencyCandidateSet, MeasurementWindow

DEFAULT_LAG = 16
DEFAULT_THRESHOLD = 4.0
DEFAULT_INFLUENCE = 0.1
DEFAULT_QUORUM = 0.25


@dataclass(frozen=True, eq=False)
class AmplitudeSpectrum:
    """Single-sided amplitude spectrum of one channel, bins 0..Nyquist."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    channel: str = ""

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=float)
        amps = np.array(self.amplitudes, dtype=float)
        freqs.flags.writeable = False
        amps.flags.writeable = False
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "amplitudes", amps)
        if freqs.shape != amps.shape or freqs.ndim != 1:
            raise ValueError("frequencies and amplitudes must be equal-length 1-D")
        if np.any(amps < 0):
            raise ValueError("amplitudes must be non-negative")

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def amplitude_at(self, frequency_hz: float) -> float:
        """Amplitude of the bin nearest ``frequency_hz``."""
        return float(self.amplitudes[int(round(frequency_hz / self.bin_width))])


def amplitude_spectrum(samples, sample_rate: float, channel: str = "") -> AmplitudeSpectrum:
    """Single-sided amplitude spectrum: 2|DFT|/m on interior bins, |DFT|/m on
    the DC bin and (for even m) the Nyquist bin."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise ValueError("need a 1-D signal with at least 4 samples")
    m = x.size
    mags = np.abs(np.fft.rfft(x)) / m
    amps = 2.0 * mags
    amps[0] = mags[0]
    if m % 2 == 0:
        amps[-1] = mags[-1]
    freqs = np.fft.rfftfreq(m, d=1.0 / sample_rate)
    return AmplitudeSpectrum(freqs, amps, channel)


def zscore_peaks(
    spectrum: AmplitudeSpectrum,
    lag: int = DEFAULT_LAG,
    threshold: float = DEFAULT_THRESHOLD,
    influence: float = DEFAULT_INFLUENCE,
) -> list[float]:
    """Robust sliding z-score peak scan over a spectrum.

    A bin signals when its amplitude exceeds the trailing ``lag``-window mean
    by ``threshold`` trailing standard deviations; signaled bins feed the
    running statistics with weight ``influence`` only, so a spike does not
    mask its neighbours.  Contiguous signaled bins merge to the locally
    maximal one.  The DC bin is excluded, and the first ``lag`` non-DC bins
    seed the statistics, so peaks below ``(lag + 1) * bin_width`` Hz are not
    detectable.  Returns the peak bin frequencies in Hz.
    """
    if lag < 2:
        raise ValueError("lag must be at least 2")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if not 0 <= influence <= 1:
        raise ValueError("influence must lie in [0, 1]")
    y = spectrum.amplitudes[1:]
    nbins = y.size
    if nbins < lag:
        raise SpectrumTooShort(f"{nbins} non-DC bins < lag {lag}")
    filtered = np.empty(nbins)
    filtered[:lag] = y[:lag]
    signal = np.zeros(nbins, dtype=bool)
    for i in range(lag, nbins):
        trail = filtered[i - lag : i]
        excess = y[i] - trail.mean()
        # Strict comparison doubles as the zero-deviation guard: on an exactly
        # constant stretch both sides are 0 and nothing signals.
        if excess > threshold * trail.std():
            signal[i] = True
            filtered[i] = influence * y[i] + (1.0 - influence) * filtered[i - 1]
        else:
            filtered[i] = y[i]
    peaks = []
    i = 0
    while i < nbins:
        if signal[i]:
            j = i
            while j + 1 < nbins and signal[j + 1]:
                j += 1
            k = i + int(np.argmax(y[i : j + 1]))
            peaks.append(float(spectrum.frequencies[k + 1]))
            i = j + 1
        else:
            i += 1
    return peaks


def window_spectra(window: MeasurementWindow) -> list[AmplitudeSpectrum]:
    """Amplitude spectrum of every channel (2r of them)."""
    return [
        amplitude_spectrum(samples, window.sample_rate, name)
        for name, samples in window.channels()
    ]


def candidate_frequencies(
    window: MeasurementWindow,
    *,
    lag: int = DEFAULT_LAG,
    threshold: float = DEFAULT_THRESHOLD,
    influence: float = DEFAULT_INFLUENCE,
    policy: str = "union",
    quorum: float = DEFAULT_QUORUM,
) -> FrequencyCandidateSet:
    """Aggregate per-channel peak detections into the candidate set.

    Every channel (angles and speeds) is scanned with ``zscore_peaks``.
    Detections landing on the same FFT bin are merged, keeping the
    larger-amplitude representative.  ``policy="union"`` keeps every merged
    peak; ``policy="intersection"`` keeps only peaks detected in at least a
    ``quorum`` fraction of the channels (a strict all-channel intersection
    would miss sources observable in few channels).  Raises NoCandidates
    when nothing survives: no periodic component is observable and the
    pipeline aborts with that verdict rather than regressing an empty trig
    block.
    """
    if policy not in ("union", "intersection"):
        raise ValueError(f"unknown aggregation policy {policy!r}")
    if not 0 < quorum <= 1:
        raise ValueError("quorum must lie in (0, 1]")
    bin_width = window.sample_rate / window.m
    nyquist = window.sample_rate / 2.0
    # bin index -> (best amplitude, frequency, contributing channel indices)
    merged: dict[int, tuple[float, float, set[int]]] = {}
    for ci, (name, samples) in enumerate(window.channels()):
        spec = amplitude_spectrum(samples, window.sample_rate, name)
        for f in zscore_peaks(spec, lag=lag, threshold=threshold, influence=influence):
            if f >= nyquist * (1.0 - 1e-12):
                continue  # a sine column at the exact Nyquist bin is degenerate
            idx = int(round(f / bin_width))
            amp = spec.amplitude_at(f)
            if idx in merged:
                best_amp, best_f, chans = merged[idx]
                chans.add(ci)
                if amp > best_amp:
                    merged[idx] = (amp, f, chans)
            else:
                merged[idx] = (amp, f, {ci})
    total_channels = 2 * window.r
    freqs = [
        f
        for _, (amp, f, chans) in sorted(merged.items())
        if policy == "union" or len(chans) / total_channels >= quorum - 1e-12
    ]
    if not freqs:
        raise NoCandidates("no periodic component observable in any channel")
    return FrequencyCandidateSet(np.array(freqs), bin_width)
