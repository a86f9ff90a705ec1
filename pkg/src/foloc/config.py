"""Pipeline configuration."""

from dataclasses import asdict, dataclass, fields

from . import sindy, spectrum


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the localization pipeline.

    ``lam`` is the sparse-regression threshold.  The default suits
    well-scaled data; in practice it should be raised until the forcing
    block of the coefficient matrix comes out mostly (> 50%) zero, which
    puts the threshold above the ambient noise floor of the trig
    coefficients.  The z-score scan cannot flag peaks below roughly
    ``(zscore_lag + 1) * sample_rate / m`` Hz (they seed its statistics).
    """

    lam: float = sindy.DEFAULT_LAMBDA
    zscore_lag: int = spectrum.DEFAULT_LAG
    zscore_threshold: float = spectrum.DEFAULT_THRESHOLD
    zscore_influence: float = spectrum.DEFAULT_INFLUENCE
    aggregation: str = "union"
    quorum: float = spectrum.DEFAULT_QUORUM
    window_seconds: float = 40.0
    derivative_source: str = "finite-difference"
    outlier_axis: str = "flat"
    seed: int | None = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.zscore_lag < 2:
            raise ValueError("zscore_lag must be at least 2")
        if self.zscore_threshold <= 0:
            raise ValueError("zscore_threshold must be positive")
        if not 0 <= self.zscore_influence <= 1:
            raise ValueError("zscore_influence must lie in [0, 1]")
        if self.aggregation not in ("union", "intersection"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if not 0 < self.quorum <= 1:
            raise ValueError("quorum must lie in (0, 1]")
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if self.derivative_source not in ("finite-difference", "rocof"):
            raise ValueError(f"unknown derivative_source {self.derivative_source!r}")
        if self.outlier_axis not in ("flat", "per-row"):
            raise ValueError(f"unknown outlier_axis {self.outlier_axis!r}")

    def to_mapping(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**mapping)
