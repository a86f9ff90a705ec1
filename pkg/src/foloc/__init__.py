"""foloc: locate forced-oscillation sources in power systems from
synchronized measurement windows, via sparse identification of the rotor
dynamics.  Includes a stochastic swing-equation simulator for building
ground-truth scenarios."""

from .config import PipelineConfig
from .errors import (
    Diverged,
    IoError,
    NoCandidates,
    NoEquilibrium,
    NonUniformSampling,
    NotAnEquilibrium,
    ParseError,
    PipelineError,
    RankDeficient,
    ShapeMismatch,
    SpectrumTooShort,
    TooShort,
    UnitError,
    Unlocatable,
)
from .locator import locate, mad_outliers, rank_sources
from .signal_prep import detrend, estimate_derivatives, ingest_rocof
from .simulator import (
    ForcingSpec,
    GridModel,
    SimState,
    SwitchSpec,
    electrical_power,
    forcing_value,
    natural_modes,
    simulate,
    solve_equilibrium,
    step,
)
from .sindy import (
    RegressionDiagnostics,
    StructuralMask,
    build_library,
    extract_forcing_block,
    initial_fit,
    stlsq,
    structural_mask,
)
from .spectrum import (
    AmplitudeSpectrum,
    amplitude_spectrum,
    candidate_frequencies,
    window_spectra,
    zscore_peaks,
)
from .types import (
    CoefficientMatrix,
    DerivativeMatrix,
    Detection,
    FeatureLibrary,
    FrequencyCandidateSet,
    LocationReport,
    MeasurementWindow,
    ZetaIndex,
    validate_window,
)

__version__ = "0.1.0"
