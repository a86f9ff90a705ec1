"""Feature-library construction and sequential thresholded least squares.

The regression solves xdot ~= library @ xi one target column at a time,
alternating a hard threshold at ``lam`` with a least-squares refit on the
surviving support until the support stabilizes.  Positions the physical
model pins to zero are excluded from every fit through a structural mask.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient
from .types import (
    CoefficientMatrix,
    DerivativeMatrix,
    FeatureLibrary,
    FrequencyCandidateSet,
    MeasurementWindow,
    ZetaIndex,
)

DEFAULT_LAMBDA = 1e-6


@dataclass(frozen=True, eq=False)
class StructuralMask:
    """Boolean feature x target matrix; True marks entries permitted nonzero."""

    allowed: np.ndarray

    def __post_init__(self):
        arr = np.array(self.allowed, dtype=bool)
        arr.flags.writeable = False
        object.__setattr__(self, "allowed", arr)
        if arr.ndim != 2:
            raise ValueError("mask must be two-dimensional")


def structural_mask(r: int, n: int) -> StructuralMask:
    """Zero pattern of the rotor model.

    Angle-rate targets (first r columns) may only load on the matching speed
    state: the bias, every other state, and all trig features are pinned to
    zero.  Speed-rate targets (last r columns) are unconstrained.
    """
    allowed = np.zeros((1 + 2 * r + 2 * n, 2 * r), dtype=bool)
    allowed[:, r:] = True
    for j in range(r):
        allowed[1 + r + j, j] = True
    return StructuralMask(allowed)


@dataclass(frozen=True)
class RegressionDiagnostics:
    """Bookkeeping from one sparse regression run.

    ``iterations`` counts threshold+refit passes and never exceeds
    ``initial_support`` (the nonzero count of the initial fit);
    ``support_history`` lists the surviving support size per pass.
    ``sub_lambda_survivors`` counts final entries whose magnitude landed
    below the threshold on the last refit; they are kept, not re-zeroed.
    """

    iterations: int
    support_history: tuple[int, ...]
    residual_fro: float
    objective: float
    initial_support: int
    sub_lambda_survivors: int

    def __post_init__(self):
        if self.iterations > self.initial_support:
            raise ValueError("iterations exceeded the initial support cardinality")


def build_library(
    window: MeasurementWindow, candidates: FrequencyCandidateSet
) -> FeatureLibrary:
    """Assemble [1, angles, speeds, sin/cos per candidate] at the window's
    timestamps.  The window is the trimmed regression window (m-1 rows)."""
    t = window.timestamps
    cols = [np.ones(window.m)]
    cols.extend(window.angle_cols[:, j] for j in range(window.r))
    cols.extend(window.speed_cols[:, j] for j in range(window.r))
    for f in candidates.frequencies:
        w = 2.0 * np.pi * f
        cols.append(np.sin(w * t))
        cols.append(np.cos(w * t))
    return FeatureLibrary(np.column_stack(cols), window.labels, candidates.frequencies)


def _as_matrix(library) -> np.ndarray:
    return library.matrix if isinstance(library, FeatureLibrary) else np.asarray(library, dtype=float)


def _as_targets(derivatives) -> np.ndarray:
    if isinstance(derivatives, DerivativeMatrix):
        return derivatives.values
    return np.asarray(derivatives, dtype=float)


def _column_lstsq(theta: np.ndarray, y: np.ndarray, target: int) -> np.ndarray:
    """Least squares via orthogonal factorization; the explicit
    (T'T)^-1 T' pseudo-inverse is algebraically identical but numerically
    unsafe.  Raises RankDeficient when the permitted submatrix loses rank."""
    sol, _, rank, sv = np.linalg.lstsq(theta, y, rcond=None)
    if rank < theta.shape[1]:
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        raise RankDeficient(
            f"target column {target}: permitted features have rank {rank} < "
            f"{theta.shape[1]} (condition estimate {cond:.3e})"
        )
    return sol


def _mask_array(mask: StructuralMask | None, shape) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    allowed = mask.allowed
    if allowed.shape != shape:
        raise ValueError(f"mask shape {allowed.shape} != coefficient shape {shape}")
    return allowed


def _coefficients(values: np.ndarray, library) -> CoefficientMatrix:
    if isinstance(library, FeatureLibrary):
        return CoefficientMatrix(values, library.labels, library.frequencies)
    return CoefficientMatrix(values)


def initial_fit(library, derivatives, mask: StructuralMask | None = None) -> CoefficientMatrix:
    """Masked least-squares initial estimate.

    Each target column is solved restricted to its permitted feature set, so
    structurally-zero positions come out exactly zero.  ``library`` may be a
    FeatureLibrary or a plain matrix.
    """
    theta = _as_matrix(library)
    xdot = _as_targets(derivatives)
    if theta.shape[0] != xdot.shape[0]:
        raise ValueError("library and derivatives disagree on row count")
    if theta.shape[0] < theta.shape[1]:
        raise ValueError("need at least as many rows as library columns")
    allowed = _mask_array(mask, (theta.shape[1], xdot.shape[1]))
    xi = np.zeros((theta.shape[1], xdot.shape[1]))
    for j in range(xdot.shape[1]):
        keep = allowed[:, j]
        if keep.any():
            xi[keep, j] = _column_lstsq(theta[:, keep], xdot[:, j], j)
    return _coefficients(xi, library)


def stlsq(
    library,
    derivatives,
    lam: float = DEFAULT_LAMBDA,
    mask: StructuralMask | None = None,
) -> tuple[CoefficientMatrix, RegressionDiagnostics]:
    """Sequential thresholded least squares.

    Entries with magnitude below ``lam`` are zeroed (a tie at exactly
    ``lam`` survives) and each target column is refit on its surviving
    support intersected with the structural mask; the loop stops when the
    support repeats or after card(initial fit) passes.  The final refit is
    not re-thresholded, so an entry may land below ``lam``; such survivors
    are counted in the diagnostics rather than silently zeroed.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    theta = _as_matrix(library)
    xdot = _as_targets(derivatives)
    allowed = _mask_array(mask, (theta.shape[1], xdot.shape[1]))
    xi = initial_fit(theta, xdot, mask).values.copy()
    card0 = int(np.count_nonzero(xi))
    support_old = np.zeros_like(allowed)
    iterations = 0
    history = []
    while iterations < card0:
        support = (np.abs(xi) >= lam) & allowed
        for j in range(xdot.shape[1]):
            keep = support[:, j]
            xi[:, j] = 0.0
            if keep.any():
                xi[keep, j] = _column_lstsq(theta[:, keep], xdot[:, j], j)
        iterations += 1
        history.append(int(support.sum()))
        if np.array_equal(support, support_old):
            break
        support_old = support
    residual = float(np.linalg.norm(theta @ xi - xdot))
    nonzero = np.abs(xi) > 0
    diagnostics = RegressionDiagnostics(
        iterations=iterations,
        support_history=tuple(history),
        residual_fro=residual,
        objective=residual**2 + lam**2 * int(nonzero.sum()),
        initial_support=card0,
        sub_lambda_survivors=int((nonzero & (np.abs(xi) < lam)).sum()),
    )
    return _coefficients(xi, library), diagnostics


def extract_forcing_block(xi: CoefficientMatrix) -> ZetaIndex:
    """Squared forcing magnitudes zeta = a^2 + b^2 from the paired sin/cos
    rows; only speed-rate target columns contribute (angle-rate columns are
    structurally zero)."""
    if xi.labels is None or xi.frequencies is None:
        raise ValueError("coefficient matrix carries no labels/frequencies")
    block = xi.forcing_block[:, xi.r :]
    a = block[0::2, :]
    b = block[1::2, :]
    return ZetaIndex(a * a + b * b, xi.frequencies, xi.labels)
