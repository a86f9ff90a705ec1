import numpy as np
import pytest

from foloc.errors import NonUniformSampling, ShapeMismatch, TooShort
from foloc.types import (
    CoefficientMatrix,
    Detection,
    FrequencyCandidateSet,
    MeasurementWindow,
    ZetaIndex,
    validate_window,
)


def _window(m=16, r=3, rate=30.0, rng=None):
    rng = rng or np.random.default_rng(0)
    return validate_window(
        rng.standard_normal((m, r)), rng.standard_normal((m, r)), rate
    )


def test_validate_window_paper_scale():
    """1200 samples at 30 Hz, 29 machines."""
    rng = np.random.default_rng(1)
    win = validate_window(
        rng.standard_normal((1200, 29)), rng.standard_normal((1200, 29)), 30.0
    )
    assert win.m == 1200
    assert win.r == 29
    assert win.labels[0] == "G1" and len(set(win.labels)) == 29
    assert win.timestamps[1] == pytest.approx(1 / 30.0, abs=0)


def test_validate_window_too_short():
    rng = np.random.default_rng(2)
    with pytest.raises(TooShort):
        validate_window(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)), 30.0)


def test_validate_window_nonuniform():
    rng = np.random.default_rng(3)
    t = np.array([0.0, 1 / 30, 3 / 30, 4 / 30, 5 / 30, 6 / 30])
    with pytest.raises(NonUniformSampling):
        validate_window(
            rng.standard_normal((6, 2)), rng.standard_normal((6, 2)), 30.0,
            timestamps=t,
        )


def test_validate_window_shape_mismatch():
    rng = np.random.default_rng(4)
    with pytest.raises(ShapeMismatch):
        validate_window(rng.standard_normal((8, 3)), rng.standard_normal((8, 2)), 30.0)


def test_duplicate_labels_rejected():
    rng = np.random.default_rng(5)
    with pytest.raises(ValueError):
        validate_window(
            rng.standard_normal((8, 2)), rng.standard_normal((8, 2)), 30.0,
            labels=("G1", "G1"),
        )


def test_window_arrays_locked():
    win = _window()
    with pytest.raises(ValueError):
        win.angle_cols[0, 0] = 1.0
    with pytest.raises(ValueError):
        win.timestamps[0] = -1.0


def test_mean_centered_flag():
    win = _window(m=64)
    centered = MeasurementWindow(
        win.sample_rate,
        win.timestamps,
        win.labels,
        win.angle_cols - win.angle_cols.mean(axis=0),
        win.speed_cols - win.speed_cols.mean(axis=0),
    )
    assert centered.mean_centered
    shifted = MeasurementWindow(
        win.sample_rate, win.timestamps, win.labels,
        win.angle_cols + 0.5, win.speed_cols,
    )
    assert not shifted.mean_centered


def test_channels_order_and_state_matrix():
    win = _window(r=2)
    names = [name for name, _ in win.channels()]
    assert names == ["G1:angle", "G2:angle", "G1:speed", "G2:speed"]
    assert win.state_matrix().shape == (win.m, 4)
    assert np.array_equal(win.state_matrix()[:, 1], win.angle_cols[:, 1])


def test_first_seconds_keeps_grid():
    win = _window(m=90, rate=30.0)
    head = win.first_seconds(1.0)
    assert head.m == 30
    assert np.array_equal(head.timestamps, win.timestamps[:30])
    assert win.first_seconds(100.0) is win


def test_candidate_set_invariants():
    cs = FrequencyCandidateSet(np.array([0.5, 0.55]), bin_width=0.025)
    assert cs.n == 2
    with pytest.raises(ValueError):
        FrequencyCandidateSet(np.array([0.55, 0.5]), bin_width=0.025)
    with pytest.raises(ValueError):
        FrequencyCandidateSet(np.array([-0.1, 0.5]), bin_width=0.025)
    with pytest.raises(ValueError):
        # spacing at half a bin is a duplicate under the merge rule
        FrequencyCandidateSet(np.array([0.5, 0.5125]), bin_width=0.025)


def test_coefficient_matrix_views():
    r, n = 2, 2
    values = np.arange((1 + 2 * r + 2 * n) * 2 * r, dtype=float).reshape(-1, 2 * r)
    xi = CoefficientMatrix(values, labels=("A", "B"), frequencies=np.array([0.5, 1.0]))
    assert xi.r == r and xi.n == n
    assert xi.bias_row.shape == (2 * r,)
    assert xi.jacobian_block.shape == (2 * r, 2 * r)
    assert xi.forcing_block.shape == (2 * n, 2 * r)
    assert np.array_equal(xi.state_major, values.T)
    assert np.array_equal(
        np.vstack([xi.bias_row, xi.jacobian_block, xi.forcing_block]), values
    )


def test_zeta_requires_nonnegative():
    with pytest.raises(ValueError):
        ZetaIndex(np.array([[1.0, -0.1]]), np.array([0.5]), ("A", "B"))


def test_zeta_from_random_coefficients_nonnegative():
    """Any coefficient matrix yields a non-negative index."""
    from foloc.sindy import extract_forcing_block

    rng = np.random.default_rng(6)
    for _ in range(50):
        r, n = rng.integers(2, 5), rng.integers(1, 4)
        xi = CoefficientMatrix(
            rng.standard_normal((1 + 2 * r + 2 * n, 2 * r)),
            labels=tuple(f"M{i}" for i in range(r)),
            frequencies=np.sort(rng.uniform(0.1, 5.0, n)),
        )
        zeta = extract_forcing_block(xi)
        assert np.all(zeta.values >= 0)


def test_detection_fields():
    d = Detection("G7", 0.5, 0.25, 1)
    assert d.machine == "G7" and d.rank == 1
