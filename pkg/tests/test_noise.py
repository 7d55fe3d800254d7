import numpy as np
import pytest

from oqnet.errors import ValidationError
from oqnet.network import NetworkSpec, NoiseCalibration, paper_trimer
from oqnet.noise import (
    PIECEWISE,
    WIENER,
    NoiseRealization,
    num_segments,
    sample_piecewise,
    sample_wiener,
    sample_wiener_step,
    trajectory_rng,
)


def test_zero_sigma_gives_zero_detunings():
    spec = paper_trimer().scaled(0.0)
    noise = sample_piecewise(spec, 12.0, seed=1)
    assert noise.detunings.shape == (12, 3)
    assert np.all(noise.detunings == 0)


def test_piecewise_is_deterministic():
    spec = paper_trimer()
    a = sample_piecewise(spec, 12.0, seed=42, trajectory=3)
    b = sample_piecewise(spec, 12.0, seed=42, trajectory=3)
    assert np.array_equal(a.detunings, b.detunings)
    c = sample_piecewise(spec, 12.0, seed=42, trajectory=4)
    assert not np.array_equal(a.detunings, c.detunings)


def test_last_segment_truncated():
    noise = sample_piecewise(paper_trimer(), 12.5, seed=0)
    assert noise.num_segments == 13
    np.testing.assert_allclose(noise.segment_edges()[-2:], [12.0, 12.5])


def test_segment_count_not_padded_by_roundoff():
    assert num_segments(12.0, 0.1) == 120
    assert num_segments(0.3, 0.1) == 3


def test_nonpositive_length():
    with pytest.raises(ValidationError):
        sample_piecewise(paper_trimer(), 0.0, seed=0)
    with pytest.raises(ValidationError):
        sample_wiener([1.0], -1.0, 1e-3, seed=0)


def test_piecewise_needs_calibration():
    spec = NetworkSpec([0, 0], [[0, 1], [1, 0]], gamma=[1, 1])
    with pytest.raises(ValidationError):
        sample_piecewise(spec, 1.0, seed=0)


def test_piecewise_variance_matches_calibration():
    spec = paper_trimer("classical")
    m = 10_000
    draws = np.stack([sample_piecewise(spec, 12.0, seed=9, trajectory=j).detunings for j in range(m)])
    site1 = draws[:, :, 0]
    var = site1.var(axis=0, ddof=1)
    target = 1.3143**2
    se = target * np.sqrt(2 / (m - 1))
    assert np.all(np.abs(var - target) <= 3 * se)


def test_piecewise_ensemble_statistics():
    spec = paper_trimer("quantum")
    m = 2000
    draws = np.stack([sample_piecewise(spec, 12.0, seed=5, trajectory=j).detunings for j in range(m)])
    n_samples = m * 12
    sigma = spec.calibration.sigma
    flat = draws.reshape(-1, 3)
    assert np.all(np.abs(flat.mean(axis=0)) <= 4 * sigma / np.sqrt(n_samples))
    var = flat.var(axis=0, ddof=1)
    assert np.all(np.abs(var - sigma**2) <= 4 * sigma**2 * np.sqrt(2 / (n_samples - 1)))
    corr = np.corrcoef(flat.T)
    assert np.all(np.abs(corr[np.triu_indices(3, 1)]) <= 4 / np.sqrt(n_samples))


def test_wiener_step_zero_rate_contributes_nothing():
    inc = sample_wiener_step([0.0, 2.0], 1e-3, np.random.default_rng(0))
    assert inc.scaled[0] == 0.0
    assert inc.scaled[1] != 0.0


def test_wiener_step_rejects_bad_step():
    with pytest.raises(ValidationError):
        sample_wiener_step([1.0], 0.0, np.random.default_rng(0))


def test_wiener_increment_statistics():
    h = 1e-3
    n = 100_000
    rng = trajectory_rng(11)
    dW = np.stack([sample_wiener_step(np.ones(2), h, rng).dW for _ in range(n)])
    assert np.all(np.abs(dW.mean(axis=0)) <= 3 * np.sqrt(h / n))
    var = dW.var(axis=0, ddof=1)
    assert np.all(np.abs(var - h) <= 3 * h * np.sqrt(2 / (n - 1)))
    cross = dW[:, 0] * dW[:, 1]
    assert abs(cross.mean()) <= 3 * cross.std(ddof=1) / np.sqrt(n)


def test_block_draw_matches_stepwise_draws():
    gamma = np.array([1.7, 0.4, 2.2])
    h = 0.01
    noise = sample_wiener(gamma, 0.5, h, seed=77, trajectory=2)
    rng = trajectory_rng(77, 2)
    steps = np.stack([sample_wiener_step(gamma, h, rng).scaled / h for _ in range(50)])
    assert np.array_equal(noise.detunings, steps)


def test_wiener_realization_shape_and_mode():
    noise = sample_wiener([1.0, 1.0], 1.0, 1e-3, seed=0)
    assert noise.mode == WIENER
    assert noise.detunings.shape == (1000, 2)


def test_realization_is_read_only():
    noise = sample_wiener([1.0], 0.1, 1e-2, seed=0)
    with pytest.raises(ValueError):
        noise.detunings[0, 0] = 1.0


def test_realization_validates_row_count():
    with pytest.raises(ValidationError):
        NoiseRealization(PIECEWISE, 1.0, np.zeros((3, 2)), 0, 12.0)


def test_csv_round_trip(tmp_path):
    noise = sample_piecewise(paper_trimer(), 7.5, seed=123, trajectory=8)
    path = tmp_path / "noise.csv"
    noise.to_csv(path)
    back = NoiseRealization.from_csv(path)
    assert back.mode == PIECEWISE
    assert (back.seed, back.trajectory, back.total_length) == (123, 8, 7.5)
    assert np.array_equal(back.detunings, noise.detunings)


def test_rng_rejects_negative_seed():
    with pytest.raises(ValueError):
        trajectory_rng(-1)


def test_large_seed_supported():
    a = trajectory_rng(2**64 - 1, 0).standard_normal(3)
    b = trajectory_rng(2**64 - 1, 0).standard_normal(3)
    assert np.array_equal(a, b)


def test_calibration_noise_scaling():
    spec = NetworkSpec([0, 0], [[0, 1], [1, 0]], calibration=NoiseCalibration([0.0, 2.0], 0.5))
    noise = sample_piecewise(spec, 2.0, seed=3)
    assert noise.num_segments == 4
    assert np.all(noise.detunings[:, 0] == 0)
