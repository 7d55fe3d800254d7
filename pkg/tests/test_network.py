import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqnet.errors import ValidationError
from oqnet.network import (
    PRESETS,
    NetworkSpec,
    NoiseCalibration,
    calibrate_dephasing,
    paper_trimer,
    require_valid,
    validate,
)


def test_classical_calibration():
    gamma = calibrate_dephasing(NoiseCalibration([1.3143, 1.3204, 1.3283], 1.0))
    np.testing.assert_allclose(gamma, [1.7275, 1.7435, 1.7645], atol=5e-4)


def test_quantum_calibration():
    gamma = calibrate_dephasing(NoiseCalibration([1.1407, 1.112, 1.1371], 1.0))
    np.testing.assert_allclose(gamma, [1.3012, 1.2365, 1.2930], atol=5e-4)


def test_zero_noise_gives_zero_rates():
    assert np.all(calibrate_dephasing(NoiseCalibration([0.0, 0.0, 0.0], 1.0)) == 0)


def test_calibration_is_exact_product():
    calib = NoiseCalibration([0.7, 1.9], 2.5)
    assert np.array_equal(calibrate_dephasing(calib), np.array([0.7, 1.9]) ** 2 * 2.5)


@pytest.mark.parametrize("sigma, dz", [([-0.1, 1.0], 1.0), ([1.0, 1.0], 0.0), ([1.0], -2.0)])
def test_invalid_calibration(sigma, dz):
    with pytest.raises(ValidationError):
        NoiseCalibration(sigma, dz)


@given(
    st.lists(st.floats(0, 10), min_size=1, max_size=6),
    st.floats(0.01, 5),
    st.floats(0.0, 4),
)
def test_calibration_homogeneous_of_degree_two(sigma, dz, c):
    base = calibrate_dephasing(NoiseCalibration(sigma, dz))
    scaled = calibrate_dephasing(NoiseCalibration(np.array(sigma) * c, dz))
    np.testing.assert_allclose(scaled, c**2 * base, rtol=1e-12, atol=1e-300)


@given(st.lists(st.floats(0, 10), min_size=2, max_size=5), st.integers(0, 4), st.floats(0, 3))
def test_calibration_monotone(sigma, idx, bump):
    idx %= len(sigma)
    bigger = list(sigma)
    bigger[idx] += bump
    a = calibrate_dephasing(NoiseCalibration(sigma, 1.0))
    b = calibrate_dephasing(NoiseCalibration(bigger, 1.0))
    assert np.all(b >= a)


@pytest.mark.parametrize("profile, gamma", [
    ("classical", [1.7275, 1.7435, 1.7645]),
    ("quantum", [1.3012, 1.2365, 1.2930]),
])
def test_trimer(profile, gamma):
    spec = paper_trimer(profile)
    assert spec.num_sites == 3
    assert validate(spec) == []
    np.testing.assert_array_equal(spec.beta_mean, [1, 1, -1])
    np.testing.assert_array_equal(spec.kappa, spec.kappa.T)
    assert np.all(np.diag(spec.kappa) == 0)
    assert spec.kappa[0, 1] == 2.0 and spec.kappa[0, 2] == 0.6 and spec.kappa[1, 2] == 0.6
    np.testing.assert_allclose(spec.gamma, gamma, atol=5e-4)


def test_unknown_profile():
    with pytest.raises(ValidationError):
        paper_trimer("lukewarm")


def test_asymmetric_coupling_reported():
    spec = NetworkSpec([0, 0, 0], [[0, 2, 0], [1, 0, 0], [0, 0, 0]], gamma=[1, 1, 1])
    assert validate(spec) == ["asymmetric coupling (1,2)"]


def test_negative_rate_reported():
    spec = NetworkSpec([0, 0], [[0, 1], [1, 0]], gamma=[1.0, -0.1])
    assert validate(spec) == ["negative dephasing rate at site 2"]


def test_all_violations_listed():
    spec = NetworkSpec([0, 0, 0], [[1, 2, 0], [1, 0, 0], [0, 0, 0]], gamma=[-1, 1, -1])
    problems = validate(spec)
    assert "nonzero self-coupling at site 1" in problems
    assert "asymmetric coupling (1,2)" in problems
    assert "negative dephasing rate at site 1" in problems
    assert "negative dephasing rate at site 3" in problems
    with pytest.raises(ValidationError) as err:
        require_valid(spec)
    assert err.value.violations == problems


def test_non_finite_and_shape():
    assert validate(NetworkSpec([0, np.nan], [[0, 1], [1, 0]], gamma=[1, 1]))
    assert validate(NetworkSpec([0, 0], [[0, 1, 0], [1, 0, 0]], gamma=[1, 1]))


def test_gamma_and_calibration_must_agree():
    calib = NoiseCalibration([1.0, 2.0], 1.0)
    ok = NetworkSpec([0, 0], [[0, 1], [1, 0]], gamma=[1.0, 4.0], calibration=calib)
    assert validate(ok) == []
    bad = NetworkSpec([0, 0], [[0, 1], [1, 0]], gamma=[1.0, 4.0 * (1 + 1e-9)], calibration=calib)
    assert validate(bad) == ["gamma disagrees with sigma**2 * correlation_length"]


def test_missing_rates():
    with pytest.raises(ValidationError):
        NetworkSpec([0, 0], [[0, 1], [1, 0]])


def test_spec_is_immutable():
    spec = paper_trimer()
    with pytest.raises(ValueError):
        spec.kappa[0, 1] = 5.0
    with pytest.raises(AttributeError):
        spec.gamma = np.zeros(3)


def test_scaled_keeps_calibration_consistent():
    spec = paper_trimer("quantum").scaled(10.0)
    assert validate(spec) == []
    np.testing.assert_allclose(spec.gamma, 10 * paper_trimer("quantum").gamma, rtol=1e-12)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_dict_round_trip(name):
    spec = PRESETS[name]()
    back = NetworkSpec.from_dict(spec.to_dict())
    for attr in ("beta_mean", "kappa", "gamma"):
        np.testing.assert_array_equal(getattr(back, attr), getattr(spec, attr))
    assert "sigma" in spec.to_dict() and "gamma" not in spec.to_dict()


def test_dict_with_gamma_only():
    data = {"num_sites": 2, "beta_mean": [0, 0], "kappa": [[0, 1], [1, 0]], "gamma": [0.5, 0.5]}
    spec = NetworkSpec.from_dict(data)
    assert spec.to_dict() == {**data, "beta_mean": [0.0, 0.0], "kappa": [[0.0, 1.0], [1.0, 0.0]]}


@pytest.mark.parametrize("extra", [
    {},
    {"gamma": [1, 1], "sigma": [1, 1], "correlation_length": 1.0},
])
def test_dict_needs_exactly_one_rate_source(extra):
    data = {"num_sites": 2, "beta_mean": [0, 0], "kappa": [[0, 1], [1, 0]], **extra}
    with pytest.raises(ValidationError):
        NetworkSpec.from_dict(data)


def test_dict_num_sites_mismatch():
    data = {"num_sites": 3, "beta_mean": [0, 0], "kappa": [[0, 1], [1, 0]], "gamma": [1, 1]}
    with pytest.raises(ValidationError):
        NetworkSpec.from_dict(data)


def test_dict_invalid_network_rejected():
    data = {"num_sites": 2, "beta_mean": [0, 0], "kappa": [[0, 1], [2, 0]], "gamma": [1, 1]}
    with pytest.raises(ValidationError, match="asymmetric"):
        NetworkSpec.from_dict(data)
