import math

import numpy as np
import pytest
from pydantic import ValidationError

from models.rotor_models import RotorParams, WavepacketSpec, StateVector
from services.rotor_service import substream
from utils.error_handler import ParameterError


def test_rotor_params_defaults_and_alias():
    params = RotorParams(**{"K": 2.0, "lambda": 0.3})
    assert params.lam == 0.3
    assert params.hbar_eff == 0.2
    assert params.dimension == 128
    assert params.echo()["lambda"] == 0.3


def test_rotor_params_reject_invalid_values():
    with pytest.raises(ValidationError):
        RotorParams(K=-1.0)
    with pytest.raises(ValidationError):
        RotorParams(K=1.0, lam=-0.1)
    with pytest.raises(ValidationError):
        RotorParams(K=1.0, hbar_eff=0.0)
    with pytest.raises(ValidationError):
        RotorParams(K=1.0, half_size=1)
    with pytest.raises(ValidationError):
        RotorParams(K=1.0, kick=3)


def test_momentum_indices_cover_window():
    params = RotorParams(K=1.0, half_size=4)
    assert params.momentum_indices().tolist() == [-4, -3, -2, -1, 0, 1, 2, 3]
    assert np.allclose(params.momenta(), 0.2 * params.momentum_indices())


def test_state_vector_validation():
    with pytest.raises(ValidationError):
        StateVector(amplitudes=np.ones(3))
    with pytest.raises(ValidationError):
        StateVector(amplitudes=np.array([1.0, np.nan]))
    state = StateVector(amplitudes=[1.0, 0.0, 0.0, 0.0])
    assert state.half_size == 2
    assert not state.amplitudes.flags.writeable


@pytest.mark.parametrize("theta, K, lam, expected", [
    (0.0, 2.0, 0.0, 2.0 + 0.0j),
    (math.pi / 2, 1.0, 1.0, 1j / math.sqrt(2.0)),
])
def test_potential_values(rotor_service, theta, K, lam, expected):
    value = rotor_service.potential(theta, RotorParams(K=K, lam=lam))
    assert isinstance(value, complex)
    assert value == pytest.approx(expected, abs=1e-12)


def test_potential_large_lambda_limit(rotor_service):
    value = rotor_service.potential(math.pi / 2, RotorParams(K=2.0, lam=1e6))
    assert value == pytest.approx(2j, rel=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.01, 1.0, 50.0])
def test_potential_bounded_and_pt_symmetric(rotor_service, lam):
    params = RotorParams(K=3.0, lam=lam)
    theta = np.linspace(0.0, 2.0 * np.pi, 2001)
    values = rotor_service.potential(theta, params)
    assert np.all(np.abs(values) <= 3.0 + 1e-12)
    assert np.allclose(rotor_service.potential(-theta, params), np.conj(values), atol=1e-12)


def test_gaussian_state_normalized_and_centered(rotor_service):
    params = RotorParams(K=1.0, half_size=64)
    state = rotor_service.gaussian_state(WavepacketSpec(k0=5, sigma=4.0), params)
    a = state.amplitudes
    assert state.norm_squared() == pytest.approx(1.0, abs=1e-12)
    assert int(np.argmax(np.abs(a))) == 5 + params.half_size
    assert np.all(a.real > 0)
    assert np.all(a.imag == 0)


def test_gaussian_state_symmetric_and_ratio(rotor_service):
    params = RotorParams(K=1.0, hbar_eff=0.2, half_size=64)
    a = rotor_service.gaussian_state(WavepacketSpec(k0=0, sigma=4.0), params).amplitudes
    n = params.half_size
    for j in range(1, n):
        assert abs(a[n + j]) == pytest.approx(abs(a[n - j]), rel=1e-12)
    assert (a[n + 1] / a[n]).real == pytest.approx(math.exp(-0.04 / 32.0), rel=1e-12)


def test_gaussian_state_rejects_packet_outside_zone(rotor_service):
    params = RotorParams(K=1.0, hbar_eff=0.2, half_size=64)
    with pytest.raises(ParameterError):
        rotor_service.gaussian_state(WavepacketSpec(k0=20, sigma=4.0), params)


def test_gaussian_state_warns_on_single_state(rotor_service, log_messages):
    params = RotorParams(K=1.0, hbar_eff=1.0, half_size=8)
    state = rotor_service.gaussian_state(WavepacketSpec(k0=0, sigma=0.01), params)
    assert state.norm_squared() == pytest.approx(1.0)
    assert any(r["level"].name == "WARNING" for r in log_messages)


def test_mass_jitter_range_and_reproducibility(rotor_service):
    params = RotorParams(K=1.0, half_size=200, jitter_amplitude=1e-3, seed=11)
    first = rotor_service.sample_mass_jitter(params)
    second = rotor_service.sample_mass_jitter(params)
    assert first.shape == (400,)
    assert np.all((first >= 0.0) & (first <= 1e-3))
    assert first.tobytes() == second.tobytes()
    other = rotor_service.sample_mass_jitter(params.model_copy(update={"seed": 12}))
    assert not np.array_equal(first, other)


def test_mass_jitter_zero_amplitude(rotor_service):
    params = RotorParams(K=1.0, half_size=8, jitter_amplitude=0.0)
    assert np.array_equal(rotor_service.sample_mass_jitter(params), np.zeros(16))


def test_substreams_are_independent():
    a = substream(5, 0, 1).uniform(size=8)
    b = substream(5, 1, 0).uniform(size=8)
    again = substream(5, 0, 1).uniform(size=8)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, again)
