import numpy as np
import pytest

from models.otoc_models import OtocSeries
from models.rotor_models import RotorParams, WavepacketSpec, StateVector
from utils.error_handler import FitError, NormOverflowError, ParameterError


def _series(values, norm=None):
    times = np.arange(len(values))
    return OtocSeries(times=times, c_raw=values, norm=np.ones(len(values)) if norm is None else norm)


@pytest.fixture
def hermitian_params():
    return RotorParams(K=5.0, lam=0.0, hbar_eff=0.2, half_size=64, jitter_amplitude=0.0)


def _dense_otoc(matrix, p, psi, t):
    """Reference C(t) from explicit matrices"""
    power = np.linalg.matrix_power(matrix, t)
    p_t = power.conj().T @ np.diag(p) @ power
    commutator = p_t @ np.diag(p) - np.diag(p) @ p_t
    return -np.real(np.vdot(psi, commutator @ commutator @ psi))


def test_evolve_zero_steps_is_identity(otoc_service, floquet_service, small_params, random_vector):
    applicator = floquet_service.build_applicator(small_params, np.zeros(small_params.dimension))
    state = StateVector(amplitudes=random_vector(small_params.dimension))
    assert np.array_equal(otoc_service.evolve(applicator, state, 0).amplitudes, state.amplitudes)
    with pytest.raises(ParameterError):
        otoc_service.evolve(applicator, state, -1)


def test_evolve_matches_dense_power(otoc_service, floquet_service, small_params, random_vector):
    jitter = np.zeros(small_params.dimension)
    applicator = floquet_service.build_applicator(small_params, jitter)
    matrix = floquet_service.build_dense(small_params, jitter).matrix
    psi = random_vector(small_params.dimension)
    evolved = otoc_service.evolve_array(applicator, psi, 7)
    expected = np.linalg.matrix_power(matrix, 7) @ psi
    assert np.linalg.norm(evolved - expected) <= 1e-8 * np.linalg.norm(expected)


def test_hermitian_evolution_keeps_norm(otoc_service, floquet_service, hermitian_params, random_vector):
    applicator = floquet_service.build_applicator(hermitian_params, np.zeros(hermitian_params.dimension))
    psi = random_vector(hermitian_params.dimension)
    evolved = otoc_service.evolve_array(applicator, psi, 100)
    assert np.linalg.norm(evolved) == pytest.approx(np.linalg.norm(psi), rel=1e-8)


def test_norm_overflow_names_step(otoc_service, floquet_service):
    params = RotorParams(K=100.0, lam=1.0, hbar_eff=0.2, half_size=16)
    applicator = floquet_service.build_applicator(params, np.zeros(params.dimension))
    psi = np.zeros(params.dimension, dtype=complex)
    psi[params.half_size] = 1.0
    with pytest.raises(NormOverflowError) as excinfo:
        otoc_service.evolve_array(applicator, psi, 50)
    assert excinfo.value.context["step"] >= 1
    assert "step" in excinfo.value.message


def test_series_initial_values(otoc_service, hermitian_params):
    series = otoc_service.otoc_series(hermitian_params, WavepacketSpec(), 6)
    assert series.times.tolist() == list(range(7))
    assert series.c_raw[0] == 0.0
    assert series.norm[0] == pytest.approx(1.0, abs=1e-12)


def test_hermitian_series_keeps_norm_and_is_real(otoc_service, hermitian_params):
    series = otoc_service.otoc_series(hermitian_params, WavepacketSpec(), 12)
    assert np.allclose(series.norm, 1.0, atol=1e-8)
    assert np.all(series.c_raw[1:] > 0)
    assert series.max_imag_ratio < 1e-8


def test_hermitian_series_matches_dense_reference(otoc_service, floquet_service, rotor_service):
    params = RotorParams(K=5.0, lam=0.0, hbar_eff=0.2, half_size=16, jitter_amplitude=0.0)
    wavepacket = WavepacketSpec(k0=0, sigma=2.0)
    series = otoc_service.otoc_series(params, wavepacket, 8)
    matrix = floquet_service.build_dense(params, np.zeros(params.dimension)).matrix
    psi = rotor_service.gaussian_state(wavepacket, params).amplitudes
    p = params.momenta()
    for t in range(1, 9):
        assert series.c_raw[t] == pytest.approx(_dense_otoc(matrix, p, psi, t), rel=1e-6)


def test_broken_series_matches_dense_reference(otoc_service, floquet_service, rotor_service, small_params):
    wavepacket = WavepacketSpec(k0=0, sigma=2.0)
    series = otoc_service.otoc_series(small_params, wavepacket, 6)
    matrix = floquet_service.build_dense(small_params, np.zeros(small_params.dimension)).matrix
    psi = rotor_service.gaussian_state(wavepacket, small_params).amplitudes
    p = small_params.momenta()
    for t in range(1, 7):
        assert series.c_raw[t] == pytest.approx(_dense_otoc(matrix, p, psi, t), rel=1e-6)
        state = np.linalg.matrix_power(matrix, t) @ psi
        assert series.norm[t] == pytest.approx(np.vdot(state, state).real, rel=1e-8)


def test_momentum_operator_action(hermitian_params):
    p = hermitian_params.momenta()
    k = hermitian_params.momentum_indices()
    basis = np.zeros(hermitian_params.dimension)
    basis[70] = 1.0
    assert np.array_equal(p * basis, hermitian_params.hbar_eff * k[70] * basis)


def test_series_rejects_bad_inputs(otoc_service, hermitian_params):
    with pytest.raises(ParameterError):
        otoc_service.otoc_series(hermitian_params, WavepacketSpec(), 0)
    with pytest.raises(ParameterError):
        otoc_service.otoc_series(hermitian_params, WavepacketSpec(k0=40), 3)


def test_fit_alpha_exact_exponential(otoc_service):
    t = np.arange(41)
    fit = otoc_service.fit_alpha(_series(np.exp(4.0 * 0.03 * t), norm=np.exp(2.0 * 0.03 * t)))
    assert fit.alpha == pytest.approx(0.03, abs=1e-6)
    assert not fit.clamped
    assert fit.window[1] == 40


def test_fit_alpha_clamps_decay(otoc_service, log_messages):
    t = np.arange(21)
    fit = otoc_service.fit_alpha(_series(np.exp(-0.5 * t)))
    assert fit.alpha == 0.0
    assert fit.clamped
    assert fit.slope < 0
    assert any(r["level"].name == "WARNING" for r in log_messages)


def test_fit_alpha_ignores_growth_with_flat_norm(otoc_service):
    t = np.arange(41)
    fit = otoc_service.fit_alpha(_series(np.exp(4.0 * 0.03 * t)))
    assert fit.alpha == 0.0
    assert fit.clamped
    assert fit.slope == pytest.approx(0.12)


def test_hermitian_series_has_zero_alpha(otoc_service, hermitian_params):
    series = otoc_service.otoc_series(hermitian_params, WavepacketSpec(), 12)
    fit = otoc_service.fit_alpha(series)
    assert fit.alpha == 0.0
    assert fit.clamped
    analyzed = otoc_service.analyze(series)
    assert analyzed.alpha_fit == 0.0
    assert np.array_equal(analyzed.c_norm, series.c_raw)


def test_fit_alpha_needs_four_points(otoc_service):
    with pytest.raises(FitError):
        otoc_service.fit_alpha(_series(np.array([0.0, 1.0, 2.0, 3.0])))


def test_norm_slope(otoc_service):
    t = np.arange(31)
    series = _series(np.exp(t), norm=np.exp(0.6 * t))
    assert otoc_service.norm_slope(series) == pytest.approx(0.6)


def test_normalize(otoc_service):
    t = np.arange(21)
    raw = 3.0 * np.exp(4.0 * 0.25 * t)
    raw[0] = 0.0
    series = _series(raw, norm=np.exp(0.5 * t))
    unchanged = otoc_service.normalize(series, alpha=0.0)
    assert np.array_equal(unchanged.c_norm, series.c_raw)
    fitted = otoc_service.normalize(series)
    assert fitted.alpha_fit == pytest.approx(0.25)
    assert np.allclose(fitted.c_norm[1:], 3.0, rtol=1e-6)
    with pytest.raises(ParameterError):
        otoc_service.normalize(series, alpha=float("nan"))


def _saturating(lyapunov=0.8, amplitude=5.0, plateau_from=6, length=16):
    t = np.arange(length)
    values = amplitude * np.exp(2.0 * lyapunov * (np.minimum(t, plateau_from) - 1))
    values[0] = 0.0
    return OtocSeries(times=t, c_raw=values, norm=np.ones(length), c_norm=values)


def test_lyapunov_exact_fit(otoc_service):
    fit = otoc_service.lyapunov_fit(_saturating())
    assert fit.lyapunov == pytest.approx(0.8, abs=1e-3)
    assert fit.amplitude == pytest.approx(5.0, rel=1e-6)
    assert fit.window == (1, 6)


def test_lyapunov_requires_growth(otoc_service):
    flat = np.ones(10)
    flat[0] = 0.0
    series = OtocSeries(times=np.arange(10), c_raw=flat, norm=np.ones(10), c_norm=flat)
    with pytest.raises(FitError):
        otoc_service.lyapunov(series)


def test_lyapunov_requires_normalized_series(otoc_service):
    with pytest.raises(FitError):
        otoc_service.lyapunov(_series(np.exp(np.arange(10.0))))


def test_analyze_attaches_fit(otoc_service):
    series = _saturating()
    analyzed = otoc_service.analyze(series.model_copy(update={"c_norm": None}), alpha=0.0)
    assert analyzed.lambda_fit == pytest.approx(0.8, abs=1e-3)
    assert analyzed.fit_window == (1, 6)
    metadata = analyzed.fit_metadata()
    assert metadata["fit_window"] == [1, 6]
    assert metadata["alpha_fit"] == 0.0


def test_analyze_tolerates_missing_regime(otoc_service):
    flat = np.ones(10)
    flat[0] = 0.0
    analyzed = otoc_service.analyze(_series(flat), alpha=0.0)
    assert analyzed.lambda_fit is None
    with pytest.raises(FitError):
        otoc_service.analyze(_series(flat), alpha=0.0, require_lyapunov=True)
