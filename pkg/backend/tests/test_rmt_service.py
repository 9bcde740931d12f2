import numpy as np
import pytest
from pydantic import ValidationError

from models.ensemble_models import EnsembleKind, EnsembleSpec
from services.rmt_service import pt_reflect


def _spec(kind, dim=64, trials=2, seed=9):
    return EnsembleSpec(kind=kind, dim=dim, trials=trials, seed=seed)


def test_ensemble_spec_validation():
    with pytest.raises(ValidationError):
        EnsembleSpec(kind="ginue", dim=4)
    with pytest.raises(ValidationError):
        EnsembleSpec(kind="ginue", trials=0)
    with pytest.raises(ValidationError):
        EnsembleSpec(kind="gue")
    assert EnsembleSpec(kind="ptsymmetric").kind == EnsembleKind.PT_SYMMETRIC


def test_samples_are_deterministic_per_trial(rmt_service):
    spec = _spec(EnsembleKind.GINUE)
    first = rmt_service.sample_matrix(spec, 0)
    assert np.array_equal(first, rmt_service.sample_matrix(spec, 0))
    assert not np.array_equal(first, rmt_service.sample_matrix(spec, 1))


def test_ginue_and_ginoe_entries(rmt_service):
    ginue = rmt_service.sample_matrix(_spec(EnsembleKind.GINUE, dim=200), 0)
    assert np.iscomplexobj(ginue)
    assert np.std(ginue.real) == pytest.approx(1.0, abs=0.02)
    assert np.std(ginue.imag) == pytest.approx(1.0, abs=0.02)
    ginoe = rmt_service.sample_matrix(_spec(EnsembleKind.GINOE, dim=200), 0)
    assert np.isrealobj(ginoe)


def test_aidagger_is_transpose_symmetric(rmt_service):
    matrix = rmt_service.sample_matrix(_spec(EnsembleKind.AI_DAGGER), 0)
    assert np.max(np.abs(matrix - matrix.T)) == 0.0


def test_ptsymmetric_commutes_with_pt(rmt_service):
    matrix = rmt_service.sample_matrix(_spec(EnsembleKind.PT_SYMMETRIC), 0)
    assert np.max(np.abs(matrix - pt_reflect(matrix))) == 0.0


def test_goe_is_real_symmetric(rmt_service):
    matrix = rmt_service.sample_matrix(_spec(EnsembleKind.GOE), 0)
    assert np.isrealobj(matrix)
    assert np.array_equal(matrix, matrix.T)


def test_ginoe_two_by_two_quadratic_formula(rmt_service):
    spec = EnsembleSpec(kind=EnsembleKind.GINOE, dim=8, trials=1, seed=2)
    block = rmt_service.sample_matrix(spec, 0)[:2, :2]
    trace, det = np.trace(block), np.linalg.det(block)
    disc = np.sqrt(complex(trace ** 2 - 4.0 * det))
    roots = np.array([(trace + disc) / 2.0, (trace - disc) / 2.0])
    eigenvalues = rmt_service.spectral_service.eigenvalues(block)
    for value in eigenvalues:
        assert np.min(np.abs(roots - value)) < 1e-10
    if abs(roots[0].imag) > 0:
        assert roots[0] == pytest.approx(np.conj(roots[1]))


def test_real_and_pt_symmetric_spectra_are_conjugation_closed(rmt_service):
    for kind in (EnsembleKind.GINOE, EnsembleKind.PT_SYMMETRIC):
        eigenvalues = rmt_service.sample_spectrum(_spec(kind, dim=100), 0)
        for value in eigenvalues:
            assert np.min(np.abs(eigenvalues - np.conj(value))) < 1e-8


def test_point_processes(rmt_service):
    real = rmt_service.sample_spectrum(_spec(EnsembleKind.POISSON_REAL, dim=500), 0)
    assert np.all(real.imag == 0)
    assert np.all(np.diff(real.real) >= 0)
    plane = rmt_service.sample_spectrum(_spec(EnsembleKind.POISSON_2D, dim=500), 0)
    assert np.all(np.abs(plane) <= 1.0)


def test_ginue_clsr_baseline(rmt_service):
    result = rmt_service.ensemble_clsr(_spec(EnsembleKind.GINUE, dim=400, trials=4))
    assert result.mean_r == pytest.approx(0.738, abs=0.03)
    assert result.mean_neg_cos == pytest.approx(0.233, abs=0.05)
    assert result.std_r >= 0
    assert len(result.per_trial_r) == 4


def test_poisson_plane_is_distinct_from_ginibre(rmt_service):
    poisson = rmt_service.ensemble_clsr(_spec(EnsembleKind.POISSON_2D, dim=2000, trials=3))
    assert poisson.mean_r == pytest.approx(2.0 / 3.0, abs=0.02)
    assert poisson.mean_r < 0.70


def test_parallel_trials_match_serial(rmt_service):
    spec = _spec(EnsembleKind.GINOE, dim=60, trials=4)
    serial = rmt_service.ensemble_clsr(spec, parallelism=1)
    parallel = rmt_service.ensemble_clsr(spec, parallelism=2)
    assert serial.per_trial_r == parallel.per_trial_r
    assert serial.per_trial_neg_cos == parallel.per_trial_neg_cos


def test_summary_omits_per_trial_values(rmt_service):
    result = rmt_service.ensemble_clsr(_spec(EnsembleKind.GINUE, dim=32, trials=1))
    summary = result.summary()
    assert summary["kind"] == "ginue"
    assert summary["dim"] == 32
    assert summary["std_r"] == 0.0
    assert "per_trial_r" not in summary
