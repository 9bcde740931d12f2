import numpy as np
from concurrent.futures import ProcessPoolExecutor
from loguru import logger
from typing import List, Optional, Tuple

from models.ensemble_models import EnsembleKind, EnsembleSpec, EnsembleResult
from services.rotor_service import substream
from services.spectral_service import SpectralService
from services.stats_service import StatsService
from utils.error_handler import SpectrumError

# Ensembles whose "spectrum" is sampled directly rather than diagonalized
POINT_PROCESSES = {EnsembleKind.POISSON_REAL, EnsembleKind.POISSON_2D}


def _complex_gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def pt_reflect(matrix: np.ndarray) -> np.ndarray:
    """P conj(M) P with P the index-reversal permutation"""
    return np.conj(matrix)[::-1, ::-1]


class RandomMatrixService:
    """Samples non-Hermitian (and Hermitian/Poisson reference) ensembles and their CLSR baselines"""

    def __init__(self, spectral_service: Optional[SpectralService] = None, stats_service: Optional[StatsService] = None):
        self.spectral_service = spectral_service or SpectralService()
        self.stats_service = stats_service or StatsService()

    def _points(self, spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
        if spec.kind == EnsembleKind.POISSON_REAL:
            return np.sort(rng.uniform(0.0, 1.0, size=spec.dim)).astype(np.complex128)
        # uniform in the unit disk
        radius = np.sqrt(rng.uniform(0.0, 1.0, size=spec.dim))
        angle = rng.uniform(0.0, 2.0 * np.pi, size=spec.dim)
        return radius * np.exp(1j * angle)

    def sample_matrix(self, spec: EnsembleSpec, trial_index: int) -> np.ndarray:
        """Deterministic sample for (spec.seed, trial_index); entries N(0, 1), symmetrized by summing images"""
        rng = substream(spec.seed, trial_index)
        dim = spec.dim
        if spec.kind == EnsembleKind.GINUE:
            return _complex_gaussian(rng, dim)
        if spec.kind == EnsembleKind.GINOE:
            return rng.standard_normal((dim, dim))
        if spec.kind == EnsembleKind.AI_DAGGER:
            a = _complex_gaussian(rng, dim)
            return (a + a.T) / 2.0
        if spec.kind == EnsembleKind.PT_SYMMETRIC:
            a = _complex_gaussian(rng, dim)
            return (a + pt_reflect(a)) / 2.0
        if spec.kind == EnsembleKind.GOE:
            a = rng.standard_normal((dim, dim))
            return (a + a.T) / 2.0
        return np.diag(self._points(spec, rng))

    def sample_spectrum(self, spec: EnsembleSpec, trial_index: int) -> np.ndarray:
        if spec.kind in POINT_PROCESSES:
            return self._points(spec, substream(spec.seed, trial_index))
        matrix = self.sample_matrix(spec, trial_index)
        if spec.kind == EnsembleKind.GOE:
            return np.linalg.eigvalsh(matrix).astype(np.complex128)
        return self.spectral_service.eigenvalues(matrix)

    def trial_clsr(self, spec: EnsembleSpec, trial_index: int) -> Tuple[float, float]:
        try:
            ratios = self.stats_service.clsr(self.sample_spectrum(spec, trial_index))
        except SpectrumError as e:
            raise SpectrumError(f"trial {trial_index}: {e.message}", trial=trial_index)
        return ratios.mean_r, ratios.mean_neg_cos

    def ensemble_clsr(self, spec: EnsembleSpec, parallelism: int = 1) -> EnsembleResult:
        logger.info(f"Sampling {spec.trials} {spec.kind.value} matrices of dimension {spec.dim}")
        trials = list(range(spec.trials))
        if parallelism > 1 and spec.trials > 1:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                results: List[Tuple[float, float]] = list(pool.map(self.trial_clsr, [spec] * spec.trials, trials))
        else:
            results = [self.trial_clsr(spec, t) for t in trials]

        r = np.array([item[0] for item in results])
        neg_cos = np.array([item[1] for item in results])
        ddof = 1 if r.size > 1 else 0
        result = EnsembleResult(
            kind=spec.kind,
            dim=spec.dim,
            trials=spec.trials,
            mean_r=float(np.mean(r)),
            std_r=float(np.std(r, ddof=ddof)),
            mean_neg_cos=float(np.mean(neg_cos)),
            std_neg_cos=float(np.std(neg_cos, ddof=ddof)),
            per_trial_r=r.tolist(),
            per_trial_neg_cos=neg_cos.tolist(),
        )
        logger.info(f"{spec.kind.value}: <r> = {result.mean_r:.5f} +- {result.std_r:.5f}, -<cos> = {result.mean_neg_cos:.5f}")
        return result
