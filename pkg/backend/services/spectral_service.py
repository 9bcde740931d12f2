import numpy as np
import scipy.linalg
from loguru import logger
from typing import Callable, Dict, Optional, Union

from models.rotor_models import FloquetDense
from models.spectrum_models import QuasienergySpectrum
from utils.error_handler import SpectrumError

# alpha at or below this value means unbroken PT symmetry
PT_THRESHOLD = 1e-10


def _lapack_eigvals(matrix: np.ndarray) -> np.ndarray:
    return scipy.linalg.eigvals(matrix, overwrite_a=False, check_finite=True)


def _numpy_eigvals(matrix: np.ndarray) -> np.ndarray:
    return np.linalg.eigvals(matrix)


# Dense nonsymmetric solvers (Hessenberg reduction + shifted QR, LAPACK geev)
EIGEN_BACKENDS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "lapack": _lapack_eigvals,
    "numpy": _numpy_eigvals,
}


class SpectralService:
    """Eigenvalues of the Floquet operator, quasienergies and the PT-breaking measure alpha"""

    def __init__(self, backend: str = "lapack"):
        if backend not in EIGEN_BACKENDS:
            raise ValueError(f"Unknown eigen backend '{backend}', choose from {sorted(EIGEN_BACKENDS)}")
        self.backend = backend
        self._solver = EIGEN_BACKENDS[backend]

    def eigenvalues(self, operator: Union[FloquetDense, np.ndarray], check_residual: bool = False) -> np.ndarray:
        matrix = operator.matrix if isinstance(operator, FloquetDense) else np.asarray(operator)
        if not np.all(np.isfinite(matrix)):
            raise SpectrumError("operator has non-finite entries")
        try:
            if check_residual:
                mus, vectors = scipy.linalg.eig(matrix)
                self._check_residuals(matrix, mus, vectors)
            else:
                mus = self._solver(matrix)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
            # LAPACK reports the first index that failed to converge in its message
            logger.error(f"Eigensolver ({self.backend}) did not converge: {e}")
            raise SpectrumError(f"eigensolver did not converge: {e}", backend=self.backend)
        logger.debug(f"Computed {mus.size} eigenvalues with backend {self.backend}")
        return mus

    def _check_residuals(self, matrix: np.ndarray, mus: np.ndarray, vectors: np.ndarray, tolerance: float = 1e-8) -> None:
        scale = np.linalg.norm(matrix, 2)
        residuals = np.linalg.norm(matrix @ vectors - vectors * mus[None, :], axis=0)
        worst = int(np.argmax(residuals))
        if residuals[worst] > tolerance * scale * np.linalg.norm(vectors[:, worst]):
            raise SpectrumError(
                f"eigenpair {worst} has residual {residuals[worst]:.3e} above {tolerance:.0e} * ||F||",
                index=worst
            )

    def quasienergies(self, mus: np.ndarray) -> QuasienergySpectrum:
        """eps = i ln(mu): Re eps = -arg(mu) folded to [-pi, pi), Im eps = ln|mu|"""
        mus = np.asarray(mus, dtype=np.complex128)
        zero = np.flatnonzero(mus == 0)
        if zero.size:
            raise SpectrumError(
                f"zero Floquet eigenvalue at index {int(zero[0])}; the operator is numerically singular",
                index=int(zero[0])
            )
        eps = 1j * np.log(mus)
        real = np.mod(eps.real + np.pi, 2.0 * np.pi) - np.pi
        epsilons = real + 1j * eps.imag
        alpha = float(np.max(epsilons.imag))
        return QuasienergySpectrum(epsilons=epsilons, mus=mus, alpha=alpha)

    def spectrum(self, operator: FloquetDense) -> QuasienergySpectrum:
        spectrum = self.quasienergies(self.eigenvalues(operator))
        logger.info(f"Quasienergy spectrum of dimension {spectrum.size}: alpha = {spectrum.alpha:.6e}")
        return spectrum

    def pt_broken(self, spectrum: QuasienergySpectrum, threshold: Optional[float] = None) -> bool:
        threshold = PT_THRESHOLD if threshold is None else threshold
        return bool(spectrum.alpha > threshold)
