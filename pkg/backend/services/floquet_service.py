import numpy as np
from scipy import fft as sp_fft
from scipy.linalg import toeplitz
from loguru import logger
from typing import Optional

from models.rotor_models import RotorParams, StateVector, FloquetDense, SplitStepApplicator, frozen_array
from services.rotor_service import RotorService
from utils.error_handler import KickOverflowError, DimensionMismatchError

# exp() overflows a double near 709.78
KICK_EXPONENT_LIMIT = 700.0
# Relative occupation of the outermost momentum states that triggers a warning
EDGE_OCCUPATION_LIMIT = 1e-8
# Momentum states counted as the edge on each side of the basis
EDGE_WIDTH = 4


class FloquetService:
    """One-period operator F = D_kin U_kick D_kin, dense or matrix-free.

    The kinetic half step is diagonal in momentum, the kick is diagonal on
    a uniform angle grid; the two are connected by FFTs. Phases carry the
    effective Planck constant: exp(-i hbar k^2 tau / (4 (m + dm_k))) and
    exp(-i V(theta) / hbar).
    """

    def __init__(self, rotor_service: Optional[RotorService] = None):
        self.rotor_service = rotor_service or RotorService()

    def kinetic_phases(self, params: RotorParams, jitter: np.ndarray) -> np.ndarray:
        jitter = np.asarray(jitter, dtype=np.float64)
        if jitter.shape != (params.dimension,):
            raise DimensionMismatchError(
                f"jitter has length {jitter.size}, expected {params.dimension}",
                expected=params.dimension, actual=int(jitter.size)
            )
        k = params.momentum_indices().astype(np.float64)
        phase = params.hbar_eff * k ** 2 * params.tau / (4.0 * (params.m + jitter))
        return frozen_array(np.exp(-1j * phase))

    def kick_exponent(self, params: RotorParams) -> float:
        """Largest real exponent K lambda / (sqrt(1 + lambda^2) hbar) reached by the kick"""
        return params.K * params.lam / (np.hypot(1.0, params.lam) * params.hbar_eff)

    def kick_phases(self, params: RotorParams, grid_size: Optional[int] = None) -> np.ndarray:
        grid_size = grid_size or params.dimension
        if grid_size < params.dimension:
            raise DimensionMismatchError(
                f"angle grid of {grid_size} points is smaller than the basis dimension {params.dimension}",
                expected=params.dimension, actual=grid_size
            )
        exponent = self.kick_exponent(params)
        if exponent > KICK_EXPONENT_LIMIT:
            raise KickOverflowError(
                f"kick amplitude overflow: K*lambda/(sqrt(1+lambda^2)*hbar_eff) = {exponent:.6g} exceeds {KICK_EXPONENT_LIMIT}",
                exponent=exponent
            )
        theta = 2.0 * np.pi * np.arange(grid_size) / grid_size
        potential = self.rotor_service.potential(theta, params)
        return frozen_array(np.exp(-1j * potential / params.hbar_eff))

    def kick_matrix(self, params: RotorParams, grid_size: Optional[int] = None) -> np.ndarray:
        """(U_kick)_{k'k} = (1/N_theta) sum_j exp(-i k' theta_j) kick_j exp(i k theta_j); Toeplitz in k' - k"""
        grid_size = grid_size or params.dimension
        kick = self.kick_phases(params, grid_size)
        coefficients = sp_fft.fft(kick) / grid_size
        offsets = np.arange(params.dimension)
        column = coefficients[offsets % grid_size]
        row = coefficients[(-offsets) % grid_size]
        return toeplitz(column, row)

    def build_dense(self, params: RotorParams, jitter: np.ndarray, grid_size: Optional[int] = None) -> FloquetDense:
        kinetic = self.kinetic_phases(params, jitter)
        matrix = kinetic[:, None] * self.kick_matrix(params, grid_size) * kinetic[None, :]
        logger.debug(f"Built dense Floquet operator of dimension {params.dimension} (K={params.K}, lambda={params.lam})")
        return FloquetDense(matrix=matrix, params=params, jitter=frozen_array(jitter, dtype=np.float64))

    def build_applicator(self, params: RotorParams, jitter: np.ndarray) -> SplitStepApplicator:
        return SplitStepApplicator(
            kinetic_phases=self.kinetic_phases(params, jitter),
            kick_phases=self.kick_phases(params),
            grid_size=params.dimension,
            params=params,
            jitter=frozen_array(jitter, dtype=np.float64),
        )

    def apply_array(self, applicator: SplitStepApplicator, amplitudes: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """F a (or F^dagger a) on a raw amplitude array.

        With N_theta = 2N the sign factors exp(-i N theta_j) of the basis
        change cancel between the two transforms, leaving a plain
        ifft / fft pair.
        """
        if amplitudes.shape != (applicator.dimension,):
            raise DimensionMismatchError(
                f"state of length {amplitudes.size} does not match operator dimension {applicator.dimension}",
                expected=applicator.dimension, actual=int(amplitudes.size)
            )
        kinetic = applicator.kinetic_phases
        kick = applicator.kick_phases
        if adjoint:
            kinetic = np.conj(kinetic)
            kick = np.conj(kick)
        psi = kinetic * amplitudes
        psi = sp_fft.ifft(psi)
        psi *= kick
        psi = sp_fft.fft(psi)
        psi *= kinetic
        return psi

    def apply(self, applicator: SplitStepApplicator, state: StateVector, adjoint: bool = False) -> StateVector:
        return StateVector(amplitudes=self.apply_array(applicator, state.amplitudes, adjoint))

    def edge_occupation(self, amplitudes: np.ndarray, width: Optional[int] = None) -> float:
        """Fraction of |psi|^2 carried by the `width` outermost momentum states on either side"""
        dim = amplitudes.size
        width = max(1, min(width or EDGE_WIDTH, dim // 2))
        weights = np.abs(amplitudes) ** 2
        total = np.sum(weights)
        if total == 0:
            return 0.0
        return float((np.sum(weights[:width]) + np.sum(weights[-width:])) / total)
