import numpy as np
from loguru import logger
from typing import Sequence, Union

from models.rotor_models import RotorParams, WavepacketSpec, StateVector, frozen_array
from utils.error_handler import ParameterError


def substream(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for substream `stream` of `seed`.

    Streams are split with numpy's SeedSequence spawn keys, so substream
    (seed, i, j) is reproducible on any platform and independent of every
    other (i, j).
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(sequence))


class RotorService:
    """Kick potential, initial wave packets and the degeneracy-breaking mass jitter"""

    def potential(self, theta: Union[float, Sequence[float], np.ndarray], params: RotorParams):
        """V(theta) = K (cos theta + i lambda sin theta) / sqrt(1 + lambda^2)"""
        theta = np.asarray(theta, dtype=np.float64)
        scale = params.K / np.hypot(1.0, params.lam)
        value = scale * (np.cos(theta) + 1j * params.lam * np.sin(theta))
        if value.ndim == 0:
            return complex(value)
        return value

    def gaussian_state(self, spec: WavepacketSpec, params: RotorParams) -> StateVector:
        """Gaussian packet a_k ~ exp(-hbar^2 (k - k0)^2 / (2 sigma^2)), truncated to the basis and renormalized"""
        try:
            spec.check_against(params)
        except ValueError as e:
            raise ParameterError(str(e), k0=spec.k0, sigma=spec.sigma)

        k = params.momentum_indices()
        exponent = -((params.hbar_eff * (k - spec.k0)) ** 2) / (2.0 * spec.sigma ** 2)
        amplitudes = np.exp(exponent)
        amplitudes /= np.sqrt(np.sum(amplitudes ** 2))

        significant = int(np.count_nonzero(amplitudes > np.finfo(float).eps * amplitudes.max()))
        if significant <= 1:
            logger.warning(f"Wave packet sigma={spec.sigma} occupies a single momentum state at hbar_eff={params.hbar_eff}")

        return StateVector(amplitudes=amplitudes.astype(np.complex128))

    def sample_mass_jitter(self, params: RotorParams, *stream: int) -> np.ndarray:
        """Delta m_k i.i.d. uniform on [0, jitter_amplitude], one per momentum state"""
        dim = params.dimension
        if params.jitter_amplitude == 0:
            return frozen_array(np.zeros(dim))
        rng = substream(params.seed, *stream)
        jitter = rng.uniform(0.0, params.jitter_amplitude, size=dim)
        logger.debug(f"Sampled mass jitter for seed {params.seed}, stream {stream}, amplitude {params.jitter_amplitude}")
        return frozen_array(jitter)

    def zero_jitter(self, params: RotorParams) -> np.ndarray:
        return frozen_array(np.zeros(params.dimension))
