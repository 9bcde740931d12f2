import numpy as np
import pytest
from loguru import logger

from models.rotor_models import RotorParams
from services.rotor_service import RotorService
from services.floquet_service import FloquetService
from services.spectral_service import SpectralService
from services.stats_service import StatsService
from services.rmt_service import RandomMatrixService
from services.otoc_service import OtocService
from services.sweep_service import SweepService


@pytest.fixture
def rotor_service():
    return RotorService()


@pytest.fixture
def floquet_service(rotor_service):
    return FloquetService(rotor_service)


@pytest.fixture
def spectral_service():
    return SpectralService()


@pytest.fixture
def stats_service():
    return StatsService()


@pytest.fixture
def rmt_service(spectral_service, stats_service):
    return RandomMatrixService(spectral_service, stats_service)


@pytest.fixture
def otoc_service(floquet_service, rotor_service):
    return OtocService(floquet_service, rotor_service)


@pytest.fixture
def sweep_service(floquet_service, spectral_service, stats_service, otoc_service):
    return SweepService(floquet_service, spectral_service, stats_service, otoc_service)


@pytest.fixture
def small_params():
    """Broken-phase rotor small enough for dense checks"""
    return RotorParams(K=5.0, lam=0.05, hbar_eff=0.2, half_size=16, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def log_messages():
    """Messages emitted through loguru while the test runs"""
    messages = []
    handler_id = logger.add(lambda message: messages.append(message.record), level="DEBUG")
    yield messages
    logger.remove(handler_id)


@pytest.fixture
def random_vector(rng):
    def draw(dim):
        return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return draw
