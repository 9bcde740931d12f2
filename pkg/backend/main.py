from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import uvicorn
from dotenv import load_dotenv
import numpy as np
import scipy
import os
from loguru import logger

from services.rotor_service import RotorService
from services.floquet_service import FloquetService
from services.spectral_service import SpectralService
from services.stats_service import StatsService
from services.rmt_service import RandomMatrixService
from services.otoc_service import OtocService
from services.sweep_service import SweepService
from models.rotor_models import RotorParams
from models.ensemble_models import EnsembleSpec, EnsembleResult
from models.api_models import (
    SpectrumResponse, ClsrRequest, ClsrResponse, OtocRequest, OtocResponse,
    ClassifyRequest, ClassifyResponse, RmtRequest
)
from utils.config_loader import env_int
from utils.error_handler import ParameterError, setup_error_handlers
from utils.logger_config import setup_logging

# Load environment variables
load_dotenv()

# Setup logging
setup_logging()

# Dense diagonalization is O(N^3); larger requests belong to the CLI
API_MAX_HALF_SIZE = env_int("PTKR_API_MAX_HALF_SIZE", 1024)

app = FastAPI(
    title="PT Kicked Rotor Diagnostics API",
    description="Quasienergy spectra, complex spacing ratios, random-matrix baselines and OTOCs of the PT-symmetric kicked rotor",
    version="1.0.0"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=[os.getenv("FRONTEND_URL", "http://localhost:3000")],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

setup_error_handlers(app)

# Initialize services
eigen_backend = os.getenv("PTKR_EIGEN_BACKEND", "lapack")
rotor_service = RotorService()
floquet_service = FloquetService(rotor_service)
spectral_service = SpectralService(eigen_backend)
stats_service = StatsService()
rmt_service = RandomMatrixService(spectral_service, stats_service)
otoc_service = OtocService(floquet_service, rotor_service)
sweep_service = SweepService(floquet_service, spectral_service, stats_service, otoc_service)


def _check_size(params: RotorParams) -> None:
    if params.half_size > API_MAX_HALF_SIZE:
        raise ParameterError(
            f"half_size {params.half_size} exceeds the API limit {API_MAX_HALF_SIZE}; use the ptkr CLI",
            half_size=params.half_size
        )


@app.get("/")
def root():
    """Liveness check"""
    return {"message": "PT Kicked Rotor Diagnostics API is running", "status": "healthy"}


@app.get("/health")
def health_check():
    return {
        "status": "healthy",
        "eigen_backend": spectral_service.backend,
        "max_half_size": API_MAX_HALF_SIZE,
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__},
    }


@app.post("/api/spectrum", response_model=SpectrumResponse)
def compute_spectrum(params: RotorParams):
    """Quasienergy summary of one rotor: alpha, PT phase and CLSR"""
    _check_size(params)
    logger.info(f"Spectrum request: K={params.K}, lambda={params.lam}, N={params.half_size}")
    jitter = rotor_service.sample_mass_jitter(params)
    spectrum = spectral_service.spectrum(floquet_service.build_dense(params, jitter))
    ratios = stats_service.clsr(spectrum.epsilons)
    return SpectrumResponse(
        dimension=spectrum.size,
        alpha=spectrum.alpha,
        pt_broken=spectral_service.pt_broken(spectrum),
        mean_r=ratios.mean_r,
        mean_neg_cos=ratios.mean_neg_cos,
        phase_label=sweep_service.classify_phase(ratios.mean_r, spectrum.alpha),
    )


@app.post("/api/clsr", response_model=ClsrResponse)
def compute_clsr(request: ClsrRequest):
    points = np.array(request.points, dtype=np.float64)
    ratios = stats_service.clsr(points[:, 0] + 1j * points[:, 1])
    return ClsrResponse(**ratios.summary())


@app.post("/api/rmt", response_model=EnsembleResult)
def compute_rmt(request: RmtRequest):
    """Random-matrix CLSR baseline, sampled in-process"""
    spec = EnsembleSpec(kind=request.kind, dim=request.dim, trials=request.trials, seed=request.seed)
    return rmt_service.ensemble_clsr(spec)


@app.post("/api/otoc", response_model=OtocResponse)
def compute_otoc(request: OtocRequest):
    params = request.params
    _check_size(params)
    jitter = rotor_service.sample_mass_jitter(params) if request.use_jitter else None
    series = otoc_service.otoc_series(params, request.wavepacket, request.steps, jitter=jitter)
    series = otoc_service.analyze(series)
    return OtocResponse(
        times=series.times.tolist(),
        c_raw=series.c_raw.tolist(),
        norm=series.norm.tolist(),
        c_norm=series.c_norm.tolist() if series.c_norm is not None else None,
        **series.fit_metadata(),
    )


@app.post("/api/classify", response_model=ClassifyResponse)
def classify(request: ClassifyRequest):
    return ClassifyResponse(
        phase_label=sweep_service.classify_phase(request.clsr, request.alpha),
        thresholds=sweep_service.thresholds(),
    )


if __name__ == "__main__":
    host = os.getenv("API_HOST", "0.0.0.0")
    port = int(os.getenv("API_PORT", 8000))

    logger.info(f"Starting server on {host}:{port}")
    uvicorn.run("main:app", host=host, port=port, reload=True)
