from fastapi import FastAPI, Request, HTTPException
from fastapi.responses import JSONResponse
from loguru import logger
import traceback
from datetime import datetime, timezone
from typing import Optional


class PTKRError(Exception):
    """Base class for all diagnosable failures raised by the services"""

    code = "ptkr_error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "code": self.code, "message": self.message, **self.context}


class ParameterError(PTKRError, ValueError):
    code = "invalid_parameters"


class KickOverflowError(PTKRError):
    code = "kick_amplitude_overflow"


class DimensionMismatchError(PTKRError, ValueError):
    code = "dimension_mismatch"


class SpectrumError(PTKRError):
    code = "spectrum_failure"


class DegenerateSpectrumError(PTKRError):
    code = "degenerate_spectrum"


class NormOverflowError(PTKRError):
    code = "norm_overflow"

    def __init__(self, message: str, step: Optional[int] = None, **context):
        super().__init__(message, step=step, **context)
        self.step = step


class FitError(PTKRError):
    code = "fit_failed"


class CheckpointError(PTKRError):
    code = "corrupt_checkpoint"


class SchemaError(PTKRError):
    code = "schema_mismatch"


class UsageError(PTKRError):
    code = "usage_error"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def setup_error_handlers(app: FastAPI):
    """Setup global error handlers for the FastAPI app"""

    @app.exception_handler(HTTPException)
    async def http_exception_handler(request: Request, exc: HTTPException):
        """Handle HTTP exceptions"""
        logger.warning(f"HTTP {exc.status_code}: {exc.detail} - {request.url}")
        return JSONResponse(
            status_code=exc.status_code,
            content={
                "error": exc.detail,
                "status_code": exc.status_code,
                "timestamp": _now(),
                "path": str(request.url)
            }
        )

    @app.exception_handler(PTKRError)
    async def computation_error_handler(request: Request, exc: PTKRError):
        """Handle computation failures with their stable error code"""
        logger.warning(f"{type(exc).__name__} ({exc.code}): {exc.message} - {request.url}")
        return JSONResponse(
            status_code=422,
            content={
                **exc.to_dict(),
                "timestamp": _now(),
                "path": str(request.url)
            }
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        """Handle value errors (usually validation issues)"""
        logger.warning(f"Value error: {str(exc)} - {request.url}")
        return JSONResponse(
            status_code=400,
            content={
                "error": "Invalid input",
                "message": str(exc),
                "timestamp": _now(),
                "path": str(request.url)
            }
        )

    @app.exception_handler(Exception)
    async def general_exception_handler(request: Request, exc: Exception):
        """Handle all other exceptions"""
        error_id = f"ERR-{datetime.now(timezone.utc).strftime('%Y%m%d%H%M%S')}"

        logger.error(f"Unhandled exception {error_id}: {str(exc)}")
        logger.debug(f"Exception traceback {error_id}: {traceback.format_exc()}")

        return JSONResponse(
            status_code=500,
            content={
                "error": "Internal server error",
                "error_id": error_id,
                "message": "An unexpected error occurred while computing the diagnostic.",
                "timestamp": _now(),
                "path": str(request.url)
            }
        )

    logger.info("Error handlers configured")
