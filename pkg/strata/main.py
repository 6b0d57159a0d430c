"""FastAPI application entry point."""

import logging
import sys

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from strata import __version__
from strata.api.routes import allocations, analysis, simulations
from strata.config import settings
from strata.errors import NumericalFailureError, StrataError

logging.basicConfig(
    level=settings.log_level,
    stream=sys.stderr,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="strata",
    description="Hierarchical coded computation: allocation, finishing-time analysis and simulation",
    version=__version__,
)


@app.exception_handler(StrataError)
async def strata_error_handler(request: Request, exc: StrataError):
    """Map domain errors to their HTTP status."""
    if exc.status_code >= 500:
        logger.error(f"{request.url.path} failed: {exc}", exc_info=exc)
    content = {"detail": str(exc), "error": type(exc).__name__}
    if isinstance(exc, NumericalFailureError):
        content["diagnostics"] = {key: str(value) for key, value in exc.diagnostics.items()}
    return JSONResponse(status_code=exc.status_code, content=content)


@app.exception_handler(ValidationError)
async def validation_error_handler(request: Request, exc: ValidationError):
    """Domain models built inside a handler reject their inputs like request bodies do."""
    detail = exc.errors(include_url=False, include_context=False)
    return JSONResponse(status_code=422, content={"detail": detail, "error": "ValidationError"})


# Register API routes
app.include_router(allocations.router, prefix="/api/allocations", tags=["allocations"])
app.include_router(analysis.router, prefix="/api/analysis", tags=["analysis"])
app.include_router(simulations.router, prefix="/api/simulations", tags=["simulations"])


@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "ok", "threads": settings.threads}
