import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.core.config import settings
from app.core.exceptions import InvalidArgumentError, NumericalError, VFEError
from app.api.api_v1.api import api_router

logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.PROJECT_NAME,
    openapi_url=f"{settings.API_V1_STR}/openapi.json",
    debug=settings.DEBUG
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(api_router, prefix=settings.API_V1_STR)


# Service errors that escape an endpoint: bad input is a 400, failed numerics a 422
@app.exception_handler(VFEError)
async def vfe_error_handler(request: Request, exc: VFEError):
    if isinstance(exc, InvalidArgumentError):
        status = 400
    elif isinstance(exc, NumericalError):
        status = 422
    else:
        status = 500
    logger.warning(f"{request.url.path} failed with {type(exc).__name__}: {exc}")
    return JSONResponse(status_code=status, content={"detail": str(exc), "exit_code": exc.exit_code})


@app.get("/")
async def root():
    return {
        "message": f"Welcome to the {settings.PROJECT_NAME} API",
        "version": "1.0.0",
        "out_dir": settings.OUT_DIR,
    }
