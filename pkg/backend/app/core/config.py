import os
from pydantic_settings import BaseSettings
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    PROJECT_NAME: str = os.getenv("PROJECT_NAME", "VFE Polygon Engine")
    API_V1_STR: str = os.getenv("API_V1_STR", "/api/v1")
    DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"
    OUT_DIR: str = os.getenv("VFE_OUT_DIR", "./vfe_out")

    # Explicit RK4 + spectral derivatives: dt <= C / N^2
    STABILITY_CONSTANT: float = float(os.getenv("STABILITY_CONSTANT", "11.3"))
    BLOWUP_NORM: float = float(os.getenv("BLOWUP_NORM", "10.0"))

    GAUSS_TOLERANCE: float = 1e-10
    CLOSURE_TOLERANCE: float = 1e-10
    CLOSURE_FAILURE: float = 1e-8
    ASSERT_TOLERANCE: float = 1e-12

    PHI_TERMS: int = int(os.getenv("PHI_TERMS", "8192"))
    HOLDER_WINDOW_MIN: float = 1e-4
    HOLDER_WINDOW_MAX: float = 1e-2
    HOLDER_MIN_SAMPLES: int = 8

    COMPARISON_DIVISIONS: int = 1260
    BASE_STEPS: int = 151200
    BASE_NODES_PER_SIDE: int = 512

    MAX_WORKERS: int = int(os.getenv("MAX_WORKERS", "4"))

    class Config:
        case_sensitive = True

settings = Settings()
