import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Application settings loaded from environment variables"""

    # Statistical defaults (phi = 1, alpha = 0.05 reproduce the reference figures)
    DEFAULT_PHI: float = float(os.getenv("ARRIVALS_PHI", "1.0"))
    DEFAULT_ALPHA: float = float(os.getenv("ARRIVALS_ALPHA", "0.05"))
    # Default seed for every simulation when --seed is not given
    DEFAULT_SEED: int = int(os.getenv("ARRIVALS_SEED", "20240101"))
    DEFAULT_GRID_STEP: float = float(os.getenv("ARRIVALS_GRID_STEP", "1.0"))
    DEFAULT_REPS: int = int(os.getenv("ARRIVALS_REPS", "200"))
    DEFAULT_FORMAT: str = os.getenv("ARRIVALS_FORMAT", "ndjson")

    # Numerical configuration
    ROOT_TOLERANCE: float = float(os.getenv("ROOT_TOLERANCE", "1e-9"))
    ROOT_MAX_ITERATIONS: int = int(os.getenv("ROOT_MAX_ITERATIONS", "200"))
    QUAD_TOLERANCE: float = float(os.getenv("QUAD_TOLERANCE", "1e-10"))

    # Processing Configuration
    MAX_WORKERS: int = int(os.getenv("MAX_WORKERS", "1"))

    # Application Configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
    DEBUG_MODE: bool = os.getenv("DEBUG_MODE", "False").lower() == "true"
    APP_HOST: str = os.getenv("APP_HOST", "0.0.0.0")
    APP_PORT: int = int(os.getenv("APP_PORT", "8000"))


settings = Settings()
