# config.py
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_float(name: str, default: float) -> float:
    return float(os.environ.get(name, default))


def _env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


class Config:
    """Numerical defaults and service settings."""

    # General Config
    DEBUG = os.environ.get("FLASK_DEBUG", "False").lower() in ("true", "1", "t")

    # Redis (optional result cache for the pricing API; disabled when unset)
    REDIS_URL = os.environ.get("REDIS_URL")
    CACHE_DEFAULT_TIMEOUT = _env_int("CACHE_DEFAULT_TIMEOUT", 3600)  # seconds

    # Logging
    LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()

    # Riccati integration
    RICCATI_STEPS_PER_UNIT_TIME = _env_int("RICCATI_STEPS_PER_UNIT_TIME", 2000)
    RICCATI_EXPLOSION_BOUND = _env_float("RICCATI_EXPLOSION_BOUND", 1e12)
    RICCATI_MEMO_SIZE = _env_int("RICCATI_MEMO_SIZE", 256)  # nu = 0 solutions kept in memory

    # Fourier inversion
    FOURIER_OMEGA_I = _env_float("FOURIER_OMEGA_I", -1.5)
    FOURIER_OMEGA_MAX = _env_float("FOURIER_OMEGA_MAX", 200.0)
    FOURIER_NODES = _env_int("FOURIER_NODES", 2000)
    FOURIER_PANEL_ORDER = _env_int("FOURIER_PANEL_ORDER", 16)
    FOURIER_TOLERANCE = _env_float("FOURIER_TOLERANCE", 1e-7)
    FOURIER_RESIDUE_TOLERANCE = _env_float("FOURIER_RESIDUE_TOLERANCE", 1e-8)
    FOURIER_MAX_REFINEMENTS = _env_int("FOURIER_MAX_REFINEMENTS", 4)

    # Time quadrature for the implied-vol expansion
    QUADRATURE_NODES = _env_int("QUADRATURE_NODES", 64)
    QUADRATURE_REFINEMENT_NODES = _env_int("QUADRATURE_REFINEMENT_NODES", 256)
    QUADRATURE_MAX_NODES = _env_int("QUADRATURE_MAX_NODES", 2048)

    # Confluent hypergeometric series
    CHF_MAX_TERMS = _env_int("CHF_MAX_TERMS", 500)
    CHF_TOLERANCE = _env_float("CHF_TOLERANCE", 1e-14)
    CHF_IMAG_TOLERANCE = _env_float("CHF_IMAG_TOLERANCE", 1e-8)
    CHF_INTEGER_B_SHIFT = 1e-9

    # Black-Scholes inversion
    IV_PRICE_TOLERANCE = _env_float("IV_PRICE_TOLERANCE", 1e-12)
    IV_MAX_ITERATIONS = _env_int("IV_MAX_ITERATIONS", 200)
    IV_BRACKET = (1e-8, 5.0)

    # Monte Carlo
    MC_PATHS = _env_int("MC_PATHS", 100_000)
    MC_STEPS_PER_YEAR = _env_int("MC_STEPS_PER_YEAR", 200)
    MC_SEED = _env_int("MC_SEED", 20240607)
    MC_BLOCK_SIZE = _env_int("MC_BLOCK_SIZE", 10_000)
    MC_SCHEME = os.environ.get("MC_SCHEME", "full-truncation-euler")

    # Concurrency
    MAX_WORKERS = _env_int("MAX_WORKERS", 4)

    # Output
    CSV_SCHEMA_VERSION = os.environ.get("CSV_SCHEMA_VERSION", "1")
    SCENARIO_DIR = os.environ.get(
        "SCENARIO_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")
    )


# Create a singleton instance for easy access
config = Config()
