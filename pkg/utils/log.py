# utils/log.py
import logging
from time import perf_counter
from datetime import datetime, timezone

import orjson

from config import config
from pricing.errors import PricingError

logger = logging.getLogger(__name__)  # Use module-specific logger


def error_record(exc: BaseException) -> dict:
    """Machine-readable description of a failure, shared by the CLI and the API."""
    if isinstance(exc, PricingError):
        return exc.to_record()
    return {
        "status": "error",
        "error": "internal_error",
        "message": f"{type(exc).__name__}: {exc}",
    }


def dump_record(record: dict) -> bytes:
    """Serializes a record with orjson; numpy scalars and arrays are accepted."""
    return orjson.dumps(
        record, option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS, default=str
    )


def log_api_request(response):
    """
    Gathers log info from Flask's g and request/response objects and emits one
    structured line. Designed to be called from Flask's @app.after_request.
    """
    from flask import g, request

    if request.method == "OPTIONS" or request.path in ["/favicon.ico"]:
        return response

    elapsed_ms = (perf_counter() - getattr(g, "start_time", perf_counter())) * 1000
    request_time = getattr(g, "request_time", datetime.now(timezone.utc))

    log_entry = {
        "endpoint": request.path,
        "method": request.method,
        "status_code": response.status_code,
        "outcome": getattr(g, "log_outcome", "unknown"),
        "error_message": getattr(g, "log_error_message", None),
        "model": getattr(g, "model_name", None),
        "time_elapsed_ms": round(elapsed_ms, 2),
        "request_timestamp_utc": request_time.isoformat(),
        "response_size_bytes": response.content_length,
    }
    try:
        logger.info(dump_record(log_entry).decode("utf-8"))
    except Exception as e:
        logger.exception(f"Failed to log API request: {e}")

    return response


def setup_logging():
    """Configures the root logger."""
    logging.basicConfig(
        level=config.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - [%(threadName)s] - %(message)s",
    )
    # Silence excessively verbose libraries
    logging.getLogger("werkzeug").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    logger.info(f"Logging configured with level {config.LOG_LEVEL}")
