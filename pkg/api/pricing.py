# api/pricing.py
import logging
import time

from flask import Blueprint, Response, g, request

from pricing.affine import bond_price
from pricing.errors import ConfigError, PricingError
from pricing.models import model_from_config
from pricing.scenario import scenario_from_dict
from utils.cache import generate_cache_key, get_from_cache, set_in_cache
from utils.helpers import calculate_dict_hash
from utils.log import dump_record, error_record

logger = logging.getLogger(__name__)
pricing_bp = Blueprint("pricing_bp", __name__)

CACHE_PREFIX = "pricing"


def _json(payload, status: int = 200) -> Response:
    # orjson writes NaN as null and accepts numpy values
    return Response(dump_record(payload), status=status, mimetype="application/json")


def _error(exc: Exception) -> Response:
    status = getattr(exc, "status_code", 500) if isinstance(exc, PricingError) else 500
    g.log_outcome = "error"
    g.log_error_message = str(exc)
    if status >= 500:
        logger.error(f"Unexpected pricing failure: {exc}", exc_info=True)
    else:
        logger.warning(f"Pricing request rejected: {exc}")
    return _json(error_record(exc), status)


def _body() -> dict:
    body = request.get_json(silent=True)
    if not isinstance(body, dict):
        raise ConfigError("request body must be a JSON object")
    return body


def _cached(endpoint: str, body: dict, compute):
    """Serves a result from Redis when available, otherwise computes and stores it."""
    cache_key = generate_cache_key(f"{CACHE_PREFIX}:{endpoint}", calculate_dict_hash(body))
    cached = get_from_cache(cache_key)
    if cached is not None:
        g.log_outcome = "cache_hit"
        return cached
    start = time.perf_counter()
    result = compute()
    logger.info(f"TIMING: /{endpoint} computed in {(time.perf_counter() - start) * 1000:.2f} ms")
    set_in_cache(cache_key, result)
    g.log_outcome = "computed"
    return result


@pricing_bp.route("/health", methods=["GET"])
def api_health():
    g.log_outcome = "health_ok"
    return _json({"status": "ok", "message": "Pricing API is up"})


@pricing_bp.route("/bond", methods=["POST"])
def api_bond():
    """
    Zero-coupon bond price.
    Body: {"model": {"name": ..., "params": {...}}, "state": {"t": ..., "y": [...]}, "T": ...}
    """
    try:
        body = _body()
        model_section = body.get("model") or {}
        g.model_name = model_section.get("name")
        state_section = body.get("state") or {}
        if "T" not in body or "y" not in state_section:
            raise ConfigError("bond request needs model, state.y and T")

        def compute():
            model = model_from_config(model_section.get("name"), model_section.get("params") or {})
            state = model.state(float(state_section.get("t", 0.0)), state_section["y"])
            T = float(body["T"])
            return {"status": "ok", "model": model.name, "t": state.t, "T": T, "price": bond_price(model, state, T)}

        return _json(_cached("bond", body, compute))
    except Exception as e:
        return _error(e)


@pricing_bp.route("/price", methods=["POST"])
def api_price():
    """One forward call price; the body is a scenario document."""
    from scripts.figures import cmd_price

    try:
        body = _body()
        g.model_name = (body.get("model") or {}).get("name")
        scenario = scenario_from_dict(body, "api")
        return _json(_cached("price", body, lambda: cmd_price(scenario)))
    except Exception as e:
        return _error(e)


@pricing_bp.route("/smile", methods=["POST"])
def api_smile():
    """Exact and approximate implied vols over a strike grid; the body is a scenario document."""
    from scripts.figures import cmd_smile

    try:
        body = _body()
        g.model_name = (body.get("model") or {}).get("name")
        scenario = scenario_from_dict(body, "api")

        def compute():
            frame = cmd_smile(scenario, write=False)
            rows = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
            return {"status": "ok", "scenario": scenario.name, "config": scenario.digest, "rows": rows}

        return _json(_cached("smile", body, compute))
    except Exception as e:
        return _error(e)
