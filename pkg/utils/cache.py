# utils/cache.py
import logging
import threading
from collections import OrderedDict

import orjson
import redis

from config import config  # Import the singleton instance

logger = logging.getLogger(__name__)

_redis_client = None
_redis_checked = False
_redis_lock = threading.Lock()


def get_redis_client():
    """Returns a connected Redis client, or None when caching is disabled or unreachable."""
    global _redis_client, _redis_checked
    with _redis_lock:
        if _redis_checked:
            return _redis_client
        _redis_checked = True
        if not config.REDIS_URL:
            logger.info("Utils/Cache: REDIS_URL not set, result caching disabled.")
            return None
        try:
            client = redis.from_url(config.REDIS_URL, decode_responses=False, socket_timeout=10)
            client.ping()
            _redis_client = client
            logger.info(f"Utils/Cache: Successfully connected to Redis at {config.REDIS_URL}")
        except redis.exceptions.ConnectionError as e:
            logger.critical(
                f"Utils/Cache: Failed to connect to Redis: {e}. Caching will be disabled."
            )
        except Exception as e:
            logger.critical(f"Utils/Cache: Error initializing Redis client: {e}", exc_info=True)
        return _redis_client


def get_from_cache(key: str):
    """Retrieves and decodes a JSON result from Redis."""
    client = get_redis_client()
    if not client:
        return None
    try:
        cached_bytes = client.get(key.encode("utf-8"))
        if cached_bytes:
            try:
                return orjson.loads(cached_bytes)
            except orjson.JSONDecodeError as e:
                logger.error(f"[Cache] Error decoding JSON for key '{key}': {e}")
                return None
        return None
    except redis.exceptions.ConnectionError as e:
        logger.error(f"[Cache] Redis connection error on get '{key}': {e}")
    except Exception as e:
        logger.error(f"[Cache] Error getting key '{key}': {e}", exc_info=True)
    return None


def set_in_cache(key: str, value, timeout: int = config.CACHE_DEFAULT_TIMEOUT) -> bool:
    """Encodes value to JSON and stores it in Redis with expiry."""
    client = get_redis_client()
    if not client:
        return False
    try:
        value_bytes = orjson.dumps(value, option=orjson.OPT_SERIALIZE_NUMPY)
        client.setex(key.encode("utf-8"), timeout, value_bytes)
        logger.debug(f"Set cache for key '{key}' with timeout {timeout}s")
        return True
    except redis.exceptions.ConnectionError as e:
        logger.error(f"[Cache] Redis connection error on set '{key}': {e}")
    except TypeError as e:
        logger.error(f"[Cache] Failed to serialize value for key '{key}': {e}", exc_info=True)
    except Exception as e:
        logger.error(f"[Cache] Error setting key '{key}': {e}", exc_info=True)
    return False


def generate_cache_key(prefix: str, identifier: str) -> str:
    """Generates a consistent cache key."""
    return f"{prefix}:{identifier}"


class RiccatiMemo:
    """Bounded, thread-safe LRU store for real (nu = 0) Riccati solutions.

    Values are immutable once stored, so readers share them without copying.
    """

    def __init__(self, maxsize: int = config.RICCATI_MEMO_SIZE):
        self.maxsize = maxsize
        self._data = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        with self._lock:
            value = self._data.get(key)
            if value is None:
                self.misses += 1
                return None
            self._data.move_to_end(key)
            self.hits += 1
            return value

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self):
        with self._lock:
            self._data.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self):
        return len(self._data)


riccati_memo = RiccatiMemo()
