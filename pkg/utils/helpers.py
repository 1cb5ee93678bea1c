# utils/helpers.py
import hashlib
import logging
from functools import lru_cache

import numpy as np
import orjson
from numpy.polynomial import legendre

logger = logging.getLogger(__name__)


def calculate_dict_hash(data: dict) -> str:
    """Return an MD5 hash of the given dictionary (used to tag outputs with their config)."""
    if not isinstance(data, dict):
        logger.warning("calculate_dict_hash called with non-dict, returning empty hash.")
        return ""
    try:
        return hashlib.md5(
            orjson.dumps(data, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
        ).hexdigest()
    except Exception as e:
        logger.error(f"Error calculating hash: {e}", exc_info=True)
        return ""


@lru_cache(maxsize=32)
def _reference_rule(n: int):
    nodes, weights = legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n: int, a: float, b: float):
    """n-point Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _reference_rule(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_gauss_legendre(half_width: float, total_nodes: int, order: int = 16, scale: float = 1.0):
    """Composite rule on [-half_width, half_width] with panels clustered around 0.

    Edges sit at scale * sinh(u) for equally spaced u, so panel widths grow from about
    scale * du at the origin to half_width * du at the ends. 0 is always an edge.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    order = max(2, int(order))
    panels = max(2, -(-int(total_nodes) // order))
    panels += panels % 2
    reach = np.arcsinh(half_width / scale)
    edges = scale * np.sinh(np.linspace(-reach, reach, panels + 1))
    edges[panels // 2] = 0.0
    return _panel_rule(edges, order)


def _panel_rule(edges: np.ndarray, order: int):
    x, w = _reference_rule(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=16)
def _reference_cumulative_matrix(n: int) -> np.ndarray:
    # Q[j, k] maps samples f(x_k) to the integral of their Legendre interpolant over [-1, x_j].
    x, w = _reference_rule(n)
    vander = legendre.legvander(x, n)  # P_0 .. P_n at the nodes
    antiderivative = np.empty((n, n))
    antiderivative[:, 0] = x + 1.0
    for m in range(1, n):
        antiderivative[:, m] = (vander[:, m + 1] - vander[:, m - 1]) / (2 * m + 1)
    projection = (np.arange(n) + 0.5)[:, None] * vander[:, :n].T * w[None, :]
    matrix = antiderivative @ projection
    matrix.setflags(write=False)
    return matrix


def cumulative_matrix(n: int, a: float, b: float) -> np.ndarray:
    """Spectral cumulative-integration matrix on the n Gauss-Legendre nodes of [a, b]."""
    return 0.5 * (b - a) * _reference_cumulative_matrix(int(n))
