# pricing/ivol.py
"""Explicit implied-volatility expansion Sigma_0 + Sigma_1 + Sigma_2.

The corrections are written in the scaled Hermite basis
H_n(xi) = (-1 / (Sigma_0 sqrt(2 tau)))^n Hermite_n(xi),
xi = (x - k - Sigma_0^2 tau / 2) / (Sigma_0 sqrt(2 tau)).

Every time integral is strike independent, so the corrections are stored as
coefficient vectors over (H_0, ..., H_4) and a smile costs one table.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from config import config
from pricing.blackscholes import call_price
from pricing.errors import (
    DegenerateVarianceError,
    NodeLimitError,
    ParameterError,
)
from pricing.lsv import GeneratorCoefficients, coefficients
from utils.helpers import cumulative_matrix, gauss_legendre

logger = logging.getLogger(__name__)

_TAYLOR_KEYS = (
    ("c", 0, 0), ("f", 0, 0), ("g", 0, 0), ("h", 0, 0),
    ("c", 1, 0), ("c", 0, 1), ("f", 1, 0), ("f", 0, 1), ("h", 1, 0), ("h", 0, 1),
    ("c", 2, 0), ("c", 1, 1), ("c", 0, 2),
)


@dataclass(frozen=True)
class QuadratureConfig:
    nodes: int = config.QUADRATURE_NODES
    refinement_nodes: int = config.QUADRATURE_REFINEMENT_NODES
    max_nodes: int = config.QUADRATURE_MAX_NODES
    tolerance: float = 1e-10
    check_refinement: bool = True

    def __post_init__(self):
        if self.nodes < 2:
            raise ParameterError(f"quadrature needs at least 2 nodes, got {self.nodes}")
        if self.max_nodes < self.nodes:
            raise ParameterError("max_nodes must be >= nodes")


@dataclass(frozen=True)
class HermiteContext:
    sigma0: float
    tau: float
    x: float
    k: object

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if not self.sigma0 > 0:
            raise ParameterError(f"Sigma_0 must be positive, got {self.sigma0}")

    @property
    def scale(self) -> float:
        return self.sigma0 * np.sqrt(2.0 * self.tau)

    @property
    def xi(self):
        return (self.x - np.asarray(self.k, dtype=float) - 0.5 * self.sigma0**2 * self.tau) / self.scale

    def physicists(self, order: int = 4):
        """Hermite_0 .. Hermite_order at xi, stacked along the first axis."""
        xi = self.xi
        polys = [np.ones_like(xi), 2.0 * xi]
        for n in range(1, order):
            polys.append(2.0 * xi * polys[n] - 2.0 * n * polys[n - 1])
        return np.stack(polys[: order + 1])

    def H(self, order: int = 4):
        """Scaled H_0 .. H_order."""
        factors = (-1.0 / self.scale) ** np.arange(order + 1)
        hermite = self.physicists(order)
        return factors.reshape((-1,) + (1,) * (hermite.ndim - 1)) * hermite


@dataclass(frozen=True)
class TimeIntegralTable:
    """Samples of chi_{i,j} on Gauss-Legendre nodes of [t, T] with nested-integral operators.

    cumulative(a)[j] = int_t^{s_j} a,  tail(a)[j] = int_{s_j}^T a,
    ordered(a, b) = int_t^T ds1 a(s1) int_{s1}^T ds2 b(s2).
    """

    t: float
    T: float
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    samples: dict
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def chi(self, name: str, i: int = 0, j: int = 0) -> np.ndarray:
        return self.samples[(name, i, j)]

    def single(self, values) -> float:
        return float(self.weights @ values)

    def cumulative(self, values) -> np.ndarray:
        return self.matrix @ values

    def tail(self, values) -> np.ndarray:
        return self.single(values) - self.cumulative(values)

    def ordered(self, inner, outer) -> float:
        return self.single(inner * self.tail(outer))


def _build_table(coeffs: GeneratorCoefficients, t: float, T: float, n: int) -> TimeIntegralTable:
    nodes, weights = gauss_legendre(n, t, T)
    samples = {}
    for key in _TAYLOR_KEYS:
        values = np.array(coeffs.chi(*key, nodes), dtype=float)
        values.setflags(write=False)
        samples[key] = values
    matrix = cumulative_matrix(n, t, T)
    return TimeIntegralTable(t, T, nodes, weights, matrix, samples, {"nodes": n})


def _e(*pairs):
    """Vector over (H_0, ..., H_4) from (index, weight) pairs."""
    out = np.zeros(5)
    for index, weight in pairs:
        out[index] += weight
    return out


def coefficient_vectors(table: TimeIntegralTable) -> dict:
    """Strike-independent pieces of Sigma_1 and Sigma_2 as vectors over H_0..H_4.

    Returns the integrated variance and the unnormalised V-vectors; the 1/(tau Sigma_0)
    prefactor and the quadratic corrections are applied per strike.
    """
    S, O = table.single, table.ordered
    c00, f00, g00, h00 = (table.chi(n) for n in "cfgh")
    c10, c01 = table.chi("c", 1, 0), table.chi("c", 0, 1)
    f10, f01 = table.chi("f", 1, 0), table.chi("f", 0, 1)
    h10, h01 = table.chi("h", 1, 0), table.chi("h", 0, 1)
    c20, c11, c02 = table.chi("c", 2, 0), table.chi("c", 1, 1), table.chi("c", 0, 2)
    Ic, If, Ig, Ih = (table.cumulative(v) for v in (c00, f00, g00, h00))

    v10 = S(c10 * Ic) * _e((1, 2.0), (0, -1.0))
    v01 = _e((0, S(c01 * If)), (1, S(c01 * Ih)))

    v20 = (
        S(c20 * Ic**2) * _e((2, 4.0), (1, -4.0), (0, 1.0))
        + 2.0 * S(c20 * Ic) * _e((0, 1.0))
        + O(c10 * Ic, c10 * Ic) * _e((4, 4.0), (3, -8.0), (2, 5.0), (1, -1.0))
        + O(c10 * Ic, c10) * _e((2, 6.0), (1, -6.0), (0, 1.0))
    )

    v11 = (
        _e(
            (2, 2.0 * S(c11 * Ic * Ih)),
            (1, S(c11 * Ic * (2.0 * If - Ih))),
            (0, S(c11 * Ih) - S(c11 * Ic * If)),
        )
        + _e(
            (4, 2.0 * O(c10 * Ic, c01 * Ih)),
            (3, O(c10 * Ic, c01 * (2.0 * If - 3.0 * Ih))),
            (2, O(c10 * Ic, c01 * (Ih - 3.0 * If)) + O(c10 * Ih, c01)),
            (1, O(c10 * Ic, c01 * If) - O(c10 * Ih, c01)),
        )
        + _e(
            (4, 2.0 * O(c01 * Ih, c10 * Ic)),
            (3, O(c01 * (2.0 * If - 3.0 * Ih), c10 * Ic)),
            (2, O(c01 * (Ih - 3.0 * If), c10 * Ic) + 3.0 * O(c01 * Ih, c10)),
            (1, O(c01 * If, c10 * (2.0 + Ic)) - 2.0 * O(c01 * Ih, c10)),
            (0, -O(c01 * If, c10)),
        )
        + O(f10 * Ic, c01) * _e((1, 2.0), (0, -1.0))
        + O(h10 * Ic, c01) * _e((2, 2.0), (1, -1.0))
    )

    v02 = (
        _e(
            (2, S(c02 * Ih**2)),
            (1, 2.0 * S(c02 * Ih * If)),
            (0, S(c02 * If**2) + 2.0 * S(c02 * Ig)),
        )
        + _e(
            (4, O(c01 * Ih, c01 * Ih)),
            (3, O(c01 * If, c01 * Ih) + O(c01 * Ih, c01 * If) - O(c01 * Ih, c01 * Ih)),
            (
                2,
                2.0 * O(c01 * Ig, c01)
                + O(c01 * If, c01 * If)
                - O(c01 * If, c01 * Ih)
                - O(c01 * Ih, c01 * If),
            ),
            (1, -(2.0 * O(c01 * Ig, c01) + O(c01 * If, c01 * If))),
        )
        + _e((1, O(f01 * Ih, c01)), (0, O(f01 * If, c01)))
        + _e((2, O(h01 * Ih, c01)), (1, O(h01 * If, c01)))
    )

    return {
        "variance": np.array([S(c00)]),
        "v10": v10,
        "v01": v01,
        "v20": v20,
        "v11": v11,
        "v02": v02,
    }


def _max_relative_shift(coarse: dict, fine: dict) -> float:
    scale = max(float(np.max(np.abs(v))) for v in fine.values()) or 1.0
    worst = 0.0
    for key, value in fine.items():
        floor = 1e-12 * scale
        shift = np.abs(coarse[key] - value) / np.maximum(np.abs(value), floor)
        worst = max(worst, float(np.max(shift)))
    return worst


def nested_integrals(coeffs: GeneratorCoefficients, t: float, T: float, cfg: QuadratureConfig | None = None) -> TimeIntegralTable:
    """Samples every chi_{i,j} on [t, T] and verifies the table against a refined rule.

    The refined table is returned when the check passes; node counts above
    `max_nodes` raise NodeLimitError.
    """
    cfg = cfg or QuadratureConfig()
    if not T > t:
        raise ParameterError(f"require t < T, got t={t}, T={T}")
    table = _build_table(coeffs, t, T, cfg.nodes)
    if not cfg.check_refinement:
        return table

    vectors = coefficient_vectors(table)
    n = max(cfg.refinement_nodes, 2 * cfg.nodes)
    while True:
        if n > cfg.max_nodes:
            raise NodeLimitError(
                f"time quadrature did not settle within {cfg.max_nodes} nodes",
                max_nodes=cfg.max_nodes,
                t=t,
                T=T,
            )
        fine = _build_table(coeffs, t, T, n)
        fine_vectors = coefficient_vectors(fine)
        shift = _max_relative_shift(vectors, fine_vectors)
        if shift <= cfg.tolerance:
            fine.meta.update({"coarse_nodes": table.size, "refinement_shift": shift})
            return fine
        logger.info(f"Time quadrature shift {shift:.2e} at {table.size} nodes, refining to {n}")
        table, vectors = fine, fine_vectors
        n *= 2


@dataclass(frozen=True)
class IVExpansion:
    """Sigma_0 and strike-independent vectors for Sigma_1 and Sigma_2 at a fixed (t, x, ytilde, T)."""

    sigma0: float
    tau: float
    x: float
    vectors: dict
    meta: dict = field(default_factory=dict)

    def hermite(self, k) -> HermiteContext:
        return HermiteContext(self.sigma0, self.tau, self.x, k)

    def _parts(self, k):
        H = self.hermite(k).H(4)
        prefactor = 1.0 / (self.tau * self.sigma0)
        s10 = prefactor * np.tensordot(self.vectors["v10"], H, axes=1)
        s01 = prefactor * np.tensordot(self.vectors["v01"], H, axes=1)
        K = self.tau * self.sigma0 * (H[2] - H[1]) + 1.0 / self.sigma0
        s20 = prefactor * np.tensordot(self.vectors["v20"], H, axes=1) - 0.5 * s10**2 * K
        s11 = prefactor * np.tensordot(self.vectors["v11"], H, axes=1) - s10 * s01 * K
        s02 = prefactor * np.tensordot(self.vectors["v02"], H, axes=1) - 0.5 * s01**2 * K
        return {"s10": s10, "s01": s01, "s20": s20, "s11": s11, "s02": s02}

    def components(self, k) -> dict:
        parts = self._parts(k)
        return {key: _scalar(value) for key, value in parts.items()}

    def sigma1(self, k):
        parts = self._parts(k)
        return _scalar(parts["s10"] + parts["s01"])

    def sigma2(self, k):
        parts = self._parts(k)
        return _scalar(parts["s20"] + parts["s11"] + parts["s02"])

    def sigma_bar(self, n: int, k):
        if n not in (0, 1, 2):
            raise ParameterError(f"expansion order must be 0, 1 or 2, got {n}")
        total = np.full(np.shape(k), self.sigma0, dtype=float)
        if n >= 1:
            total = total + self.sigma1(k)
        if n >= 2:
            total = total + self.sigma2(k)
        if np.any(total <= 0):
            logger.warning(
                f"Sigma_bar_{n} is nonpositive (min {float(np.min(total)):.4g}); strike outside the expansion regime"
            )
        return _scalar(total)

    def flags(self, k) -> list:
        """Out-of-regime markers for a single strike."""
        out = []
        for n in (1, 2):
            if self.sigma_bar(n, k) <= 0:
                out.append(f"sigma_bar{n}_nonpositive")
        return out


def _scalar(value):
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _integrated_variance(table: TimeIntegralTable) -> float:
    return table.single(table.chi("c"))


def expansion_from_table(table: TimeIntegralTable, x: float) -> IVExpansion:
    tau = table.T - table.t
    vectors = coefficient_vectors(table)
    variance = float(vectors["variance"][0])
    if not variance > 0:
        raise DegenerateVarianceError(
            f"integrated variance {variance:.3e} is not positive", integrated_variance=variance, tau=tau
        )
    sigma_0 = float(np.sqrt(2.0 * variance / tau))
    meta = dict(table.meta)
    return IVExpansion(sigma_0, tau, x, vectors, meta)


def _table(coeffs, t, T, cfg, table):
    if table is not None:
        return table
    return nested_integrals(coeffs, t, T, cfg)


def _check_point(coeffs: GeneratorCoefficients, x, ytilde):
    if x != coeffs.x or tuple(np.ravel(ytilde)) != tuple(coeffs.ytilde):
        raise ParameterError(
            "coefficients were expanded at a different point",
            expected=[coeffs.x, list(coeffs.ytilde)],
            got=[x, list(np.ravel(ytilde))],
        )


def sigma0(coeffs: GeneratorCoefficients, t: float, T: float, cfg: QuadratureConfig | None = None, table=None) -> float:
    """sqrt((2 / tau) int_t^T c_{0,0})."""
    table = _table(coeffs, t, T, cfg, table)
    variance = _integrated_variance(table)
    if not variance > 0:
        raise DegenerateVarianceError(
            f"integrated variance {variance:.3e} is not positive", integrated_variance=variance
        )
    return float(np.sqrt(2.0 * variance / (T - t)))


def sigma1(coeffs, t, x, ytilde, T, k, cfg: QuadratureConfig | None = None, table=None):
    _check_point(coeffs, x, ytilde)
    return expansion_from_table(_table(coeffs, t, T, cfg, table), x).sigma1(k)


def sigma2(coeffs, t, x, ytilde, T, k, cfg: QuadratureConfig | None = None, table=None):
    _check_point(coeffs, x, ytilde)
    return expansion_from_table(_table(coeffs, t, T, cfg, table), x).sigma2(k)


def sigma_bar(coeffs, n: int, t, x, ytilde, T, k, cfg: QuadratureConfig | None = None, table=None):
    _check_point(coeffs, x, ytilde)
    return expansion_from_table(_table(coeffs, t, T, cfg, table), x).sigma_bar(n, k)


def expand(model, t: float, x: float, ytilde, T: float, Tbar: float, cfg: QuadratureConfig | None = None, grid=None) -> IVExpansion:
    """Coefficients, time-integral table and expansion for one (t, x, ytilde, T, Tbar)."""
    coeffs = coefficients(model, t, x, ytilde, T, Tbar, grid)
    table = nested_integrals(coeffs, t, T, cfg)
    expansion = expansion_from_table(table, x)
    logger.debug(f"Expansion at t={t}, T={T}, Tbar={Tbar}: Sigma_0={expansion.sigma0:.6g}")
    return expansion


def price_approximation(expansion: IVExpansion, n: int, k):
    """Black-Scholes forward call price at Sigma_bar_n."""
    sigma = np.asarray(expansion.sigma_bar(n, k), dtype=float)
    if np.any(sigma <= 0):
        raise DegenerateVarianceError(
            f"Sigma_bar_{n} is nonpositive at the requested strike", sigma=sigma.tolist()
        )
    return call_price(expansion.x, k, expansion.tau, sigma)


def order0_price(coeffs: GeneratorCoefficients, k, cfg: QuadratureConfig | None = None):
    """Black-Scholes price with total variance 2 int c_{0,0}."""
    tau = coeffs.T - coeffs.t
    return call_price(coeffs.x, k, tau, sigma0(coeffs, coeffs.t, coeffs.T, cfg))
