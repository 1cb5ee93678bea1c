# pricing/blackscholes.py
"""Forward Black-Scholes call prices in log coordinates and implied-volatility inversion.

All prices are forward prices: the call pays (e^X - e^k)^+ at maturity with
X a martingale, so no discounting or carry terms appear.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from config import config
from pricing.errors import ArbitrageBoundsError, ConvergenceError, ParameterError

logger = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def norm_cdf(d):
    """Standard normal CDF through erfc, accurate in both tails."""
    return 0.5 * erfc(-np.asarray(d, dtype=float) / _SQRT2)


def _d_plus_minus(x, k, tau, sigma):
    total_vol = sigma * np.sqrt(tau)
    d_plus = (x - k + 0.5 * total_vol**2) / total_vol
    return d_plus, d_plus - total_vol


@dataclass(frozen=True)
class BSInputs:
    x: float
    k: float
    tau: float
    sigma: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")


def call_price(x, k, tau, sigma):
    """Vectorised e^x N(d+) - e^k N(d-)."""
    x, k, sigma = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(k, float), np.asarray(sigma, float)
    )
    d_plus, d_minus = _d_plus_minus(x, k, tau, sigma)
    price = np.exp(x) * norm_cdf(d_plus) - np.exp(k) * norm_cdf(d_minus)
    return price if price.ndim else float(price)


def put_price(x, k, tau, sigma):
    x, k, sigma = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(k, float), np.asarray(sigma, float)
    )
    d_plus, d_minus = _d_plus_minus(x, k, tau, sigma)
    price = np.exp(k) * norm_cdf(-d_minus) - np.exp(x) * norm_cdf(-d_plus)
    return price if price.ndim else float(price)


def bs_call(inputs: BSInputs) -> float:
    return call_price(inputs.x, inputs.k, inputs.tau, inputs.sigma)


def bs_put(inputs: BSInputs) -> float:
    return put_price(inputs.x, inputs.k, inputs.tau, inputs.sigma)


def bs_vega(inputs: BSInputs) -> float:
    """dv/dSigma."""
    d_plus, _ = _d_plus_minus(inputs.x, inputs.k, inputs.tau, inputs.sigma)
    return float(np.exp(inputs.x) * _INV_SQRT_2PI * np.exp(-0.5 * d_plus**2) * np.sqrt(inputs.tau))


def bs_volga(inputs: BSInputs) -> float:
    """d^2v/dSigma^2."""
    d_plus, d_minus = _d_plus_minus(inputs.x, inputs.k, inputs.tau, inputs.sigma)
    return bs_vega(inputs) * d_plus * d_minus / inputs.sigma


def _vega(x, k, tau, sigma):
    d_plus, _ = _d_plus_minus(x, k, tau, sigma)
    return np.exp(x) * _INV_SQRT_2PI * np.exp(-0.5 * d_plus**2) * np.sqrt(tau)


def implied_vol(
    price: float,
    x: float,
    k: float,
    tau: float,
    tolerance: float = config.IV_PRICE_TOLERANCE,
    max_iterations: int = config.IV_MAX_ITERATIONS,
) -> float:
    """Unique Sigma > 0 with call_price(x, k, tau, Sigma) == price.

    In-the-money calls are inverted through the out-of-the-money put (parity),
    then a safeguarded Newton iteration runs inside a volatility bracket.
    """
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    forward, strike = np.exp(x), np.exp(k)
    intrinsic = max(forward - strike, 0.0)
    if not np.isfinite(price) or price <= intrinsic:
        raise ArbitrageBoundsError(
            f"price {price!r} is not above the intrinsic value {intrinsic!r}",
            side="lower",
            price=price,
            bound=intrinsic,
        )
    if price >= forward:
        raise ArbitrageBoundsError(
            f"price {price!r} is not below the forward {forward!r}",
            side="upper",
            price=price,
            bound=forward,
        )

    if k < x:
        target = price - (forward - strike)
        pricer = put_price
    else:
        target = price
        pricer = call_price

    def objective(sigma):
        return pricer(x, k, tau, sigma) - target

    lo, hi = config.IV_BRACKET
    while objective(lo) > 0 and lo > 1e-300:
        lo *= 0.1
    expansions = 0
    while objective(hi) < 0:
        hi *= 2.0
        expansions += 1
        if expansions > 60:
            raise ConvergenceError(
                f"could not bracket implied volatility for price {price!r}", x=x, k=k, tau=tau
            )

    sigma = np.sqrt(lo * hi)
    for _ in range(max_iterations):
        value = objective(sigma)
        if value == 0.0:
            return float(sigma)
        if value < 0:
            lo = sigma
        else:
            hi = sigma
        vega = _vega(x, k, tau, sigma)
        step = value / vega if vega > 0 else np.inf
        candidate = sigma - step
        if not (lo < candidate < hi):
            candidate = np.sqrt(lo * hi)  # geometric bisection
        if abs(candidate - sigma) <= 1e-15 * sigma or (hi - lo) <= 1e-15 * sigma:
            sigma = candidate
            break
        sigma = candidate
    else:
        logger.warning(f"Newton iteration hit the cap for price={price}, falling back to brentq")
        sigma = brentq(objective, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)

    residual = abs(call_price(x, k, tau, sigma) - price)
    if residual > tolerance * forward:
        raise ConvergenceError(
            f"implied volatility residual {residual:.3e} exceeds tolerance",
            residual=residual,
            sigma=float(sigma),
        )
    return float(sigma)
