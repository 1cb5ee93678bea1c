# pricing/chf.py
"""Confluent hypergeometric functions M (Kummer) and U (Tricomi) and the Euler Gamma function.

Series evaluation only; accuracy is certified for the moderate arguments met in the
Fong-Vasicek bond coefficients, not for large |z|.
"""
import cmath
import logging
from dataclasses import dataclass, field

import numpy as np

from config import config
from pricing.errors import (
    DegenerateParameterError,
    ParameterError,
    SeriesConvergenceError,
)

logger = logging.getLogger(__name__)

# Lanczos approximation, g = 7, nine coefficients
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class SeriesConfig:
    max_terms: int = config.CHF_MAX_TERMS
    tolerance: float = config.CHF_TOLERANCE

    def __post_init__(self):
        if self.max_terms < 1:
            raise ParameterError(f"max_terms must be >= 1, got {self.max_terms}")
        if not self.tolerance > 0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")


@dataclass(frozen=True)
class CHFArgs:
    """One (a, b, z) argument set together with its series settings."""

    a: complex
    b: complex
    z: object
    series: SeriesConfig = field(default_factory=SeriesConfig)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        if not np.all(np.isfinite(np.asarray(self.z, dtype=complex))):
            raise ParameterError("CHF argument z must be finite")


def _nonpositive_integer(value: complex) -> bool:
    return value.imag == 0.0 and value.real <= 0.0 and float(value.real).is_integer()


def _is_integer(value: complex) -> bool:
    return value.imag == 0.0 and float(value.real).is_integer()


def gamma_euler(z) -> complex:
    """Euler Gamma function for complex z (Lanczos, reflection for Re z < 1/2)."""
    z = complex(z)
    if _nonpositive_integer(z):
        raise DegenerateParameterError(f"Gamma has a pole at z = {z.real:g}", z=str(z))
    if z.real < 0.5:
        return np.pi / (cmath.sin(np.pi * z) * gamma_euler(1.0 - z))
    z -= 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, coeff in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += coeff / (z + i)
    t = z + _LANCZOS_G + 0.5
    return complex(_SQRT_2PI * t ** (z + 0.5) * cmath.exp(-t) * acc)


def reciprocal_gamma(z) -> complex:
    """1/Gamma(z), equal to zero at the poles of Gamma."""
    z = complex(z)
    if _nonpositive_integer(z):
        return 0j
    return 1.0 / gamma_euler(z)


def _kummer_series(args: CHFArgs):
    a, b, cfg = args.a, args.b, args.series
    z = np.asarray(args.z, dtype=complex)
    term = np.ones_like(z)
    total = np.ones_like(z)
    for n in range(cfg.max_terms):
        term = term * ((a + n) / (b + n)) * z / (n + 1)
        total = total + term
        if np.all(np.abs(term) <= cfg.tolerance):
            return total
    raise SeriesConvergenceError(
        f"Kummer series did not converge in {cfg.max_terms} terms",
        a=str(a),
        b=str(b),
        last_term=float(np.max(np.abs(term))),
    )


def kummer_m(a, b, z, series: SeriesConfig | None = None):
    """Kummer's function M(a, b, z) with (a)_0 = 1, vectorised over z."""
    args = CHFArgs(a, b, z, series or SeriesConfig())
    if _nonpositive_integer(args.b):
        raise DegenerateParameterError(
            f"M(a, b, z) has a pole at b = {args.b.real:g}", b=str(args.b)
        )
    result = _kummer_series(args)
    return complex(result) if np.ndim(z) == 0 else result


def tricomi_u(a, b, z, series: SeriesConfig | None = None):
    """Tricomi's U(a, b, z) from the reflection formula, principal branch of z**(1 - b).

    Integer b is rejected: the reflection formula has Gamma poles there.
    """
    args = CHFArgs(a, b, z, series or SeriesConfig())
    a, b = args.a, args.b
    if _is_integer(b):
        raise DegenerateParameterError(
            f"U(a, b, z) reflection formula is singular at integer b = {b.real:g}", b=str(b)
        )
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr == 0):
        raise ParameterError("U(a, b, z) requires z != 0")

    first = gamma_euler(1.0 - b) * reciprocal_gamma(a + 1.0 - b)
    second = gamma_euler(b - 1.0) * reciprocal_gamma(a)
    value = first * kummer_m(a, b, z_arr, args.series)
    if second != 0:
        value = value + second * np.power(z_arr, 1.0 - b) * kummer_m(
            a + 1.0 - b, 2.0 - b, z_arr, args.series
        )
    return complex(value) if np.ndim(z) == 0 else value


def nudge_integer_b(b, shift: float = config.CHF_INTEGER_B_SHIFT) -> complex:
    """Moves b off an integer by `shift` so that U stays representable; warns when it does."""
    b = complex(b)
    nearest = round(b.real)
    if abs(b.imag) < shift and abs(b.real - nearest) < shift:
        nudged = complex(nearest + shift, b.imag)
        logger.warning(f"CHF parameter b={b} is (near) integer; perturbed to {nudged}")
        return nudged
    return b
