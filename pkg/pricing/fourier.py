# pricing/fourier.py
"""Exact bond-option prices by generalized Fourier inversion along Im(omega) = omega_i.

    u(t, y; T, Tbar) = 1/(2 pi) int d omega_r  phi_hat(omega) e^{-i omega F(T;Tbar,0)}
                                               Gamma(t, y; T, -i omega G(T;Tbar,0))

with phi_hat the transform of the call payoff (e^x - e^k)^+. The forward price is
u / Gamma(t, y; T, 0).
"""
import logging
from dataclasses import dataclass

import numpy as np

from config import config
from pricing.affine import RiccatiGrid, StatePoint, bond_price, gamma_transform, solve_riccati
from pricing.blackscholes import implied_vol
from pricing.errors import (
    CapabilityError,
    ConsistencyError,
    ParameterError,
    TruncationError,
)
from pricing.lsv import eta
from pricing.models import FongVasicekModel
from utils.helpers import graded_gauss_legendre

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PayoffTransform:
    """phi_hat(omega) = -e^{k - i k omega} / (omega^2 + i omega) on the contour omega_r + i omega_i."""

    k: object
    omega_i: float = config.FOURIER_OMEGA_I

    def __post_init__(self):
        if not self.omega_i < -1.0:
            raise ParameterError(f"contour height must be below -1, got {self.omega_i}")

    def omega(self, omega_r):
        return np.asarray(omega_r, dtype=float) + 1j * self.omega_i

    def __call__(self, omega_r):
        """Values of shape omega_r.shape + k.shape."""
        omega = self.omega(omega_r)[..., None]
        k = np.atleast_1d(np.asarray(self.k, dtype=float))
        values = -np.exp(k - 1j * k * omega) / (omega**2 + 1j * omega)
        return values if np.ndim(self.k) else values[..., 0]


@dataclass(frozen=True)
class InversionConfig:
    omega_i: float = config.FOURIER_OMEGA_I
    omega_max: float = config.FOURIER_OMEGA_MAX
    nodes: int = config.FOURIER_NODES
    tolerance: float = config.FOURIER_TOLERANCE
    residue_tolerance: float = config.FOURIER_RESIDUE_TOLERANCE
    max_refinements: int = config.FOURIER_MAX_REFINEMENTS
    panel_order: int = config.FOURIER_PANEL_ORDER
    self_check: bool = True

    def __post_init__(self):
        if not self.omega_max > 0:
            raise ParameterError(f"omega_max must be positive, got {self.omega_max}")
        if self.nodes < 2:
            raise ParameterError(f"node count must be >= 2, got {self.nodes}")
        if not self.omega_i < -1.0:
            raise ParameterError(f"contour height must be below -1, got {self.omega_i}")
        if self.max_refinements < 0:
            raise ParameterError("max_refinements must be >= 0")


def _check_capability(model):
    if isinstance(model, FongVasicekModel):
        raise CapabilityError(
            "Fourier pricing is not available for the Fong-Vasicek model; use the Monte Carlo engine",
            model=model.name,
            engine="exact",
            alternative="mc",
        )


def _contour_weights(model, state: StatePoint, T, Tbar, omega_i, omega_max, nodes, panel_order, grid):
    """Quadrature nodes and the strike-independent factor e^{-i omega F} Gamma(...) w / (2 pi)."""
    # payoff poles lie -1 - omega_i and -omega_i off the contour, above omega_r = 0
    omega_r, weights = graded_gauss_legendre(omega_max, nodes, panel_order, scale=min(1.0, -1.0 - omega_i))
    omega = omega_r + 1j * omega_i

    base = grid or RiccatiGrid()
    local = RiccatiGrid(base.steps_per_unit_time, T, base.explosion_bound)
    long_bond = solve_riccati(model, Tbar, np.zeros(model.d), local, dense=False)
    F_T, G_T = float(long_bond.F(T)), np.asarray(long_bond.G(T), dtype=float)

    nu = -1j * omega[:, None] * G_T[None, :]
    transform = np.asarray(gamma_transform(model, state, T, nu, grid))
    factor = weights * np.exp(-1j * omega * F_T) * transform / (2.0 * np.pi)
    return omega_r, factor


def _inversion_sum(model, state, T, Tbar, strikes, omega_i, omega_max, nodes, panel_order, grid):
    omega_r, factor = _contour_weights(model, state, T, Tbar, omega_i, omega_max, nodes, panel_order, grid)
    payoff = PayoffTransform(strikes, omega_i)(omega_r)  # (N, n_strikes)
    return factor @ payoff


def option_values(model, state: StatePoint, T: float, Tbar: float, strikes, cfg: InversionConfig | None = None, grid=None):
    """u(t, y; T, Tbar) for an array of log strikes, with truncation self-check and residue check."""
    cfg = cfg or InversionConfig()
    _check_capability(model)
    if not state.t <= T <= Tbar:
        raise ParameterError(f"require t <= T <= Tbar, got t={state.t}, T={T}, Tbar={Tbar}")
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))

    omega_max, nodes = cfg.omega_max, cfg.nodes
    value = _inversion_sum(model, state, T, Tbar, strikes, cfg.omega_i, omega_max, nodes, cfg.panel_order, grid)
    if cfg.self_check:
        for attempt in range(cfg.max_refinements + 1):
            finer = _inversion_sum(
                model, state, T, Tbar, strikes, cfg.omega_i, 2 * omega_max, 2 * nodes, cfg.panel_order, grid
            )
            shift = float(np.max(np.abs(finer.real - value.real)))
            omega_max, nodes, value = 2 * omega_max, 2 * nodes, finer
            if shift <= cfg.tolerance:
                break
            if attempt == cfg.max_refinements:
                raise TruncationError(
                    f"Fourier value still shifts by {shift:.2e} at omega_max={omega_max:g}",
                    shift=shift,
                    omega_max=omega_max,
                    nodes=nodes,
                )
            logger.info(f"Fourier truncation shift {shift:.2e}; refining to omega_max={2 * omega_max:g}")

    residue = np.abs(value.imag)
    if np.any(residue > cfg.residue_tolerance * np.maximum(np.abs(value.real), 1.0)):
        raise ConsistencyError(
            "Fourier inversion left a non-negligible imaginary part",
            max_imag=float(np.max(residue)),
        )
    return value.real


def option_value_u(model, state: StatePoint, T: float, Tbar: float, payoff: PayoffTransform, cfg: InversionConfig | None = None, grid=None) -> float:
    """Undiscounted-by-bond option value u for the payoff's strike."""
    cfg = cfg or InversionConfig(omega_i=payoff.omega_i)
    if cfg.omega_i != payoff.omega_i:
        raise ParameterError("payoff and inversion config use different contours")
    values = option_values(model, state, T, Tbar, payoff.k, cfg, grid)
    return float(values[0]) if np.ndim(payoff.k) == 0 else values


def forward_call_prices(model, t: float, x: float, ytilde, T: float, Tbar: float, strikes, cfg: InversionConfig | None = None, grid=None):
    """Forward call prices for an array of log strikes, sharing one contour evaluation."""
    _check_capability(model)
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if t == T:
        return np.maximum(np.exp(x) - np.exp(strikes), 0.0)
    y1 = eta(model, t, x, ytilde, T, Tbar, grid)
    state = model.state(t, [y1, *np.ravel(ytilde)])
    u = option_values(model, state, T, Tbar, strikes, cfg, grid)
    return u / bond_price(model, state, T, grid)


def forward_call_price(model, t: float, x: float, ytilde, T: float, Tbar: float, k: float, cfg: InversionConfig | None = None, grid=None) -> float:
    return float(forward_call_prices(model, t, x, ytilde, T, Tbar, [k], cfg, grid)[0])


def exact_implied_vol(model, t: float, x: float, ytilde, T: float, Tbar: float, k, cfg: InversionConfig | None = None, grid=None):
    """Black-Scholes implied volatility of the Fourier forward price."""
    strikes = np.atleast_1d(np.asarray(k, dtype=float))
    prices = forward_call_prices(model, t, x, ytilde, T, Tbar, strikes, cfg, grid)
    vols = np.array([implied_vol(p, x, kk, T - t) for p, kk in zip(prices, strikes)])
    return float(vols[0]) if np.ndim(k) == 0 else vols
