# pricing/montecarlo.py
"""Monte Carlo oracle: Euler simulation of the state under P with pathwise discounting.

Paths are split into fixed-size blocks, each with its own PCG64 stream spawned from
one SeedSequence, so estimates depend on (seed, paths, block_size) only and not on
the number of worker threads.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from config import config
from pricing.affine import RiccatiGrid, StatePoint, bond_price, solve_riccati
from pricing.errors import ParameterError, SchemeError
from pricing.lsv import eta

logger = logging.getLogger(__name__)

SCHEMES = ("euler", "full-truncation-euler")


@dataclass(frozen=True)
class SimConfig:
    paths: int = config.MC_PATHS
    steps_per_unit_time: int = config.MC_STEPS_PER_YEAR
    scheme: str = config.MC_SCHEME
    seed: int = config.MC_SEED
    antithetic: bool = False
    block_size: int = config.MC_BLOCK_SIZE
    max_workers: int = config.MAX_WORKERS

    def __post_init__(self):
        if self.paths < 2:
            raise ParameterError(f"paths must be >= 2, got {self.paths}")
        if self.steps_per_unit_time < 1:
            raise ParameterError(f"steps per unit time must be >= 1, got {self.steps_per_unit_time}")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.block_size < 2:
            raise ParameterError("block_size must be >= 2")
        if self.antithetic and (self.paths % 2 or self.block_size % 2):
            raise ParameterError("antithetic sampling needs even paths and block_size")

    def blocks(self) -> list:
        full, rest = divmod(self.paths, self.block_size)
        return [self.block_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    paths: int

    def within(self, value: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_se * self.stderr

    def scaled(self, factor: float) -> "MCEstimate":
        return MCEstimate(self.mean * factor, self.stderr * abs(factor), self.paths)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "paths": self.paths}


@dataclass(frozen=True)
class CallPayoff:
    """(e^X - e^k)^+ of the log bond price X = log B_T^Tbar."""

    k: float

    def __call__(self, log_bond):
        return np.maximum(np.exp(log_bond) - np.exp(self.k), 0.0)


def _bond_payoff(log_bond):
    return np.ones_like(log_bond)


def _shocks(rng: np.random.Generator, n: int, d: int, antithetic: bool):
    if not antithetic:
        return rng.standard_normal((n, d))
    half = rng.standard_normal((n // 2, d))
    return np.concatenate([half, -half])


def _simulate_block(model, state: StatePoint, T: float, n: int, seed_seq, cfg: SimConfig, terminal):
    """Returns per-sample discounted values for one block (antithetic pairs averaged)."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    d = model.d
    mask = np.asarray(model.nonnegative, dtype=bool)
    truncate = cfg.scheme == "full-truncation-euler"
    n_steps = math.ceil(cfg.steps_per_unit_time * (T - state.t) - 1e-9) if T > state.t else 0
    dt = (T - state.t) / n_steps if n_steps else 0.0
    sqrt_dt = math.sqrt(dt)

    y = np.tile(state.y, (n, 1))
    rate = model.short_rate(y)
    integral = np.zeros(n)
    s = state.t
    for step in range(n_steps):
        y_eff = np.where(mask, np.maximum(y, 0.0), y) if truncate else y
        drift = model.drift(s, y_eff)
        sigma = model.diffusion(s, y_eff)
        dW = sqrt_dt * _shocks(rng, n, d, cfg.antithetic)
        y = y + drift * dt + np.einsum("nij,nj->ni", sigma, dW)
        s = state.t + (step + 1) * dt
        if not truncate and np.any(y[:, mask] < 0):
            raise SchemeError(
                "plain Euler left the nonnegative domain of a square-root factor; "
                "use scheme='full-truncation-euler'",
                time=s,
                scheme=cfg.scheme,
            )
        y_eff = np.where(mask, np.maximum(y, 0.0), y) if truncate else y
        new_rate = model.short_rate(y_eff)
        integral += 0.5 * dt * (rate + new_rate)
        rate = new_rate

    y_T = np.where(mask, np.maximum(y, 0.0), y) if truncate else y
    values = np.exp(-integral) * terminal(y_T)
    if cfg.antithetic:
        values = 0.5 * (values[: n // 2] + values[n // 2 :])
    return values


def _run(model, state: StatePoint, T: float, cfg: SimConfig, terminal) -> MCEstimate:
    if T < state.t:
        raise ParameterError(f"T={T} precedes the state time {state.t}")
    sizes = cfg.blocks()
    children = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    workers = max(1, min(cfg.max_workers, len(sizes)))
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="mc-block") as executor:
        futures = [
            executor.submit(_simulate_block, model, state, T, n, child, cfg, terminal)
            for n, child in zip(sizes, children)
        ]
        blocks = [future.result() for future in futures]

    samples = np.concatenate(blocks)
    count = len(samples)
    mean = float(np.sum(samples) / count)
    var = float(np.sum((samples - mean) ** 2) / (count - 1)) if count > 1 else 0.0
    stderr = math.sqrt(var / count)
    logger.debug(f"MC estimate {mean:.8g} +- {stderr:.2g} from {cfg.paths} paths ({len(sizes)} blocks)")
    return MCEstimate(mean, stderr, cfg.paths)


def _log_bond_at_T(model, T: float, Tbar: float, grid=None):
    base = grid or RiccatiGrid()
    local = RiccatiGrid(base.steps_per_unit_time, T, base.explosion_bound)
    coeffs = solve_riccati(model, Tbar, np.zeros(model.d), local, dense=False)
    F, G = float(coeffs.F(T)), np.asarray(coeffs.G(T), dtype=float)

    def log_bond(y_T):
        return -F - y_T @ G

    return log_bond


def simulate_discounted_payoff(model, state: StatePoint, T: float, Tbar: float, payoff, cfg: SimConfig | None = None, grid=None) -> MCEstimate:
    """E_t[exp(-int_t^T r) payoff(log B_T^Tbar)].

    `payoff` is a log strike (call), the string "bond" (unit payoff) or a callable of
    the log bond price.
    """
    cfg = cfg or SimConfig()
    if not T <= Tbar:
        raise ParameterError(f"require T <= Tbar, got T={T}, Tbar={Tbar}")
    if isinstance(payoff, str):
        if payoff != "bond":
            raise ParameterError(f"unknown payoff {payoff!r}")
        func = _bond_payoff
    elif callable(payoff):
        func = payoff
    else:
        func = CallPayoff(float(payoff))
    log_bond = _log_bond_at_T(model, T, Tbar, grid)
    return _run(model, state, T, cfg, lambda y_T: func(log_bond(y_T)))


def simulate_transform(model, state: StatePoint, T: float, nu, cfg: SimConfig | None = None) -> MCEstimate:
    """E_t[exp(-int_t^T r + nu . Y_T)] for real nu."""
    cfg = cfg or SimConfig()
    nu = np.asarray(nu)
    if np.iscomplexobj(nu) and np.any(nu.imag != 0):
        raise ParameterError("complex nu is not simulated")
    nu = np.asarray(nu, dtype=float).reshape(model.d)
    return _run(model, state, T, cfg, lambda y_T: np.exp(y_T @ nu))


def forward_call_mc(model, t: float, x: float, ytilde, T: float, Tbar: float, k: float, cfg: SimConfig | None = None, grid=None) -> MCEstimate:
    """Forward call price and standard error, both divided by the T-bond price."""
    y1 = eta(model, t, x, ytilde, T, Tbar, grid)
    state = model.state(t, [y1, *np.ravel(ytilde)])
    estimate = simulate_discounted_payoff(model, state, T, Tbar, k, cfg, grid)
    return estimate.scaled(1.0 / bond_price(model, state, T, grid))
