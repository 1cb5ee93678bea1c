# pricing/affine.py
"""Affine short-rate model class, Riccati solver and exponential-affine transform.

r(y) = q + psi.y,  mu(t, y) = b(t) + sum_i beta_i(t) y_i,
sigma sigma^T(t, y) = ell(t) + sum_i lam_i(t) y_i.

The transform Gamma(t, y; T, nu) = exp(-F(t; T, nu) - G(t; T, nu).y) with F, G
solving, backward from F(T) = 0 and G(T) = -nu,

    dF/dt   = 1/2 G^T ell G - b.G - q
    dG_i/dt = 1/2 G^T lam_i G - beta_i.G - psi_i
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from config import config
from pricing.errors import (
    DomainError,
    ParameterError,
    RiccatiExplosionError,
    UnsupportedNuError,
)
from utils.cache import riccati_memo

logger = logging.getLogger(__name__)


def constant(value) -> Callable[[float], np.ndarray]:
    """Time function returning a fixed read-only array."""
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)

    def _const(t):
        return arr

    _const.constant_value = arr
    return _const


@dataclass(frozen=True)
class AffineModelSpec:
    d: int
    q: float
    psi: np.ndarray
    b: Callable[[float], np.ndarray]
    beta: tuple
    ell: Callable[[float], np.ndarray]
    lam: tuple

    def __post_init__(self):
        psi = np.array(self.psi, dtype=float).reshape(-1)
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "beta", tuple(self.beta))
        object.__setattr__(self, "lam", tuple(self.lam))
        if self.d < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.d}")
        if len(psi) != self.d or len(self.beta) != self.d or len(self.lam) != self.d:
            raise ParameterError(
                f"psi, beta and lambda must have length d={self.d}",
                psi=len(psi),
                beta=len(self.beta),
                lam=len(self.lam),
            )

    @property
    def time_homogeneous(self) -> bool:
        funcs = (self.b, self.ell, *self.beta, *self.lam)
        return all(hasattr(f, "constant_value") for f in funcs)

    def at(self, t: float):
        """(b, B, ell, Lam) at time t with B[i] = beta_i(t) and Lam[i] = lam_i(t)."""
        d = self.d
        b = np.asarray(self.b(t), dtype=float).reshape(d)
        B = np.stack([np.asarray(f(t), dtype=float).reshape(d) for f in self.beta])
        ell = np.asarray(self.ell(t), dtype=float).reshape(d, d)
        Lam = np.stack([np.asarray(f(t), dtype=float).reshape(d, d) for f in self.lam])
        return b, B, ell, Lam

    def diffusion_matrix(self, t: float, y) -> np.ndarray:
        """ell(t) + sum_i lam_i(t) y_i."""
        _, _, ell, Lam = self.at(t)
        return ell + np.tensordot(np.asarray(y, dtype=float), Lam, axes=1)

    def check_admissible(self, y, t: float = 0.0, atol: float = 1e-12) -> None:
        matrix = self.diffusion_matrix(t, y)
        if not np.allclose(matrix, matrix.T, atol=atol):
            raise DomainError("diffusion matrix is not symmetric", t=t, y=list(np.ravel(y)))
        eigmin = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T)).min())
        if eigmin < -atol:
            raise DomainError(
                f"diffusion matrix is not positive semidefinite at y={list(np.ravel(y))}",
                t=t,
                min_eigenvalue=eigmin,
            )

    def rhs(self, t: float, G: np.ndarray):
        """Right-hand sides (dF/dt, dG/dt) for a batch G of shape (n, d)."""
        b, B, ell, Lam = self.at(t)
        dF = 0.5 * np.einsum("nj,jk,nk->n", G, ell, G) - G @ b - self.q
        dG = 0.5 * np.einsum("nj,ijk,nk->ni", G, Lam, G) - G @ B.T - self.psi
        return dF, dG


@dataclass(frozen=True)
class StatePoint:
    t: float
    y: np.ndarray
    nonnegative: tuple = ()

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if self.t < 0:
            raise DomainError(f"time must be nonnegative, got {self.t}", t=self.t)
        if not np.all(np.isfinite(y)):
            raise DomainError("state must be finite", y=y.tolist())
        flags = tuple(self.nonnegative) or (False,) * len(y)
        if len(flags) != len(y):
            raise ParameterError("nonnegative flags must match the state dimension")
        object.__setattr__(self, "nonnegative", flags)
        for i, (value, required) in enumerate(zip(y, flags)):
            if required and value < 0:
                raise DomainError(
                    f"state coordinate {i} must be nonnegative, got {value}", coordinate=i, value=value
                )


@dataclass(frozen=True)
class RiccatiGrid:
    steps_per_unit_time: int = config.RICCATI_STEPS_PER_UNIT_TIME
    t_start: float = 0.0
    explosion_bound: float = config.RICCATI_EXPLOSION_BOUND

    def __post_init__(self):
        if self.steps_per_unit_time < 1:
            raise ParameterError("steps_per_unit_time must be >= 1")
        if self.t_start < 0:
            raise ParameterError("t_start must be nonnegative")

    def steps(self, T: float) -> int:
        return max(1, math.ceil(self.steps_per_unit_time * (T - self.t_start) - 1e-9))


@dataclass(frozen=True)
class BondCoefficients:
    """F(t; T, nu) and G(t; T, nu) as callables of t.

    For a single nu of shape (d,), F(t) has the shape of t and G(t) appends (d,).
    For a batch of shape (n, d), F(t) appends (n,) and G(t) appends (n, d).
    """

    T: float
    nu: np.ndarray
    F: Callable
    G: Callable
    provenance: dict = field(default_factory=dict)

    @property
    def batched(self) -> bool:
        return self.nu.ndim == 2


def _as_nu(nu, d: int) -> np.ndarray:
    arr = np.asarray(nu)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != d or arr.ndim > 2:
        raise ParameterError(f"nu must have trailing dimension {d}, got shape {arr.shape}")
    if np.iscomplexobj(arr) and np.all(arr.imag == 0):
        arr = arr.real
    return arr


def _unbatch(coeffs_F, coeffs_G, single: bool):
    if not single:
        return coeffs_F, coeffs_G

    def F(t):
        return coeffs_F(t)[..., 0]

    def G(t):
        return coeffs_G(t)[..., 0, :]

    return F, G


class _HermitePath:
    """Node values and t-derivatives on a uniform backward grid, cubic Hermite in between."""

    def __init__(self, times, values, derivatives, t_start, T):
        self.times = times  # ascending
        self.values = values
        self.derivatives = derivatives
        self.t_start = t_start
        self.T = T

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        flat = t_arr.reshape(-1)
        if np.any(flat < self.t_start - 1e-12) or np.any(flat > self.T + 1e-12):
            raise ParameterError(
                f"t must lie in [{self.t_start}, {self.T}]", t_min=float(flat.min()), t_max=float(flat.max())
            )
        times = self.times
        if len(times) == 1:
            out = np.repeat(self.values[:1], len(flat), axis=0)
        else:
            idx = np.clip(np.searchsorted(times, flat, side="right") - 1, 0, len(times) - 2)
            t0, t1 = times[idx], times[idx + 1]
            h = t1 - t0
            s = (flat - t0) / h
            shape = (-1,) + (1,) * (self.values.ndim - 1)
            s = s.reshape(shape)
            h = h.reshape(shape)
            h00 = 2 * s**3 - 3 * s**2 + 1
            h10 = s**3 - 2 * s**2 + s
            h01 = -2 * s**3 + 3 * s**2
            h11 = s**3 - s**2
            out = (
                h00 * self.values[idx]
                + h10 * h * self.derivatives[idx]
                + h01 * self.values[idx + 1]
                + h11 * h * self.derivatives[idx + 1]
            )
        return out.reshape(t_arr.shape + self.values.shape[1:])


def _rk4_backward(spec: AffineModelSpec, T: float, nu: np.ndarray, grid: RiccatiGrid, dense: bool):
    n_steps = grid.steps(T)
    h = (T - grid.t_start) / n_steps
    dtype = complex if np.iscomplexobj(nu) else float
    G = -np.array(nu, dtype=dtype)
    F = np.zeros(G.shape[0], dtype=dtype)
    bound = grid.explosion_bound

    dF0, dG0 = spec.rhs(T, G)
    times = [T]
    F_nodes, G_nodes, dF_nodes, dG_nodes = [F.copy()], [G.copy()], [dF0], [dG0]

    t = T
    for step in range(n_steps):
        # RK4 with step -h in t
        k1F, k1G = (dF0, dG0) if step == 0 or dense else spec.rhs(t, G)
        k2F, k2G = spec.rhs(t - 0.5 * h, G - 0.5 * h * k1G)
        k3F, k3G = spec.rhs(t - 0.5 * h, G - 0.5 * h * k2G)
        k4F, k4G = spec.rhs(t - h, G - h * k3G)
        F = F - h / 6.0 * (k1F + 2 * k2F + 2 * k3F + k4F)
        G = G - h / 6.0 * (k1G + 2 * k2G + 2 * k3G + k4G)
        t = T - (step + 1) * h

        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))) or max(
            float(np.max(np.abs(F), initial=0.0)), float(np.max(np.abs(G), initial=0.0))
        ) > bound:
            logger.warning(f"Riccati solution exploded at t={t:.6g} (T={T})")
            raise RiccatiExplosionError(
                f"Riccati solution exceeds {bound:g} at t={t:.6g}", blow_up_time=float(t), T=T
            )
        if dense:
            dF0, dG0 = spec.rhs(t, G)
            times.append(t)
            F_nodes.append(F.copy())
            G_nodes.append(G.copy())
            dF_nodes.append(dF0)
            dG_nodes.append(dG0)

    if not dense:
        dF_end, dG_end = spec.rhs(t, G)
        times.append(t)
        F_nodes.append(F)
        G_nodes.append(G)
        dF_nodes.append(dF_end)
        dG_nodes.append(dG_end)

    order = slice(None, None, -1)  # ascending in t
    times = np.array(times)[order]
    F_path = _HermitePath(times, np.array(F_nodes)[order], np.array(dF_nodes)[order], grid.t_start, T)
    G_path = _HermitePath(times, np.array(G_nodes)[order], np.array(dG_nodes)[order], grid.t_start, T)
    meta = {"steps": n_steps, "h": h, "t_start": grid.t_start, "dense": dense}
    return F_path, G_path, meta


def _dense_guard(path: _HermitePath, dense: bool):
    if dense:
        return path

    def endpoints_only(t):
        t_arr = np.asarray(t, dtype=float)
        at_nodes = np.isclose(t_arr, path.t_start, rtol=0, atol=1e-12) | np.isclose(
            t_arr, path.T, rtol=0, atol=1e-12
        )
        if not np.all(at_nodes):
            raise ParameterError("coefficients were solved without the dense path; only t_start and T are available")
        return path(t)

    return endpoints_only


def solve_riccati(
    model,
    T: float,
    nu,
    grid: RiccatiGrid | None = None,
    method: str = "auto",
    dense: bool = True,
) -> BondCoefficients:
    """Solves the Riccati system backward from T.

    `model` is an AffineModelSpec or a model object exposing `.spec` and, optionally,
    `.closed_form(T, nu, t_start)`. `method` is "auto" (closed form when registered),
    "numeric" or "closed-form".
    """
    grid = grid or RiccatiGrid()
    spec = getattr(model, "spec", model)
    if T < grid.t_start:
        raise ParameterError(f"T={T} precedes the grid start {grid.t_start}")
    nu_arr = _as_nu(nu, spec.d)
    single = nu_arr.ndim == 1
    batch = nu_arr.reshape(-1, spec.d)

    if method not in ("auto", "numeric", "closed-form"):
        raise ParameterError(f"unknown Riccati method {method!r}")

    if method != "numeric" and hasattr(model, "closed_form"):
        try:
            coeffs = model.closed_form(T, batch, grid.t_start)
        except UnsupportedNuError:
            if method == "closed-form":
                raise
            coeffs = None
        if coeffs is not None:
            F, G = _unbatch(coeffs.F, coeffs.G, single)
            return BondCoefficients(T, nu_arr, F, G, coeffs.provenance)
    if method == "closed-form":
        raise UnsupportedNuError(f"no closed form registered for {type(model).__name__}")

    memo_key = None
    cache_key = getattr(model, "cache_key", None)
    if cache_key is not None and not np.any(batch) and not np.iscomplexobj(batch):
        memo_key = (cache_key, float(T), batch.shape, grid, dense)
        cached = riccati_memo.get(memo_key)
        if cached is not None:
            F, G = _unbatch(cached.F, cached.G, single)
            return BondCoefficients(T, nu_arr, F, G, cached.provenance)

    F_path, G_path, meta = _rk4_backward(spec, T, batch, grid, dense)
    provenance = {"F": "numeric", "G": "numeric", "grid": meta}
    batched = BondCoefficients(
        T, batch, _dense_guard(F_path, dense), _dense_guard(G_path, dense), provenance
    )
    if memo_key is not None:
        riccati_memo.put(memo_key, batched)
    F, G = _unbatch(batched.F, batched.G, single)
    return BondCoefficients(T, nu_arr, F, G, provenance)


def gamma_transform(model, state: StatePoint, T: float, nu, grid: RiccatiGrid | None = None):
    """exp(-F(t; T, nu) - G(t; T, nu).y) at the state's (t, y); vectorised over a nu batch."""
    if state.t > T:
        raise ParameterError(f"state time {state.t} is after T={T}")
    base = grid or RiccatiGrid()
    local = RiccatiGrid(base.steps_per_unit_time, state.t, base.explosion_bound)
    coeffs = solve_riccati(model, T, nu, local, dense=False)
    F = coeffs.F(state.t)
    G = coeffs.G(state.t)
    value = np.exp(-F - G @ state.y)
    return value if np.ndim(value) else complex(value) if np.iscomplexobj(value) else float(value)


def bond_price(model, state: StatePoint, T: float, grid: RiccatiGrid | None = None) -> float:
    """Zero-coupon bond price Gamma(t, y; T, 0)."""
    if state.t == T:
        return 1.0
    spec = getattr(model, "spec", model)
    return float(gamma_transform(model, state, T, np.zeros(spec.d), grid))


def riccati_residual(model, coeffs: BondCoefficients, times: Sequence[float], step: float = 1e-4) -> float:
    """Sup-norm residual of the Riccati ODEs, derivatives by central differences in t."""
    spec = getattr(model, "spec", model)
    times = np.asarray(times, dtype=float)
    worst = 0.0
    for t in times:
        dF = (coeffs.F(t + step) - coeffs.F(t - step)) / (2 * step)
        dG = (coeffs.G(t + step) - coeffs.G(t - step)) / (2 * step)
        G = np.asarray(coeffs.G(t)).reshape(-1, spec.d)
        rF, rG = spec.rhs(t, G)
        worst = max(
            worst,
            float(np.max(np.abs(np.ravel(dF) - rF))),
            float(np.max(np.abs(np.asarray(dG).reshape(-1, spec.d) - rG))),
        )
    return worst
