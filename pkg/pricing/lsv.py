# pricing/lsv.py
"""Local-stochastic-volatility form of an affine short-rate model.

Under the T-forward measure the log forward bond price X = log(B^Tbar / B^T)
and the residual factors follow a diffusion with generator

    c (d_x^2 - d_x) + f d_y + g d_y^2 + h d_x d_y        (d = 2)
    c (d_x^2 - d_x)                                      (d = 1)

This module evaluates c, f, g, h and their Taylor coefficients
chi_{i,j} = d_x^i d_y^j chi / (i! j!) at the expansion point (x, ytilde).
"""
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pricing.affine import RiccatiGrid, solve_riccati
from pricing.errors import CapabilityError, DegeneracyError, ParameterError
from pricing.models import CIR2DModel, CIRModel, FongVasicekModel, VasicekModel

logger = logging.getLogger(__name__)

_DEGENERACY_TOLERANCE = 1e-14


@dataclass(frozen=True)
class ForwardLogPrice:
    x: float
    ytilde: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ytilde", tuple(float(v) for v in np.ravel(self.ytilde)))
        if not np.isfinite(self.x):
            raise ParameterError(f"log forward price must be finite, got {self.x}")


class BondCurves:
    """F and G at nu = 0 for maturities T and Tbar, as functions of time on [t, T]."""

    def __init__(self, model, t: float, T: float, Tbar: float, grid: RiccatiGrid | None = None):
        if not t <= T <= Tbar:
            raise ParameterError(f"require t <= T <= Tbar, got t={t}, T={T}, Tbar={Tbar}")
        base = grid or RiccatiGrid()
        local = RiccatiGrid(base.steps_per_unit_time, t, base.explosion_bound)
        d = getattr(model, "spec", model).d
        self.model = model
        self.d = d
        self.t, self.T, self.Tbar = t, T, Tbar
        self._short = solve_riccati(model, T, np.zeros(d), local)
        self._long = solve_riccati(model, Tbar, np.zeros(d), local)

    def F_T(self, s):
        return np.asarray(self._short.F(s), dtype=float)

    def F_Tbar(self, s):
        return np.asarray(self._long.F(s), dtype=float)

    def G_T(self, s):
        return np.asarray(self._short.G(s), dtype=float)

    def G_Tbar(self, s):
        return np.asarray(self._long.G(s), dtype=float)

    def dG(self, s):
        """G(s; T, 0) - G(s; Tbar, 0), shape s.shape + (d,)."""
        return self.G_T(s) - self.G_Tbar(s)

    def numerator(self, s, x, ytilde):
        """F(s;T) - F(s;Tbar) - x + sum_{i>=2} (G_i(s;T) - G_i(s;Tbar)) y_i."""
        value = self.F_T(s) - self.F_Tbar(s) - x
        if self.d > 1:
            value = value + self.dG(s)[..., 1:] @ np.asarray(ytilde, dtype=float)
        return value

    def denominator(self, s):
        """G_1(s;Tbar) - G_1(s;T)."""
        return -self.dG(s)[..., 0]


def _check_denominator(curves: BondCurves, t: float):
    denom = curves.denominator(t)
    if abs(float(denom)) <= _DEGENERACY_TOLERANCE:
        raise DegeneracyError(
            "G_1(t;Tbar,0) - G_1(t;T,0) vanishes; eta is undefined",
            t=t,
            T=curves.T,
            Tbar=curves.Tbar,
        )
    return float(denom)


def eta(model, t: float, x: float, ytilde, T: float, Tbar: float, grid: RiccatiGrid | None = None) -> float:
    """First state coordinate implied by the log forward price x and the residual factors."""
    if T == Tbar:
        raise DegeneracyError("eta is undefined for T == Tbar", T=T, Tbar=Tbar)
    curves = BondCurves(model, t, T, Tbar, grid)
    denom = _check_denominator(curves, t)
    return float(curves.numerator(t, x, ytilde)) / denom


def log_forward(model, t: float, y, T: float, Tbar: float, grid: RiccatiGrid | None = None) -> float:
    """x = F(t;T) - F(t;Tbar) + sum_i (G_i(t;T) - G_i(t;Tbar)) y_i."""
    curves = BondCurves(model, t, T, Tbar, grid)
    y = np.asarray(y, dtype=float)
    return float(curves.F_T(t) - curves.F_Tbar(t) + curves.dG(t) @ y)


def _zero(s):
    return np.zeros(np.shape(s))


@dataclass(frozen=True)
class GeneratorCoefficients:
    """c, f, g, h as functions of (s, x, ytilde) and their Taylor coefficients in s.

    `taylor` maps (name, i, j) to a function of time; entries not present are zero.
    """

    d: int
    c: Callable
    f: Callable
    g: Callable
    h: Callable
    taylor: dict
    t: float
    T: float
    Tbar: float
    x: float
    ytilde: tuple = ()
    source: str = "specialized"
    meta: dict = field(default_factory=dict)

    def chi(self, name: str, i: int, j: int, s):
        func = self.taylor.get((name, i, j))
        if func is None:
            return _zero(s)
        return np.broadcast_to(np.asarray(func(s), dtype=float), np.shape(s))

    def nonzero(self):
        return sorted(self.taylor)


def _zero3(s, x, ytilde):
    return _zero(s)


def _vasicek_coefficients(model: VasicekModel, curves: BondCurves, x, ytilde):
    delta = model.params.delta

    def c(s, x_, y_=()):
        return 0.5 * delta**2 * curves.dG(s)[..., 0] ** 2

    taylor = {("c", 0, 0): lambda s: c(s, x)}
    return c, _zero3, _zero3, _zero3, taylor


def _cir_coefficients(model: CIRModel, curves: BondCurves, x, ytilde):
    delta = model.params.delta

    def c(s, x_, y_=()):
        return 0.5 * delta**2 * curves.numerator(s, x_, ()) * curves.denominator(s)

    taylor = {
        ("c", 0, 0): lambda s: c(s, x),
        ("c", 1, 0): lambda s: -0.5 * delta**2 * curves.denominator(s),
    }
    return c, _zero3, _zero3, _zero3, taylor


def _cir2d_coefficients(model: CIR2DModel, curves: BondCurves, x, ytilde):
    f1, f2 = model.params.factor1, model.params.factor2
    y2 = float(ytilde[0])

    def c(s, x_, y_):
        y2_ = float(np.ravel(y_)[0])
        dG2 = curves.dG(s)[..., 1]
        return (
            0.5 * f1.delta**2 * curves.numerator(s, x_, [y2_]) * curves.denominator(s)
            + 0.5 * f2.delta**2 * dG2**2 * y2_
        )

    def f(s, x_, y_):
        y2_ = float(np.ravel(y_)[0])
        return f2.kappa * (f2.theta - y2_) - f2.delta**2 * y2_ * curves.G_T(s)[..., 1]

    def g(s, x_, y_):
        return np.full(np.shape(s), 0.5 * f2.delta**2 * float(np.ravel(y_)[0]))

    def h(s, x_, y_):
        return f2.delta**2 * float(np.ravel(y_)[0]) * curves.dG(s)[..., 1]

    taylor = {
        ("c", 0, 0): lambda s: c(s, x, [y2]),
        ("f", 0, 0): lambda s: f(s, x, [y2]),
        ("g", 0, 0): lambda s: g(s, x, [y2]),
        ("h", 0, 0): lambda s: h(s, x, [y2]),
        ("c", 1, 0): lambda s: -0.5 * f1.delta**2 * curves.denominator(s),
        ("c", 0, 1): lambda s: 0.5 * f1.delta**2 * curves.dG(s)[..., 1] * curves.denominator(s)
        + 0.5 * f2.delta**2 * curves.dG(s)[..., 1] ** 2,
        ("f", 0, 1): lambda s: -f2.kappa - f2.delta**2 * curves.G_T(s)[..., 1],
        ("g", 0, 1): lambda s: np.full(np.shape(s), 0.5 * f2.delta**2),
        ("h", 0, 1): lambda s: f2.delta**2 * curves.dG(s)[..., 1],
    }
    return c, f, g, h, taylor


def _fong_vasicek_coefficients(model: FongVasicekModel, curves: BondCurves, x, ytilde):
    p = model.params
    dl, rho = p.delta2, p.rho
    y2 = float(ytilde[0])

    def c_unit(s):
        dG = curves.dG(s)
        return 0.5 * dG[..., 0] ** 2 + rho * dl * dG[..., 0] * dG[..., 1] + 0.5 * dl**2 * dG[..., 1] ** 2

    def h_unit(s):
        dG = curves.dG(s)
        return dl**2 * dG[..., 1] + rho * dl * dG[..., 0]

    def c(s, x_, y_):
        return float(np.ravel(y_)[0]) * c_unit(s)

    def f(s, x_, y_):
        y2_ = float(np.ravel(y_)[0])
        G = curves.G_T(s)
        return p.kappa2 * (p.theta2 - y2_) - dl**2 * y2_ * G[..., 1] - rho * dl * y2_ * G[..., 0]

    def g(s, x_, y_):
        return np.full(np.shape(s), 0.5 * dl**2 * float(np.ravel(y_)[0]))

    def h(s, x_, y_):
        return float(np.ravel(y_)[0]) * h_unit(s)

    taylor = {
        ("c", 0, 0): lambda s: c(s, x, [y2]),
        ("f", 0, 0): lambda s: f(s, x, [y2]),
        ("g", 0, 0): lambda s: g(s, x, [y2]),
        ("h", 0, 0): lambda s: h(s, x, [y2]),
        ("c", 0, 1): c_unit,
        ("f", 0, 1): lambda s: -p.kappa2 - dl**2 * curves.G_T(s)[..., 1] - rho * dl * curves.G_T(s)[..., 0],
        ("g", 0, 1): lambda s: np.full(np.shape(s), 0.5 * dl**2),
        ("h", 0, 1): h_unit,
    }
    return c, f, g, h, taylor


_SPECIALIZED = {
    VasicekModel: _vasicek_coefficients,
    CIRModel: _cir_coefficients,
    CIR2DModel: _cir2d_coefficients,
    FongVasicekModel: _fong_vasicek_coefficients,
}


def _check_inputs(model, t, T, Tbar, ytilde):
    d = getattr(model, "spec", model).d
    if d > 2:
        raise CapabilityError(
            f"generator coefficients are available for d <= 2 only (model has d={d})", d=d
        )
    if not t < T:
        raise ParameterError(f"require t < T, got t={t}, T={T}")
    if T == Tbar:
        raise DegeneracyError("generator is undefined for T == Tbar", T=T, Tbar=Tbar)
    ytilde = tuple(float(v) for v in np.ravel(ytilde))
    if len(ytilde) != d - 1:
        raise ParameterError(f"ytilde must have {d - 1} entries, got {len(ytilde)}")
    return d, ytilde


def coefficients(model, t: float, x: float, ytilde, T: float, Tbar: float, grid: RiccatiGrid | None = None) -> GeneratorCoefficients:
    """Model-specific generator coefficients at the expansion point (x, ytilde)."""
    d, ytilde = _check_inputs(model, t, T, Tbar, ytilde)
    builder = _SPECIALIZED.get(type(model))
    if builder is None:
        return generic_coefficients(model, t, x, ytilde, T, Tbar, grid)
    curves = BondCurves(model, t, T, Tbar, grid)
    _check_denominator(curves, t)
    c, f, g, h, taylor = builder(model, curves, x, ytilde)
    logger.debug(f"Generator coefficients for {type(model).__name__}: {sorted(taylor)}")
    return GeneratorCoefficients(d, c, f, g, h, taylor, t, T, Tbar, x, ytilde, "specialized")


def generic_coefficients(model, t: float, x: float, ytilde, T: float, Tbar: float, grid: RiccatiGrid | None = None) -> GeneratorCoefficients:
    """Generator coefficients from the general d = 1 / d = 2 construction.

    Uses mu and sigma sigma^T of the affine spec evaluated at y_1 = eta; every
    coefficient is affine in (x, y_2), so Taylor terms of order two vanish.
    """
    d, ytilde = _check_inputs(model, t, T, Tbar, ytilde)
    spec = getattr(model, "spec", model)
    curves = BondCurves(model, t, T, Tbar, grid)
    _check_denominator(curves, t)

    def pieces(s, x_, y_):
        # eta and its partials, then sigma sigma^T and mu at y_1 = eta
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        dG = np.atleast_2d(curves.dG(s_arr))
        denom = curves.denominator(s_arr)
        eta_val = curves.numerator(s_arr, x_, y_) / denom
        out = []
        for n, s_n in enumerate(s_arr):
            b, B, ell, Lam = spec.at(s_n)
            y_full = np.concatenate([[eta_val[n]], np.asarray(y_, dtype=float)])
            m = ell + np.tensordot(y_full, Lam, axes=1)
            mu = b + y_full @ B
            d_eta = np.concatenate([[-1.0 / denom[n]], dG[n, 1:] / denom[n]])  # d/dx, d/dy_2
            dm = [Lam[0] * d_eta[0]] + [Lam[0] * d_eta[j] + Lam[j] for j in range(1, d)]
            dmu = [B[0] * d_eta[0]] + [B[0] * d_eta[j] + B[j] for j in range(1, d)]
            out.append((m, mu, dm, dmu, dG[n]))
        return s_arr, out

    def c_of(m, dGn):
        return 0.5 * dGn @ m @ dGn

    def f_of(m, mu, G_T):
        return mu[1] - m[1] @ G_T

    def g_of(m):
        return 0.5 * m[1, 1]

    def h_of(m, dGn):
        return m[1] @ dGn

    def evaluate(kind, s, x_, y_, derivative=None):
        shape = np.shape(s)
        s_arr, parts = pieces(s, x_, y_)
        G_T = np.atleast_2d(curves.G_T(s_arr))
        values = np.empty(len(s_arr))
        for n, (m, mu, dm, dmu, dGn) in enumerate(parts):
            if derivative is not None:
                m, mu = dm[derivative], dmu[derivative]
            if kind == "c":
                values[n] = c_of(m, dGn)
            elif kind == "f":
                values[n] = f_of(m, mu, G_T[n]) if derivative is None else mu[1] - m[1] @ G_T[n]
            elif kind == "g":
                values[n] = g_of(m)
            else:
                values[n] = h_of(m, dGn)
        return values.reshape(shape)

    names = ("c",) if d == 1 else ("c", "f", "g", "h")
    taylor = {}
    for name in names:
        taylor[(name, 0, 0)] = lambda s, name=name: evaluate(name, s, x, ytilde)
        taylor[(name, 1, 0)] = lambda s, name=name: evaluate(name, s, x, ytilde, derivative=0)
        if d == 2:
            taylor[(name, 0, 1)] = lambda s, name=name: evaluate(name, s, x, ytilde, derivative=1)

    def c(s, x_, y_=()):
        return evaluate("c", s, x_, tuple(np.ravel(y_)))

    if d == 1:
        f = g = h = _zero3
    else:

        def f(s, x_, y_):
            return evaluate("f", s, x_, tuple(np.ravel(y_)))

        def g(s, x_, y_):
            return evaluate("g", s, x_, tuple(np.ravel(y_)))

        def h(s, x_, y_):
            return evaluate("h", s, x_, tuple(np.ravel(y_)))

    return GeneratorCoefficients(d, c, f, g, h, taylor, t, T, Tbar, x, ytilde, "generic")
