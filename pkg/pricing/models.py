# pricing/models.py
"""Registered short-rate models: Vasicek, CIR, two-factor CIR and Fong-Vasicek.

Each model object carries its AffineModelSpec together with the pieces the other
modules need: closed-form bond coefficients, drift and diffusion for simulation,
and the admissible-domain flags of its state.
"""
import cmath
import logging
import math
from dataclasses import dataclass, asdict

import numpy as np

from config import config
from pricing.affine import AffineModelSpec, BondCoefficients, StatePoint, constant
from pricing.chf import SeriesConfig, kummer_m, nudge_integer_b, tricomi_u
from pricing.errors import (
    ConfigError,
    ConsistencyError,
    DegenerateParameterError,
    ParameterError,
    UnsupportedNuError,
)
from utils.helpers import gauss_legendre

logger = logging.getLogger(__name__)

_F_QUADRATURE_NODES = 48


# --- Parameter sets ---


@dataclass(frozen=True)
class VasicekParams:
    kappa: float
    theta: float
    delta: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ParameterError(f"Vasicek kappa must be positive, got {self.kappa}")
        if not self.delta > 0:
            raise ParameterError(f"Vasicek delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class CIRParams:
    kappa: float
    theta: float
    delta: float

    def __post_init__(self):
        for name in ("kappa", "theta", "delta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"CIR {name} must be positive, got {getattr(self, name)}")
        if self.feller_ratio <= 1.0:
            logger.warning(
                f"Feller condition violated: 2*kappa*theta/delta^2 = {self.feller_ratio:.4f} <= 1"
            )

    @property
    def Lambda(self) -> float:
        return math.sqrt(self.kappa**2 + 2.0 * self.delta**2)

    @property
    def feller_ratio(self) -> float:
        return 2.0 * self.kappa * self.theta / self.delta**2


@dataclass(frozen=True)
class CIR2DParams:
    factor1: CIRParams
    factor2: CIRParams

    def __post_init__(self):
        for name in ("factor1", "factor2"):
            if not isinstance(getattr(self, name), CIRParams):
                raise ParameterError(f"{name} must be a CIRParams instance")


@dataclass(frozen=True)
class FongVasicekParams:
    kappa1: float
    theta1: float
    kappa2: float
    theta2: float
    delta2: float
    rho: float

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "delta2"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"Fong-Vasicek {name} must be positive, got {getattr(self, name)}")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"correlation must lie in [-1, 1], got {self.rho}")

    @property
    def rhobar(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.rho**2))


# --- Identification with the affine class ---


def to_affine(params) -> AffineModelSpec:
    """(q, psi, b, beta, ell, lam) of a registered parameter set."""
    if isinstance(params, VasicekParams):
        k, th, dl = params.kappa, params.theta, params.delta
        return AffineModelSpec(
            d=1,
            q=0.0,
            psi=[1.0],
            b=constant([k * th]),
            beta=(constant([-k]),),
            ell=constant([[dl**2]]),
            lam=(constant([[0.0]]),),
        )
    if isinstance(params, CIRParams):
        k, th, dl = params.kappa, params.theta, params.delta
        return AffineModelSpec(
            d=1,
            q=0.0,
            psi=[1.0],
            b=constant([k * th]),
            beta=(constant([-k]),),
            ell=constant([[0.0]]),
            lam=(constant([[dl**2]]),),
        )
    if isinstance(params, CIR2DParams):
        f1, f2 = params.factor1, params.factor2
        return AffineModelSpec(
            d=2,
            q=0.0,
            psi=[1.0, 1.0],
            b=constant([f1.kappa * f1.theta, f2.kappa * f2.theta]),
            beta=(constant([-f1.kappa, 0.0]), constant([0.0, -f2.kappa])),
            ell=constant(np.zeros((2, 2))),
            lam=(
                constant([[f1.delta**2, 0.0], [0.0, 0.0]]),
                constant([[0.0, 0.0], [0.0, f2.delta**2]]),
            ),
        )
    if isinstance(params, FongVasicekParams):
        p = params
        return AffineModelSpec(
            d=2,
            q=0.0,
            psi=[1.0, 0.0],
            b=constant([p.kappa1 * p.theta1, p.kappa2 * p.theta2]),
            beta=(constant([-p.kappa1, 0.0]), constant([0.0, -p.kappa2])),
            ell=constant(np.zeros((2, 2))),
            lam=(
                constant(np.zeros((2, 2))),
                constant([[1.0, p.delta2 * p.rho], [p.delta2 * p.rho, p.delta2**2]]),
            ),
        )
    raise ParameterError(f"no affine identification for {type(params).__name__}")


# --- Closed forms ---


def _tau(t, T):
    return T - np.asarray(t, dtype=float)


def _cir_FG(kappa, theta, delta, tau, nu):
    """CIR F and G for tau (any shape) against nu (n,), broadcast to tau.shape + (n,)."""
    lam = math.sqrt(kappa**2 + 2.0 * delta**2)
    tau = np.asarray(tau)[..., None]
    nu = np.asarray(nu)
    growth = np.expm1(lam * tau)  # e^{Lambda tau} - 1
    denom = -(delta**2) * nu * growth + lam * (growth + 2.0) + kappa * growth
    G = (2.0 * growth - (lam * (growth + 2.0) - kappa * growth) * nu) / denom
    log_denom = np.log(denom.astype(complex)) if np.iscomplexobj(denom) else np.log(denom)
    F = -(2.0 * kappa * theta / delta**2) * (math.log(2.0 * lam) + 0.5 * (lam + kappa) * tau - log_denom)
    return F, G


def _vasicek_G(kappa, tau, nu):
    tau = np.asarray(tau)[..., None]
    decay = np.exp(-kappa * tau)
    return -decay * nu + (-np.expm1(-kappa * tau)) / kappa


def _fv_constants(params: FongVasicekParams):
    k1, k2, dl, rho = params.kappa1, params.kappa2, params.delta2, params.rho
    rhobar = params.rhobar
    if rhobar == 0.0:
        raise DegenerateParameterError(
            "Fong-Vasicek closed form needs |rho| < 1", rho=rho
        )
    beta2 = cmath.sqrt((dl * rho + k1 * k2) ** 2 - dl**2)
    alpha1 = dl * k1**2 * (rho + 1j * rhobar)
    alpha2 = -(k1**2) * (dl * rho + k1 * k2 + beta2)
    beta1 = dl * rhobar**2 + rho * k1 * (k1 - k2)
    beta = dl * (beta1 + 1j * rhobar * (beta2 + k1**2))
    Psi = nudge_integer_b(beta2 / k1**2 + 1.0)
    Phi = Psi / 2.0 + beta1 / (2j * k1**2 * rhobar)
    zeta = 1j * dl * rhobar / k1**2
    gam = -2.0 * Phi * k1**4 * zeta / Psi
    return {
        "alpha1": alpha1,
        "alpha2": alpha2,
        "alpha": alpha1 + alpha2,
        "beta": beta,
        "beta1": beta1,
        "beta2": beta2,
        "Phi": Phi,
        "Psi": Psi,
        "zeta": zeta,
        "gamma": gam,
    }


def fv_G2(params: FongVasicekParams, t, T: float, series: SeriesConfig | None = None):
    """G_2(t; T, 0) of the Fong-Vasicek model from confluent hypergeometric functions.

    Evaluated in complex arithmetic; the real part is returned once the imaginary
    residue is below the configured tolerance.
    """
    series = series or SeriesConfig()
    c = _fv_constants(params)
    k1, dl = params.kappa1, params.delta2
    Phi, Psi, zeta = c["Phi"], c["Psi"], c["zeta"]

    M0 = kummer_m(Phi, Psi, zeta, series)
    M1 = kummer_m(Phi + 1, Psi + 1, zeta, series)
    U0 = tricomi_u(Phi, Psi, zeta, series)
    U1 = tricomi_u(Phi + 1, Psi + 1, zeta, series)
    lam = -(c["gamma"] * M1 + c["alpha"] * M0) / (c["beta"] * U1 + c["alpha"] * U0)

    tau = _tau(t, T)
    if np.any(tau < 0):
        raise ParameterError("fv_G2 requires t <= T")
    decay = np.exp(-k1 * tau)
    z = decay * zeta
    ratio = (c["beta"] * lam * tricomi_u(Phi + 1, Psi + 1, z, series) + c["gamma"] * kummer_m(Phi + 1, Psi + 1, z, series)) / (
        lam * tricomi_u(Phi, Psi, z, series) + kummer_m(Phi, Psi, z, series)
    )
    value = decay / (dl**2 * k1**3) * (c["alpha1"] + c["alpha2"] / decay + ratio)
    value = np.where(tau == 0.0, 0.0, value)

    residue = np.abs(np.imag(value))
    scale = np.maximum(np.abs(np.real(value)), 1.0)
    if np.any(residue > config.CHF_IMAG_TOLERANCE * scale):
        raise ConsistencyError(
            "Fong-Vasicek G2 has a non-negligible imaginary part",
            max_imag=float(np.max(residue)),
        )
    real = np.real(value)
    return float(real) if np.ndim(real) == 0 else real


def fv_G1(params: FongVasicekParams, tau):
    return -np.expm1(-params.kappa1 * np.asarray(tau, dtype=float)) / params.kappa1


def closed_form_FG(params, t, T: float, nu):
    """Closed-form (F, G) at times t for a single nu; see the model classes for batches."""
    model = build_model(params)
    nu_arr = np.asarray(nu).reshape(-1, model.d)
    coeffs = model.closed_form(T, nu_arr, float(np.min(t)))
    if coeffs is None:
        raise UnsupportedNuError(f"{type(params).__name__} has no closed form here")
    return coeffs.F(t)[..., 0], coeffs.G(t)[..., 0, :]


# --- Model objects ---


class ShortRateModel:
    """Base for model objects consumed by the Riccati, Fourier, LSV and Monte Carlo layers."""

    name = "affine"

    def __init__(self, spec: AffineModelSpec, nonnegative=None):
        self.spec = spec
        self.d = spec.d
        self.nonnegative = tuple(nonnegative) if nonnegative else (False,) * spec.d

    @property
    def cache_key(self):
        return None

    def closed_form(self, T: float, nu: np.ndarray, t_start: float = 0.0) -> BondCoefficients | None:
        return None

    def state(self, t: float, y) -> StatePoint:
        return StatePoint(t, y, self.nonnegative)

    def short_rate(self, y):
        y = np.asarray(y, dtype=float)
        return self.spec.q + y @ self.spec.psi

    def drift(self, t: float, y):
        """mu(t, y) for states of shape (n, d)."""
        b, B, _, _ = self.spec.at(t)
        return b + np.asarray(y, dtype=float) @ B

    def diffusion(self, t: float, y):
        """sigma(t, y) of shape (n, d, d): symmetric PSD square root of ell + sum lam_i y_i."""
        _, _, ell, Lam = self.spec.at(t)
        y = np.atleast_2d(np.asarray(y, dtype=float))
        matrices = ell + np.einsum("ni,ijk->njk", y, Lam)
        vals, vecs = np.linalg.eigh(0.5 * (matrices + np.swapaxes(matrices, -1, -2)))
        root = np.sqrt(np.clip(vals, 0.0, None))
        return np.einsum("nij,nj,nkj->nik", vecs, root, vecs)

    def describe(self) -> dict:
        return {"model": self.name, "d": self.d}


class AffineModel(ShortRateModel):
    """User-defined affine model without closed forms."""

    def __init__(self, spec: AffineModelSpec, nonnegative=None, name: str = "affine"):
        super().__init__(spec, nonnegative)
        self.name = name


class VasicekModel(ShortRateModel):
    name = "vasicek"

    def __init__(self, params: VasicekParams):
        super().__init__(to_affine(params), (False,))
        self.params = params

    @property
    def cache_key(self):
        return (self.name, self.params)

    def closed_form(self, T, nu, t_start=0.0):
        p = self.params
        nu = np.asarray(nu)[:, 0]

        def G(t):
            return _vasicek_G(p.kappa, _tau(t, T), nu)[..., None]

        x_ref, w_ref = gauss_legendre(_F_QUADRATURE_NODES, 0.0, 1.0)

        def F(t):
            # F(t) = int_t^T (kappa theta G - 1/2 delta^2 G^2) ds
            tau = _tau(t, T)
            s_tau = tau[..., None] * x_ref  # remaining time at the quadrature nodes
            g = _vasicek_G(p.kappa, s_tau, nu)
            integrand = p.kappa * p.theta * g - 0.5 * p.delta**2 * g**2
            return np.einsum("...qn,q->...n", integrand, w_ref) * tau[..., None]

        return BondCoefficients(T, nu[:, None], F, G, {"F": "numeric", "G": "closed-form"})

    def diffusion(self, t, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.full((y.shape[0], 1, 1), self.params.delta)

    def describe(self):
        return {"model": self.name, **asdict(self.params)}


class CIRModel(ShortRateModel):
    name = "cir"

    def __init__(self, params: CIRParams):
        super().__init__(to_affine(params), (True,))
        self.params = params

    @property
    def cache_key(self):
        return (self.name, self.params)

    def closed_form(self, T, nu, t_start=0.0):
        p = self.params
        nu = np.asarray(nu)[:, 0]

        def F(t):
            return _cir_FG(p.kappa, p.theta, p.delta, _tau(t, T), nu)[0]

        def G(t):
            return _cir_FG(p.kappa, p.theta, p.delta, _tau(t, T), nu)[1][..., None]

        return BondCoefficients(T, nu[:, None], F, G, {"F": "closed-form", "G": "closed-form"})

    def diffusion(self, t, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return (self.params.delta * np.sqrt(np.maximum(y[:, 0], 0.0)))[:, None, None]

    def describe(self):
        return {"model": self.name, **asdict(self.params)}


class CIR2DModel(ShortRateModel):
    name = "cir2d"

    def __init__(self, params: CIR2DParams):
        super().__init__(to_affine(params), (True, True))
        self.params = params

    @property
    def cache_key(self):
        return (self.name, self.params)

    def closed_form(self, T, nu, t_start=0.0):
        f1, f2 = self.params.factor1, self.params.factor2
        nu = np.asarray(nu)

        def F(t):
            tau = _tau(t, T)
            return (
                _cir_FG(f1.kappa, f1.theta, f1.delta, tau, nu[:, 0])[0]
                + _cir_FG(f2.kappa, f2.theta, f2.delta, tau, nu[:, 1])[0]
            )

        def G(t):
            tau = _tau(t, T)
            return np.stack(
                [
                    _cir_FG(f1.kappa, f1.theta, f1.delta, tau, nu[:, 0])[1],
                    _cir_FG(f2.kappa, f2.theta, f2.delta, tau, nu[:, 1])[1],
                ],
                axis=-1,
            )

        return BondCoefficients(T, nu, F, G, {"F": "closed-form", "G": "closed-form"})

    def diffusion(self, t, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.zeros((y.shape[0], 2, 2))
        out[:, 0, 0] = self.params.factor1.delta * np.sqrt(np.maximum(y[:, 0], 0.0))
        out[:, 1, 1] = self.params.factor2.delta * np.sqrt(np.maximum(y[:, 1], 0.0))
        return out

    def describe(self):
        return {
            "model": self.name,
            "factor1": asdict(self.params.factor1),
            "factor2": asdict(self.params.factor2),
        }


class FongVasicekModel(ShortRateModel):
    name = "fong-vasicek"

    def __init__(self, params: FongVasicekParams):
        super().__init__(to_affine(params), (False, True))
        self.params = params

    @property
    def cache_key(self):
        return (self.name, self.params)

    def closed_form(self, T, nu, t_start=0.0):
        nu = np.asarray(nu)
        if np.any(nu != 0):
            raise UnsupportedNuError("Fong-Vasicek closed form is available for nu = 0 only")
        p = self.params
        n = nu.shape[0]
        try:
            _fv_constants(p)
        except DegenerateParameterError as e:
            logger.warning(f"Fong-Vasicek closed form unavailable ({e}); using the numeric solver")
            return None
        x_ref, w_ref = gauss_legendre(_F_QUADRATURE_NODES, 0.0, 1.0)

        def G(t):
            tau = _tau(t, T)
            g1 = fv_G1(p, tau)
            g2 = fv_G2(p, T - tau, T)
            out = np.stack([g1, g2], axis=-1)
            return np.broadcast_to(out[..., None, :], tau.shape + (n, 2))

        def F(t):
            tau = _tau(t, T)
            int_g1 = (tau + np.expm1(-p.kappa1 * tau) / p.kappa1) / p.kappa1
            remaining = tau[..., None] * x_ref
            int_g2 = np.tensordot(fv_G2(p, T - remaining, T), w_ref, axes=([-1], [0])) * tau
            value = p.kappa1 * p.theta1 * int_g1 + p.kappa2 * p.theta2 * int_g2
            return np.broadcast_to(value[..., None], tau.shape + (n,))

        return BondCoefficients(T, nu, F, G, {"F": "closed-form+quadrature", "G": "closed-form"})

    def diffusion(self, t, y):
        p = self.params
        y = np.atleast_2d(np.asarray(y, dtype=float))
        root = np.sqrt(np.maximum(y[:, 1], 0.0))
        out = np.zeros((y.shape[0], 2, 2))
        out[:, 0, 0] = root
        out[:, 1, 0] = p.delta2 * p.rho * root
        out[:, 1, 1] = p.delta2 * p.rhobar * root
        return out

    def describe(self):
        return {"model": self.name, **asdict(self.params)}


_MODEL_CLASSES = {
    VasicekParams: VasicekModel,
    CIRParams: CIRModel,
    CIR2DParams: CIR2DModel,
    FongVasicekParams: FongVasicekModel,
}


def build_model(params) -> ShortRateModel:
    try:
        return _MODEL_CLASSES[type(params)](params)
    except KeyError:
        raise ParameterError(f"unknown parameter set {type(params).__name__}") from None


def model_from_config(name: str, mapping: dict) -> ShortRateModel:
    """Builds a registered model from its name and a parameter mapping."""
    key = (name or "").strip().lower().replace("_", "-")
    try:
        if key == "vasicek":
            return VasicekModel(VasicekParams(**mapping))
        if key == "cir":
            return CIRModel(CIRParams(**mapping))
        if key in ("cir2d", "2d-cir", "cir-2d"):
            return CIR2DModel(
                CIR2DParams(CIRParams(**mapping["factor1"]), CIRParams(**mapping["factor2"]))
            )
        if key in ("fong-vasicek", "fv"):
            return FongVasicekModel(FongVasicekParams(**mapping))
    except (TypeError, KeyError) as e:
        raise ConfigError(f"invalid parameters for model {name!r}: {e}", model=name) from e
    raise ConfigError(f"unknown model {name!r}", model=name)


# --- Vasicek implied volatility (exact in this model) ---


def vasicek_sigma(params: VasicekParams, t, T: float, Tbar: float):
    """Closed-form implied volatility of a T-expiry call on the Tbar bond."""
    k, dl = params.kappa, params.delta
    tau = _tau(t, T)
    with np.errstate(invalid="ignore", divide="ignore"):
        time_factor = np.where(tau > 0, -np.expm1(-2.0 * k * tau) / (2.0 * tau), k)
    value = dl / k**1.5 * np.sqrt(time_factor) * (-np.expm1(-k * (Tbar - T)))
    return float(value) if np.ndim(value) == 0 else value


def vasicek_sigma_limits(params: VasicekParams, t: float, T: float, Tbar: float) -> dict:
    """The four limiting values of the Vasicek implied volatility."""
    k, dl = params.kappa, params.delta
    tau = T - t
    long_bond = dl / k**1.5 * math.sqrt(-math.expm1(-2.0 * k * tau) / (2.0 * tau)) if tau > 0 else dl / k
    return {
        "t_to_T": dl / k * (-math.expm1(-k * (Tbar - T))),
        "T_to_Tbar": 0.0,
        "Tbar_to_infinity": long_bond,
        "t_to_T_and_Tbar_to_infinity": dl / k,
    }
