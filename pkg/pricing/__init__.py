# pricing/__init__.py
"""Bond options under affine short-rate models: exact Fourier prices, explicit
implied-volatility approximations and a Monte Carlo oracle."""

from pricing.affine import (
    AffineModelSpec,
    BondCoefficients,
    RiccatiGrid,
    StatePoint,
    bond_price,
    constant,
    gamma_transform,
    riccati_residual,
    solve_riccati,
)
from pricing.blackscholes import BSInputs, bs_call, bs_put, bs_vega, bs_volga, call_price, implied_vol
from pricing.chf import SeriesConfig, gamma_euler, kummer_m, reciprocal_gamma, tricomi_u
from pricing.errors import PricingError
from pricing.fourier import (
    InversionConfig,
    PayoffTransform,
    exact_implied_vol,
    forward_call_price,
    forward_call_prices,
    option_value_u,
)
from pricing.ivol import (
    HermiteContext,
    IVExpansion,
    QuadratureConfig,
    TimeIntegralTable,
    expand,
    nested_integrals,
    order0_price,
    price_approximation,
    sigma0,
    sigma1,
    sigma2,
    sigma_bar,
)
from pricing.lsv import ForwardLogPrice, GeneratorCoefficients, coefficients, eta, generic_coefficients, log_forward
from pricing.models import (
    AffineModel,
    CIR2DModel,
    CIR2DParams,
    CIRModel,
    CIRParams,
    FongVasicekModel,
    FongVasicekParams,
    VasicekModel,
    VasicekParams,
    build_model,
    closed_form_FG,
    fv_G2,
    model_from_config,
    to_affine,
    vasicek_sigma,
    vasicek_sigma_limits,
)
from pricing.montecarlo import (
    MCEstimate,
    SimConfig,
    forward_call_mc,
    simulate_discounted_payoff,
    simulate_transform,
)

__all__ = [
    "AffineModelSpec",
    "BondCoefficients",
    "RiccatiGrid",
    "StatePoint",
    "bond_price",
    "constant",
    "gamma_transform",
    "riccati_residual",
    "solve_riccati",
    "BSInputs",
    "bs_call",
    "bs_put",
    "bs_vega",
    "bs_volga",
    "call_price",
    "implied_vol",
    "SeriesConfig",
    "gamma_euler",
    "kummer_m",
    "reciprocal_gamma",
    "tricomi_u",
    "PricingError",
    "InversionConfig",
    "PayoffTransform",
    "exact_implied_vol",
    "forward_call_price",
    "forward_call_prices",
    "option_value_u",
    "HermiteContext",
    "IVExpansion",
    "QuadratureConfig",
    "TimeIntegralTable",
    "expand",
    "nested_integrals",
    "order0_price",
    "price_approximation",
    "sigma0",
    "sigma1",
    "sigma2",
    "sigma_bar",
    "ForwardLogPrice",
    "GeneratorCoefficients",
    "coefficients",
    "eta",
    "generic_coefficients",
    "log_forward",
    "AffineModel",
    "CIR2DModel",
    "CIR2DParams",
    "CIRModel",
    "CIRParams",
    "FongVasicekModel",
    "FongVasicekParams",
    "VasicekModel",
    "VasicekParams",
    "build_model",
    "closed_form_FG",
    "fv_G2",
    "model_from_config",
    "to_affine",
    "vasicek_sigma",
    "vasicek_sigma_limits",
    "MCEstimate",
    "SimConfig",
    "forward_call_mc",
    "simulate_discounted_payoff",
    "simulate_transform",
]
