# tests/conftest.py
import os
import sys
import math

import numpy as np
import pytest

# --- Setup Paths ---
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# The API result cache stays off under test
os.environ.pop("REDIS_URL", None)

from pricing.affine import AffineModelSpec, constant  # noqa: E402
from pricing.models import (  # noqa: E402
    AffineModel,
    CIR2DModel,
    CIR2DParams,
    CIRModel,
    CIRParams,
    FongVasicekModel,
    FongVasicekParams,
    VasicekModel,
    VasicekParams,
)
from pricing.montecarlo import SimConfig  # noqa: E402

KAPPA = 0.9
DELTA = math.sqrt(0.033)
THETA = 0.08 / 0.9
Y0 = 0.08
COUPLED_Y = (0.04, 0.02)


@pytest.fixture
def vasicek_params():
    return VasicekParams(kappa=KAPPA, theta=THETA, delta=DELTA)


@pytest.fixture
def vasicek(vasicek_params):
    return VasicekModel(vasicek_params)


@pytest.fixture
def cir_params():
    return CIRParams(kappa=KAPPA, theta=THETA, delta=DELTA)


@pytest.fixture
def cir(cir_params):
    return CIRModel(cir_params)


@pytest.fixture
def cir2d(cir_params):
    return CIR2DModel(CIR2DParams(cir_params, cir_params))


def fong_vasicek_params(rho: float = 0.3) -> FongVasicekParams:
    return FongVasicekParams(
        kappa1=0.9, theta1=0.08, kappa2=0.9, theta2=0.08, delta2=math.sqrt(0.08), rho=rho
    )


@pytest.fixture
def fv_params():
    return fong_vasicek_params()


@pytest.fixture
def fong_vasicek(fv_params):
    return FongVasicekModel(fv_params)


def coupled_affine_model(rho: float = -0.5) -> AffineModel:
    """Square-root Y1 that moves the drift and the covariance of a Gaussian Y2."""
    a, c = 0.033, 0.01
    spec = AffineModelSpec(
        d=2,
        q=0.0,
        psi=[1.0, 1.0],
        b=constant([0.036, 0.01]),
        beta=(constant([-0.9, 0.3]), constant([0.0, -0.5])),
        ell=constant([[0.0, 0.0], [0.0, 1e-4]]),
        lam=(constant([[a, rho * math.sqrt(a * c)], [rho * math.sqrt(a * c), c]]), constant(np.zeros((2, 2)))),
    )
    return AffineModel(spec, (True, False), name="coupled")


@pytest.fixture
def coupled_affine():
    return coupled_affine_model()


@pytest.fixture
def quick_mc():
    """Reduced Monte Carlo run for unit tests."""
    return SimConfig(paths=20_000, steps_per_unit_time=200, seed=12345, block_size=5_000, max_workers=2)


@pytest.fixture
def vasicek_scenario():
    """A one-point Vasicek scenario document."""
    return {
        "name": "vasicek-test",
        "model": {"name": "vasicek", "params": {"kappa": KAPPA, "theta": THETA, "delta": DELTA}},
        "state": {"y": [Y0]},
        "times": {"t": 0.0, "T": 0.5, "Tbar": 1.0},
        "strikes": {"k_minus_x": [0.0]},
        "engines": ["sigma_bar0"],
    }
