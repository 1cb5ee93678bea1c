# tests/test_chf.py
import logging
import math

import numpy as np
import pytest
from scipy import special

from pricing.chf import (
    CHFArgs,
    SeriesConfig,
    gamma_euler,
    kummer_m,
    nudge_integer_b,
    reciprocal_gamma,
    tricomi_u,
)
from pricing.errors import DegenerateParameterError, ParameterError, SeriesConvergenceError
from pricing.models import _fv_constants

from conftest import fong_vasicek_params


@pytest.mark.parametrize(
    "z, expected",
    [(1.0, 1.0), (5.0, 24.0), (0.5, math.sqrt(math.pi)), (-0.5, -2.0 * math.sqrt(math.pi))],
)
def test_gamma_known_values(z, expected):
    assert gamma_euler(z) == pytest.approx(expected, rel=1e-12)


def test_gamma_recurrence_and_scipy_agreement():
    z = 0.3 + 0.4j
    assert abs(gamma_euler(z + 1) - z * gamma_euler(z)) <= 1e-12 * abs(gamma_euler(z + 1))
    for value in (0.3 + 0.4j, 2.5 - 1.0j, -1.7 + 0.2j, 7.25):
        expected = complex(special.gamma(value))
        assert abs(gamma_euler(value) - expected) <= 1e-12 * abs(expected)


@pytest.mark.parametrize("pole", [0, -1, -2, -7])
def test_gamma_poles(pole):
    with pytest.raises(DegenerateParameterError):
        gamma_euler(pole)
    assert reciprocal_gamma(pole) == 0


def test_kummer_at_zero_and_exponential_case():
    assert kummer_m(0.4 + 0.1j, 1.7, 0.0) == 1.0
    for z in (0.5, -1.2, 0.3 + 0.8j):
        assert abs(kummer_m(1.3, 1.3, z) - np.exp(z)) <= 1e-12 * abs(np.exp(z))


def test_kummer_vectorised_over_z():
    z = np.linspace(-1.0, 1.0, 5)
    values = kummer_m(0.5, 1.5, z)
    assert values.shape == (5,)
    np.testing.assert_allclose(values.real, special.hyp1f1(0.5, 1.5, z), rtol=1e-12)


def test_kummer_contiguous_relation():
    a, b = 0.7 + 0.2j, 1.9 - 0.3j
    for z in (0.4, -0.9 + 0.5j, 1.5j):
        residual = b * kummer_m(a, b, z) - b * kummer_m(a - 1, b, z) - z * kummer_m(a, b + 1, z)
        assert abs(residual) <= 1e-12


def test_kummer_solves_its_ode():
    # z M'' + (b - z) M' - a M = 0
    a, b, h = 0.6 - 0.3j, 2.2 + 0.4j, 1e-3
    for z in (0.5, 0.8 + 0.6j):
        m0 = kummer_m(a, b, z)
        m1 = (kummer_m(a, b, z + h) - kummer_m(a, b, z - h)) / (2 * h)
        m2 = (kummer_m(a, b, z + h) - 2 * m0 + kummer_m(a, b, z - h)) / h**2
        assert abs(z * m2 + (b - z) * m1 - a * m0) <= 1e-5


def test_kummer_rejects_nonpositive_integer_b():
    with pytest.raises(DegenerateParameterError):
        kummer_m(0.5, -2, 0.3)


def test_tricomi_against_scipy():
    assert tricomi_u(0.7, 1.4, 0.9).real == pytest.approx(special.hyperu(0.7, 1.4, 0.9), rel=1e-8)
    assert abs(tricomi_u(0.7, 1.4, 0.9).imag) <= 1e-12


def test_tricomi_near_integer_b_limit():
    # U(1, 1, 1) = e E1(1)
    assert tricomi_u(1.0, 1.0 + 1e-6, 1.0).real == pytest.approx(0.5963473623, rel=1e-4)
    assert math.e * special.exp1(1.0) == pytest.approx(0.5963473623, rel=1e-9)


def test_tricomi_domain():
    with pytest.raises(DegenerateParameterError):
        tricomi_u(1.0, 2.0, 0.5)
    with pytest.raises(ParameterError):
        tricomi_u(0.5, 1.5, 0.0)


def test_series_limits():
    with pytest.raises(SeriesConvergenceError):
        kummer_m(2.0, 1.5, 30.0, SeriesConfig(max_terms=5))
    with pytest.raises(ParameterError):
        SeriesConfig(max_terms=0)
    with pytest.raises(ParameterError):
        CHFArgs(1.0, 1.5, float("inf"))


def test_nudge_integer_b_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="pricing.chf"):
        nudged = nudge_integer_b(2.0)
    assert nudged != 2.0
    assert abs(nudged - 2.0) <= 1e-8
    assert "perturbed" in caplog.text
    assert nudge_integer_b(1.5 + 0.2j) == 1.5 + 0.2j


@pytest.mark.parametrize("rho", [0.3, -0.7])
def test_fong_vasicek_arguments_against_mpmath(rho):
    mpmath = pytest.importorskip("mpmath")
    c = _fv_constants(fong_vasicek_params(rho))
    Phi, Psi, zeta = c["Phi"], c["Psi"], c["zeta"]

    with mpmath.workdps(30):
        m_ref = complex(mpmath.hyp1f1(Phi + 1, Psi + 1, zeta))
        u_ref = complex(mpmath.hyperu(Phi, Psi, zeta))
    assert abs(kummer_m(Phi + 1, Psi + 1, zeta) - m_ref) <= 1e-10 * max(1.0, abs(m_ref))
    assert abs(tricomi_u(Phi, Psi, zeta) - u_ref) <= 1e-8 * max(1.0, abs(u_ref))
