# tests/test_ivol.py
import math
from collections import defaultdict

import numpy as np
import pytest
from numpy.polynomial import hermite
from scipy import integrate

from pricing.affine import AffineModelSpec, constant
from pricing.blackscholes import call_price
from pricing.errors import DegenerateVarianceError, NodeLimitError, ParameterError
from pricing.ivol import (
    HermiteContext,
    QuadratureConfig,
    TimeIntegralTable,
    coefficient_vectors,
    expand,
    nested_integrals,
    order0_price,
    price_approximation,
    sigma0,
    sigma1,
    sigma2,
    sigma_bar,
)
from pricing.lsv import coefficients, log_forward
from pricing.models import AffineModel, vasicek_sigma
from utils.helpers import cumulative_matrix, gauss_legendre

from conftest import COUPLED_Y

T, TBAR = 0.5, 2.0
STRIKE_OFFSETS = np.linspace(-0.1, 0.1, 9)


def _cir_point(cir):
    x = log_forward(cir, 0.0, [0.08], T, TBAR)
    return x, coefficients(cir, 0.0, x, (), T, TBAR)


def test_cumulative_matrix_is_exact_for_polynomials():
    nodes, weights = gauss_legendre(12, 0.0, 2.0)
    Q = cumulative_matrix(12, 0.0, 2.0)
    np.testing.assert_allclose(Q @ nodes**3, nodes**4 / 4.0, atol=1e-13)
    assert weights.sum() == pytest.approx(2.0, rel=1e-15)


def test_nested_integral_operators_on_constants():
    nodes, weights = gauss_legendre(16, 0.0, 1.0)
    table = TimeIntegralTable(0.0, 1.0, nodes, weights, cumulative_matrix(16, 0.0, 1.0), {})
    ones = np.ones(16)
    assert table.single(ones) == pytest.approx(1.0, abs=1e-14)
    assert table.ordered(ones, ones) == pytest.approx(0.5, abs=1e-13)
    # int_0^1 s1 int_{s1}^1 ds2 = 1/6
    assert table.ordered(nodes, ones) == pytest.approx(1.0 / 6.0, abs=1e-13)
    np.testing.assert_allclose(table.tail(ones), 1.0 - nodes, atol=1e-13)


def test_hermite_context_matches_numpy():
    ctx = HermiteContext(sigma0=0.12, tau=0.75, x=-0.05, k=np.array([-0.2, -0.05, 0.1]))
    phys = ctx.physicists(4)
    for n in range(5):
        coeffs = np.zeros(n + 1)
        coeffs[n] = 1.0
        np.testing.assert_allclose(phys[n], hermite.hermval(ctx.xi, coeffs), rtol=1e-13, atol=1e-13)
    H = ctx.H(4)
    np.testing.assert_allclose(H[2], phys[2] / ctx.scale**2, rtol=1e-14)
    np.testing.assert_allclose(H[3], -phys[3] / ctx.scale**3, rtol=1e-14)


@pytest.mark.parametrize("kwargs", [{"sigma0": 0.0, "tau": 1.0}, {"sigma0": 0.1, "tau": 0.0}])
def test_hermite_context_validation(kwargs):
    with pytest.raises(ParameterError):
        HermiteContext(x=0.0, k=0.0, **kwargs)


def test_quadrature_config_validation():
    with pytest.raises(ParameterError):
        QuadratureConfig(nodes=1)
    with pytest.raises(ParameterError):
        QuadratureConfig(nodes=64, max_nodes=32)


@pytest.mark.parametrize("Tbar", [1.0, 3.0, 10.0])
def test_vasicek_sigma0_is_exact(vasicek, vasicek_params, Tbar):
    x = log_forward(vasicek, 0.0, [0.08], T, Tbar)
    expansion = expand(vasicek, 0.0, x, (), T, Tbar)
    assert expansion.sigma0 == pytest.approx(vasicek_sigma(vasicek_params, 0.0, T, Tbar), abs=1e-10)
    k = x + STRIKE_OFFSETS
    np.testing.assert_array_equal(expansion.sigma1(k), np.zeros_like(k))
    np.testing.assert_array_equal(expansion.sigma2(k), np.zeros_like(k))
    np.testing.assert_allclose(expansion.sigma_bar(2, k), expansion.sigma0, rtol=0, atol=0)


def test_cir_corrections_are_polynomial_in_strike(cir):
    x, _ = _cir_point(cir)
    expansion = expand(cir, 0.0, x, (), T, TBAR)
    k = x + STRIKE_OFFSETS
    s1 = expansion.sigma1(k)
    s2 = expansion.sigma2(k)

    fit1 = np.polyval(np.polyfit(k, s1, 1), k)
    assert np.max(np.abs(fit1 - s1)) <= 1e-10 + 1e-8 * np.max(np.abs(s1))
    fit2 = np.polyval(np.polyfit(k, s2, 2), k)
    assert np.max(np.abs(fit2 - s2)) <= 1e-10 + 1e-8 * np.max(np.abs(s2))
    # CIR volatility falls with the strike
    assert s1[0] > s1[-1]


def test_components_sum_to_corrections(cir):
    x, _ = _cir_point(cir)
    expansion = expand(cir, 0.0, x, (), T, TBAR)
    parts = expansion.components(x + 0.03)
    assert parts["s10"] + parts["s01"] == pytest.approx(expansion.sigma1(x + 0.03), abs=1e-15)
    assert parts["s20"] + parts["s11"] + parts["s02"] == pytest.approx(expansion.sigma2(x + 0.03), abs=1e-15)
    assert parts["s01"] == 0.0


def test_functional_interface_matches_expansion(cir):
    x, coeffs = _cir_point(cir)
    table = nested_integrals(coeffs, 0.0, T)
    expansion = expand(cir, 0.0, x, (), T, TBAR)
    k = x + 0.02
    assert sigma0(coeffs, 0.0, T, table=table) == pytest.approx(expansion.sigma0, rel=1e-14)
    assert sigma1(coeffs, 0.0, x, (), T, k, table=table) == pytest.approx(expansion.sigma1(k), rel=1e-12)
    assert sigma2(coeffs, 0.0, x, (), T, k, table=table) == pytest.approx(expansion.sigma2(k), rel=1e-12)
    assert sigma_bar(coeffs, 2, 0.0, x, (), T, k, table=table) == pytest.approx(
        expansion.sigma_bar(2, k), rel=1e-12
    )


def test_expansion_point_is_checked(cir):
    x, coeffs = _cir_point(cir)
    with pytest.raises(ParameterError):
        sigma1(coeffs, 0.0, x + 0.01, (), T, x)
    with pytest.raises(ParameterError):
        sigma_bar(coeffs, 1, 0.0, x, (0.1,), T, x)


def test_sigma_bar_order_is_validated(cir):
    x, _ = _cir_point(cir)
    with pytest.raises(ParameterError):
        expand(cir, 0.0, x, (), T, TBAR).sigma_bar(3, x)


def test_refinement_records_metadata(cir):
    _, coeffs = _cir_point(cir)
    table = nested_integrals(coeffs, 0.0, T)
    assert table.meta["coarse_nodes"] >= QuadratureConfig().nodes
    assert table.size > table.meta["coarse_nodes"]
    assert table.meta["refinement_shift"] <= 1e-10
    unchecked = nested_integrals(coeffs, 0.0, T, QuadratureConfig(check_refinement=False))
    assert unchecked.size == QuadratureConfig().nodes


def test_node_limit(cir):
    _, coeffs = _cir_point(cir)
    cfg = QuadratureConfig(nodes=4, refinement_nodes=8, max_nodes=8, tolerance=1e-30)
    with pytest.raises(NodeLimitError):
        nested_integrals(coeffs, 0.0, T, cfg)


def test_order_zero_prices(cir):
    x, coeffs = _cir_point(cir)
    expansion = expand(cir, 0.0, x, (), T, TBAR)
    k = x + STRIKE_OFFSETS
    expected = call_price(x, k, T, expansion.sigma0)
    np.testing.assert_allclose(price_approximation(expansion, 0, k), expected, rtol=1e-14)
    np.testing.assert_allclose(order0_price(coeffs, k), expected, rtol=1e-12)


def test_zero_volatility_model_is_degenerate():
    spec = AffineModelSpec(
        d=1,
        q=0.0,
        psi=[1.0],
        b=constant([0.02]),
        beta=(constant([-0.5]),),
        ell=constant([[0.0]]),
        lam=(constant([[0.0]]),),
    )
    model = AffineModel(spec, name="deterministic")
    x = log_forward(model, 0.0, [0.04], T, TBAR)
    with pytest.raises(DegenerateVarianceError):
        expand(model, 0.0, x, (), T, TBAR)


def test_cir_sigma2_matches_closed_form_in_the_skew_integrals(cir):
    x, coeffs = _cir_point(cir)
    opts = {"epsabs": 1e-15, "epsrel": 1e-13, "limit": 200}

    def c0(s):
        return float(coeffs.chi("c", 0, 0, s))

    def c1(s):
        return float(coeffs.chi("c", 1, 0, s))

    def cumulative_c0(s):
        return integrate.quad(c0, 0.0, s, **opts)[0]

    def tail_c1(s):
        return integrate.quad(c1, s, T, **opts)[0]

    A = integrate.quad(lambda s: c1(s) * cumulative_c0(s), 0.0, T, **opts)[0]
    B = integrate.quad(lambda s: c1(s) * cumulative_c0(s) * tail_c1(s), 0.0, T, **opts)[0]
    s0 = math.sqrt(2.0 * integrate.quad(c0, 0.0, T, **opts)[0] / T)

    moneyness = np.linspace(-0.1, 0.1, 21)
    expected = 6.0 * moneyness**2 / (s0**7 * T**4) * (-2.0 * A**2 + s0**2 * T * B) + (
        (s0**2 * T + 12.0) / (2.0 * s0**5 * T**3) * (A**2 - s0**2 * T * B)
    )
    expansion = expand(cir, 0.0, x, (), T, TBAR)
    assert expansion.sigma0 == pytest.approx(s0, rel=1e-12)
    np.testing.assert_allclose(expansion.sigma2(x + moneyness), expected, rtol=0.0, atol=1e-10)


def test_h10_c01_cross_term_enters_once():
    # c00, h10 and c01 constant, everything else zero: only O(h10 Ic, c01) survives
    tau, c00, h10, c01 = 0.25, 0.003, 0.4, -0.02
    nodes, weights = gauss_legendre(32, 0.0, tau)
    samples = defaultdict(lambda: np.zeros(32))
    samples.update({("c", 0, 0): np.full(32, c00), ("h", 1, 0): np.full(32, h10), ("c", 0, 1): np.full(32, c01)})
    table = TimeIntegralTable(0.0, tau, nodes, weights, cumulative_matrix(32, 0.0, tau), samples)
    vectors = coefficient_vectors(table)

    amount = h10 * c00 * c01 * tau**3 / 6.0
    np.testing.assert_allclose(vectors["v11"], [0.0, -amount, 2.0 * amount, 0.0, 0.0], rtol=1e-12, atol=1e-22)
    for key in ("v10", "v01", "v20", "v02"):
        np.testing.assert_array_equal(vectors[key], np.zeros(5))


def test_generic_affine_coefficients_have_no_second_order_terms(coupled_affine):
    y = COUPLED_Y
    x = log_forward(coupled_affine, 0.0, y, T, TBAR)
    coeffs = coefficients(coupled_affine, 0.0, x, y[1:], T, TBAR)
    assert all(i + j < 2 for _, i, j in coeffs.nonzero())
    assert coeffs.chi("h", 1, 0, 0.1) != 0.0
    assert coeffs.chi("c", 0, 1, 0.1) != 0.0
    np.testing.assert_array_equal(coeffs.chi("c", 2, 0, np.linspace(0.0, T, 5)), np.zeros(5))
