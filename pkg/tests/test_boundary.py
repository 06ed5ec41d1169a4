import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial
from scipy import integrate

from harmext import (
    BoundaryData,
    CurveModel,
    FourierSeries,
    GraphCauchyData,
    GridOnlyData,
    OpenCurveUnsupported,
    Verdict,
    compatibility,
    graph_F,
    graph_H,
    hilbert_matrix,
    hilbert_transform,
    theta,
)
from harmext.boundary import classify_spectrum, data_for_curve, theta_jet

from _support import PERTURBED_CURVES, field_of_poles, graph_log_oracle, hilbert_pv_oracle, planted_data

POLES = ([0.1 + 0.05j, -0.2j], [1.0 + 0.5j, -0.3])


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_theta_is_field_on_curve(coeffs):
    c = CurveModel.closed_fourier(coeffs)
    B = field_of_poles(*POLES)
    data = planted_data(c, B, exact=True)
    t = np.linspace(0.05, 6.2, 37)
    assert np.allclose(theta(c, data, t), B(c.gamma(t)), atol=1e-12)


def test_theta_on_circle_from_explicit_data():
    # B = i/z on the unit circle has tangential part 1 and normal part 0
    c = CurveModel.circle()
    one = FourierSeries([0], [1.0])
    data = BoundaryData.fourier(one, FourierSeries([], []))
    t = np.linspace(0, 2 * math.pi, 11)
    assert np.allclose(theta(c, data, t), 1j / c.gamma(t))


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_theta_jet_agrees_with_theta(coeffs):
    c = CurveModel.closed_fourier(coeffs)
    B = field_of_poles(*POLES)
    data = planted_data(c, B, exact=True)
    jet = theta_jet(c, data, 1.3, 20)
    for dt in (0.02, -0.03):
        assert complex(jet(1.3 + dt)) == pytest.approx(complex(theta(c, data, 1.3 + dt)), abs=1e-11)
    # off the real axis the continuation of Theta is B(gamma(z))
    z = 1.3 + 0.05j
    assert complex(jet(z)) == pytest.approx(complex(B(c.gamma(z))), abs=1e-10)


def test_theta_jet_needs_coefficients():
    c = CurveModel.circle()
    data = BoundaryData.from_grid(np.ones(16), np.zeros(16))
    with pytest.raises(GridOnlyData):
        theta_jet(c, data, 0.0, 4)
    assert theta_jet(c, data, 0.0, 4, allow_interpolant=True).order == 4


def test_boundary_data_validation():
    with pytest.raises(ValueError):
        BoundaryData(f=FourierSeries([0], [1.0]))
    with pytest.raises(ValueError):
        BoundaryData.from_grid(np.ones(7), np.ones(7))
    with pytest.raises(ValueError):
        BoundaryData.from_grid(np.ones(8), np.ones(6))
    with pytest.raises(ValueError):
        BoundaryData.from_grid(np.array([1, 2, np.nan, 4.0]), np.ones(4))
    t = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    with pytest.raises(ValueError):
        BoundaryData(f=FourierSeries([0], [1.0]), h=FourierSeries([], []), grid_f=np.cos(t), grid_h=0 * t)


def test_reversed_curve_sees_same_field():
    B = field_of_poles(*POLES)
    ccw = CurveModel.closed_fourier({1: 1.0, -2: 0.1}, auto_orient=True)
    ref = CurveModel.closed_fourier({-1: 1.0, 2: 0.1})
    # data given against the original counter-clockwise parameter
    s = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    g = np.exp(1j * s) + 0.1 * np.exp(-2j * s)
    T = (1j * np.exp(1j * s) - 0.2j * np.exp(-2j * s))
    T = T / np.abs(T)
    w = B(g) * T
    # a counter-clockwise traversal has the opposite tangent and normal
    data = BoundaryData.fourier(FourierSeries.from_samples(-w.real), FourierSeries.from_samples(w.imag))
    d = data_for_curve(ccw, data)
    t = np.linspace(0.1, 6.0, 9)
    assert np.allclose(theta(ccw, d, t), B(ref.gamma(t)), atol=1e-12)


# -- Hilbert transform ---------------------------------------------------------------


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_hilbert_matches_principal_value_quadrature(coeffs):
    c = CurveModel.closed_fourier(coeffs)
    h = FourierSeries.from_cos_sin(0.3, [1.0, 0.0, 0.2], [0.5, -0.4])
    M = 128
    t = c.grid(M)
    Hh = hilbert_transform(c, h(t).real)
    for i in (0, 17, 50, 93):
        oracle = hilbert_pv_oracle(c, lambda s: float(h(s).real), float(t[i]))
        assert Hh[i] == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_hilbert_on_circle_maps_cos_to_sin(k):
    c = CurveModel.circle(2.0)
    t = c.grid(64)
    assert np.allclose(hilbert_transform(c, np.cos(k * t)), np.sin(k * t), atol=1e-13)
    assert np.allclose(hilbert_transform(c, np.sin(k * t)), -np.cos(k * t), atol=1e-13)
    assert np.allclose(hilbert_transform(c, np.ones_like(t)), 0.0, atol=1e-13)


@settings(max_examples=15)
@given(
    st.sampled_from(PERTURBED_CURVES),
    st.lists(st.floats(-1, 1), min_size=16, max_size=16),
    st.lists(st.floats(-1, 1), min_size=16, max_size=16),
    st.floats(-3, 3),
)
def test_hilbert_is_linear(coeffs, u, v, a):
    c = CurveModel.closed_fourier(coeffs)
    u, v = np.array(u), np.array(v)
    lhs = hilbert_transform(c, u + a * v)
    rhs = hilbert_transform(c, u) + a * hilbert_transform(c, v)
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_hilbert_requires_closed_curve_and_even_grid():
    line = CurveModel.open_polynomial([0, 1], [0], (-1, 1))
    with pytest.raises(OpenCurveUnsupported):
        hilbert_transform(line, np.ones(8))
    with pytest.raises(ValueError):
        hilbert_matrix(CurveModel.circle(), 7)


# -- compatibility -------------------------------------------------------------------


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_exterior_field_is_compatible(coeffs):
    c = CurveModel.closed_fourier(coeffs)
    data = planted_data(c, field_of_poles(*POLES), M=256)
    rep = compatibility(c, data, M=256)
    assert rep.verdict is Verdict.ANALYTIC_LIKELY
    assert rep.rho < 1


def test_kinked_data_is_not_analytic():
    c = CurveModel.closed_fourier(PERTURBED_CURVES[0])
    t = c.grid(256)
    data = BoundaryData.from_grid(np.zeros_like(t), np.abs(np.sin(t)) ** 3)
    rep = compatibility(c, data, M=256)
    assert rep.verdict is Verdict.NOT_ANALYTIC
    assert rep.r2_algebraic > rep.r2_exponential
    assert set(rep.summary()) >= {"verdict", "rho", "strip_width", "fit_residual"}


def test_spectrum_classifier_on_synthetic_decays():
    k = np.arange(129, dtype=float)
    v, rho, *_ = classify_spectrum(0.7**k)
    assert v is Verdict.ANALYTIC_LIKELY
    # the envelope window is truncated at k = 1, which tilts the fit slightly
    assert rho == pytest.approx(0.7, rel=2e-3)
    v, *_ = classify_spectrum(np.concatenate([[1.0], k[1:] ** -3.0]))
    assert v is Verdict.NOT_ANALYTIC
    v, *_ = classify_spectrum(np.concatenate([[1.0], np.zeros(128)]))
    assert v is Verdict.ANALYTIC_LIKELY


def test_compatibility_rejects_open_curve():
    line = CurveModel.open_polynomial([0, 1], [0], (-1, 1))
    with pytest.raises(OpenCurveUnsupported):
        compatibility(line, BoundaryData.from_grid(np.ones(8), np.ones(8)))


# -- graph-mode potentials -----------------------------------------------------------


def test_divided_difference():
    g = GraphCauchyData([0.1, -0.3, 0.5, 0.2], h=1.0)
    x = 0.37
    phi = g.divided_difference(x)
    for t in (-0.8, 0.1, 0.9):
        assert phi(t) == pytest.approx((g.psi(x) - g.psi(t)) / (x - t))
    assert phi(x) == pytest.approx(g.psi.deriv()(x))


@pytest.mark.parametrize("x", [-0.6, 0.0, 0.45])
def test_graph_H_matches_trapezoid_oracle(x):
    psi = Polynomial([0.0, 0.2, 0.3])
    h = np.cos
    g = GraphCauchyData(psi, h)
    assert graph_H(g, x) == pytest.approx(graph_log_oracle(psi, h, x), abs=1e-8)


def test_graph_H_adds_potential_term():
    psi = Polynomial([0.0, 0.0, 0.4])
    base = GraphCauchyData(psi, 1.0)
    shifted = GraphCauchyData.from_tangential(psi, 1.0, 1.0)
    x = 0.3
    expected = integrate.quad(lambda s: math.sqrt(1 + (0.8 * s) ** 2), 0, x)[0]
    assert graph_H(shifted, x) - graph_H(base, x) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("x", [-0.5, 0.2, 0.8])
def test_graph_F_matches_adaptive_quadrature(x):
    psi = Polynomial([0.0, -0.1, 0.5, 0.2])
    h = lambda t: 1 + 0.5 * np.sin(2 * t)
    g = GraphCauchyData(psi, h)
    dpsi = psi.deriv()

    def kernel(t):
        dx, dy = x - t, psi(x) - psi(t)
        return h(t) * math.sqrt(1 + dpsi(t) ** 2) * (dy - dpsi(x) * dx) / (dx * dx + dy * dy)

    oracle = integrate.quad(kernel, -1, 1, points=[x], epsabs=1e-13, epsrel=1e-13, limit=200)[0] / math.pi
    assert graph_F(g, x) == pytest.approx(oracle, abs=1e-10)


def test_graph_F_vanishes_on_flat_boundary():
    assert graph_F(GraphCauchyData([0.0], 1.0), 0.3) == 0.0
    with pytest.raises(ValueError):
        graph_F(GraphCauchyData([0.0], 1.0), 1.0)
