import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmext import (
    BoundaryData,
    CurveModel,
    FourierSeries,
    PatchedExtension,
    dstar,
    eval_field,
    extend_on_grid,
    local_series,
)
from harmext.boundary import theta
from harmext.extension import invert_flattening, nearest_parameter, series_table

from _support import PERTURBED_CURVES, field_of_poles, planted_data

POLES = ([0.1 + 0.05j, -0.2j], [1.0 + 0.5j, -0.3])


def planted(coeffs):
    c = CurveModel.closed_fourier(coeffs)
    B = field_of_poles(*POLES)
    return c, B, planted_data(c, B, exact=True)


def outward(curve, t, dist):
    return complex(curve.gamma(t) + dist * curve.normal(t))


def test_series_table_solves_recurrence():
    rng = np.random.default_rng(0)
    b = rng.normal(size=12) + 1j * rng.normal(size=12)
    c = rng.normal(size=12) + 1j * rng.normal(size=12)
    phi = series_table(b, c, 5, 6)
    assert np.all(phi[:, 0] == 0)
    # d phi/dy = b * (d phi/dx + c) coefficientwise, checked on the rectangle where it closes
    for k in range(5):
        for l in range(5):
            lhs = (l + 1) * phi[k, l + 1]
            rhs = sum(b[j] * (k - j + 1) * phi[k - j + 1, l] for j in range(k + 1) if k - j + 1 <= 5)
            if l == 0:
                rhs += c[k]
            # the truncated rectangle drops terms from orders above Kx; only check closed entries
            if k + 1 <= 5:
                assert lhs == pytest.approx(rhs, abs=1e-12)
    with pytest.raises(ValueError):
        series_table(b[:5], c, 5, 6)


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_field_is_holomorphic(coeffs):
    c, _, data = planted(coeffs)
    sol = local_series(c, data, 0.9)
    P = outward(c, 0.9, 0.03)
    h = 1e-5
    fx = (eval_field(sol, P + h).value - eval_field(sol, P - h).value) / (2 * h)
    fy = (eval_field(sol, P + 1j * h).value - eval_field(sol, P - 1j * h).value) / (2 * h)
    # Cauchy-Riemann: dF/dx + i dF/dy = 0
    assert abs(fx + 1j * fy) < 1e-6 * max(1.0, abs(fx))


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_boundary_trace_is_theta(coeffs):
    c, _, data = planted(coeffs)
    sol = local_series(c, data, 2.0)
    for t in (1.98, 2.0, 2.03):
        s = eval_field(sol, complex(c.gamma(t)))
        assert s.yt == pytest.approx(0.0, abs=1e-12)
        assert s.value == pytest.approx(complex(theta(c, data, t)), abs=1e-12)


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_planted_field_is_recovered_within_certificate(coeffs):
    c, B, data = planted(coeffs)
    ds = dstar(c, data, grid_size=64).d_star
    ext = PatchedExtension(c, data, d_star=ds, lattice=64)
    certified = 0
    for t in np.linspace(0, 2 * math.pi, 7, endpoint=False):
        s = ext.evaluate(outward(c, t, 0.5 * ds))
        assert not s.interior and not s.beyond_bound
        # the bound covers truncation only; the slack covers interpolation and roundoff (~1e-14)
        if s.certified:
            certified += 1
            assert abs(s.value - complex(B(outward(c, t, 0.5 * ds)))) <= s.err_bound + 1e-12
    assert certified > 0


@settings(max_examples=10)
@given(st.sampled_from(PERTURBED_CURVES), st.floats(0, 2 * math.pi), st.floats(0, 0.3))
def test_adjacent_patches_agree(coeffs, t, frac):
    c, _, data = planted(coeffs)
    ds = dstar(c, data, grid_size=32).d_star
    ext = PatchedExtension(c, data, d_star=ds, lattice=64)
    P = outward(c, t, frac * ds)
    i, j = ext.neighbours(nearest_parameter(c, P)[0])
    a, b = ext.evaluate(P, i), ext.evaluate(P, j)
    if a.certified and b.certified:
        assert abs(a.value - b.value) <= a.err_bound + b.err_bound + 1e-11


def test_interior_and_far_points_are_flagged():
    c = CurveModel.circle()
    # B = i/z: tangential part 1, normal part 0 on the unit circle
    data = BoundaryData.fourier(FourierSeries([0], [1.0]), FourierSeries([], []))
    out = extend_on_grid(c, data, [0.2 + 0.1j, 1.25, 3.0], lattice=16)
    inside, near, far = out
    assert inside.interior and math.isnan(inside.value.real) and not inside.certified
    assert inside.distance < 0
    assert near.certified and not near.beyond_bound
    assert near.B == pytest.approx((0.0, -0.8), abs=1e-12)
    assert far.beyond_bound and far.distance == pytest.approx(2.0)
    assert not far.certified and far.heuristic


@pytest.mark.parametrize("coeffs", PERTURBED_CURVES)
def test_flattening_inverse_round_trip(coeffs):
    c = CurveModel.closed_fourier(coeffs)
    sol = local_series(c, BoundaryData.zero(), 1.1, 8)
    for xt, yt in ((1.1, 0.0), (1.15, 0.05), (1.0, 0.12)):
        P = complex(c.gamma(xt)) + yt * sol.normal
        x, y = invert_flattening(sol, P)
        assert (x, y) == pytest.approx((xt, yt), abs=1e-12)


def test_local_solution_respects_its_majorant():
    c, _, data = planted(PERTURBED_CURVES[0])
    sol = local_series(c, data, 0.4, 12)
    assert sol.dominance_violation(12) is None


def test_open_curve_extension():
    # parabola with tangential field 0 and normal field 1
    c = CurveModel.open_polynomial([0, 1], [0, 0, 1], (-3, 3))
    data = BoundaryData.rational([0.0], [1.0])
    sol = local_series(c, data, 0.5)
    s = eval_field(sol, complex(c.gamma(0.5)))
    assert s.value == pytest.approx(complex(theta(c, data, 0.5)), abs=1e-13)
    assert s.certified and s.err_bound < 1e-10
