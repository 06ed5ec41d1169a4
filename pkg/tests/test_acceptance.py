"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line; the lines are
collected and repeated in the terminal summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from _support import (
    PERTURBED_CURVES,
    field_of_poles,
    graph_log_oracle,
    hilbert_pv_oracle,
    interior_poles,
    planted_data,
    random_fourier_curve,
)
from harmext import (
    BoundaryData,
    CurveModel,
    FourierSeries,
    GraphCauchyData,
    LocalJet,
    PatchedExtension,
    PolySeries,
    RationalFunction,
    Verdict,
    brute_r0_oracle,
    compatibility,
    curve_jet,
    dstar,
    graph_H,
    hilbert_transform,
    lambda_coeff_det,
    lambda_jet,
    local_series,
    r0,
)
from harmext.distance import local_jets
from harmext.series import sup_root

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def unit_data():
    """Tangential component 1, normal component 0."""
    return BoundaryData.fourier(FourierSeries.from_dict({0: 1.0}), FourierSeries([], []))


def parabola():
    return CurveModel.open_polynomial([0.0, 1.0], [0.0, 0.0, 1.0], (-3.0, 3.0), exterior="left")


def flat_line():
    return CurveModel.open_polynomial([0.0, 1.0], [0.0], (-10.0, 10.0))


def strip_data(a: float):
    """``f = 0``, ``h = a^2 / (a^2 + t^2)``: analytic in ``|Im t| < a`` and no further."""
    h = RationalFunction(PolySeries([a * a]), PolySeries([a * a, 0.0, 1.0]))
    return BoundaryData.rational(PolySeries([0.0]), h)


def test_circle_exactness():
    worst, slowest = 0.0, 0.0
    for R in (0.5, 1.0, 2.0):
        start = time.perf_counter()
        prof = dstar(CurveModel.circle(R), unit_data())
        slowest = max(slowest, time.perf_counter() - start)
        worst = max(worst, abs(prof.d_star - R / 2))
    record(1, worst <= 1e-9 and slowest < 1.0, f"max |d* - R/2| = {worst:.2e}, slowest run {slowest:.2f} s")


def test_parabola():
    start = time.perf_counter()
    prof = dstar(parabola(), unit_data())
    elapsed = time.perf_counter() - start
    ed, el = abs(prof.d_star - 0.25), abs(prof.l_star - 0.5)
    record(2, ed <= 1e-6 and el <= 1e-6 and elapsed < 2.0,
           f"|d* - 1/4| = {ed:.2e}, |l* - 1/2| = {el:.2e}, {elapsed:.2f} s")


def test_flat_line_strip():
    details, ok = [], True
    for a in (0.5, 1.0):
        start = time.perf_counter()
        prof = dstar(flat_line(), strip_data(a), r2_method="fit")
        elapsed = time.perf_counter() - start
        rel = abs(prof.d_star - a / 2) / (a / 2)
        fitted = prof.summary()["R2_methods"] == ["CauchyHadamardFit"]
        ok &= rel <= 0.02 and elapsed < 2.0 and fitted
        details.append(f"a={a}: rel err {rel:.2e} in {elapsed:.2f} s")
    record(3, ok, "; ".join(details))


def test_r0_against_brute_oracle():
    start = time.perf_counter()
    cases = []
    circle = CurveModel.circle(1.0)
    for t0 in (0.0, 1.3):
        jets = local_jets(circle, unit_data(), t0, 32)
        cases.append((jets.b, jets.R1.value, jets.R2.value))
    par = parabola()
    for t0 in (0.0, 0.7, -2.0):
        jets = local_jets(par, unit_data(), t0, 32)
        cases.append((jets.b, jets.R1.value, jets.R2.value))
    rng = np.random.default_rng(20)
    for i in range(100):
        q = float(np.exp(rng.uniform(math.log(0.05), math.log(20))))
        K = 24
        coeffs = np.concatenate([[1j], q ** np.arange(1, K + 1)]).astype(complex)
        b = LocalJet(0.0, coeffs)
        R2 = math.inf if i % 2 == 0 else float(np.exp(rng.uniform(math.log(0.02), math.log(50))))
        cases.append((b, math.inf, R2))
    worst = 0.0
    for b, R1, R2 in cases:
        exact = r0(sup_root(b).value, min(R1, R2))
        brute = 2 * brute_r0_oracle(b, R1, R2)
        worst = max(worst, abs(exact - brute) / max(1.0, abs(exact)))
    elapsed = time.perf_counter() - start
    record(4, worst <= 1e-4 and elapsed < 5.0,
           f"{len(cases)} cases, max |r0 - 2 oracle| (rel) = {worst:.2e}, {elapsed:.2f} s")


def test_recurrence_vs_determinant():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        deg = int(rng.integers(1, 9))
        ks = np.arange(-deg, deg + 1)
        cs = (rng.normal(size=ks.size) + 1j * rng.normal(size=ks.size)) / (1 + np.abs(ks)) ** 2
        cs[ks == -1] += 1.5
        gamma = FourierSeries(ks, cs)
        a = gamma.derivative().taylor(float(rng.uniform(0, 2 * math.pi)), 10)
        if abs(a[0]) < 1e-3:
            continue
        b = lambda_jet(a)
        for n in range(1, 11):
            d = lambda_coeff_det(a, n)
            worst = max(worst, abs(d - b[n]) / max(abs(b[n]), 1e-300))
    elapsed = time.perf_counter() - start
    record(5, worst <= 1e-10 and elapsed < 10.0, f"max relative difference {worst:.2e}, {elapsed:.2f} s")


def test_hilbert_transform():
    circle = CurveModel.circle(1.0)
    M = 256
    t = circle.grid(M)
    # fix the sign convention once against the principal-value quadrature
    sign = math.copysign(1.0, hilbert_pv_oracle(circle, np.cos, 0.4) / math.sin(0.4))
    err_k = max(np.abs(hilbert_transform(circle, np.cos(k * t)) - sign * np.sin(k * t)).max() for k in range(1, 11))
    err_one = float(np.abs(hilbert_transform(circle, np.ones(M))).max())

    curve = CurveModel.closed_fourier(PERTURBED_CURVES[1])

    def h(s):
        return np.exp(np.sin(s)) * np.cos(2 * s)

    sizes = (16, 32, 64, 128, 256)
    vals = [hilbert_transform(curve, h(curve.grid(m)))[:: m // 16] for m in sizes]
    diffs = [float(np.abs(vals[i] - vals[-1]).max()) for i in range(len(sizes) - 1)]
    factors = [diffs[i] / diffs[i + 1] for i in range(len(diffs) - 1) if diffs[i + 1] > 1e-12]
    conv_ok = bool(factors) and min(factors) >= 10
    ok = err_k <= 1e-8 and err_one <= 1e-12 and conv_ok
    record(6, ok, f"cos k -> {'+' if sign > 0 else '-'}sin k err {err_k:.1e}, constant -> {err_one:.1e}, "
                  f"convergence factors {[round(f, 1) for f in factors]}")


def test_compatibility_dichotomy():
    rng = np.random.default_rng(11)
    curves = [CurveModel.closed_fourier(c) for c in PERTURBED_CURVES]
    wrong = []
    for i in range(20):
        curve = curves[i % len(curves)]
        n = int(rng.integers(1, 4))
        B = field_of_poles(interior_poles(rng, curve, n), rng.normal(size=n) + 1j * rng.normal(size=n))
        rep = compatibility(curve, planted_data(curve, B))
        if rep.verdict is not Verdict.ANALYTIC_LIKELY or not rep.strip_width > 0:
            wrong.append(("planted", i, rep.verdict.value))
    for i in range(5):
        curve = curves[i % len(curves)]
        s = curve.grid(256)
        tau = rng.uniform(0, 2 * math.pi)
        kink = np.abs(np.sin(s - tau))
        f = kink * np.exp(np.cos(s)) if i % 2 == 0 else kink * (1 + 0.3 * np.sin(3 * s))
        h = np.zeros_like(f) if i < 3 else 0.5 * np.cos(s)
        rep = compatibility(curve, BoundaryData.from_grid(f, h))
        if rep.verdict is not Verdict.NOT_ANALYTIC:
            wrong.append(("kink", i, rep.verdict.value))
    record(7, not wrong, f"20 planted, 5 kinked, misclassified: {wrong}")


def test_extension_fidelity():
    details, ok = [], True
    # circle, f = 1, h = 0: the exterior field is iR/z
    for R in (1.0, 2.0):
        circle = CurveModel.circle(R)
        d = dstar(circle, unit_data()).d_star
        ext = PatchedExtension(circle, unit_data(), d_star=d)
        rho = R + d / 2
        worst = 0.0
        for z in rho * np.exp(2j * np.pi * np.arange(24) / 24):
            s = ext.evaluate(z)
            err = abs(s.value - 1j * R / z)
            worst = max(worst, err / max(1e-8, s.err_bound))
            ok &= s.certified
        ok &= worst <= 1.0
        details.append(f"iR/z R={R}: err/tol {worst:.1e}")
    # constant field
    curve = CurveModel.closed_fourier(PERTURBED_CURVES[0])
    data = planted_data(curve, lambda z: np.ones_like(z), exact=True)
    ext = PatchedExtension(curve, data, d_star=dstar(curve, data).d_star)
    worst = 0.0
    for t in np.linspace(0, 2 * math.pi, 12, endpoint=False):
        z = complex(curve.gamma(t) + 0.05 * curve.normal(t))
        worst = max(worst, abs(ext.evaluate(z).value - 1.0))
    ok &= worst <= 1e-10
    details.append(f"constant field err {worst:.1e}")
    # plant and recover 1/(z - 0.3) on the unit circle
    circle = CurveModel.circle(1.0)
    B = field_of_poles([0.3], [1.0])
    data = planted_data(circle, B, exact=True)
    ext = PatchedExtension(circle, data, d_star=dstar(circle, data).d_star)
    worst = 0.0
    for z in 1.2 * np.exp(2j * np.pi * np.arange(16) / 16):
        s = ext.evaluate(z)
        ok &= s.certified and abs(s.value - B(z)) <= s.err_bound
        worst = max(worst, abs(s.value - B(z)) / s.err_bound)
    details.append(f"1/(z-0.3) err/certificate {worst:.1e}")
    record(8, ok, "; ".join(details))


def dominance_configurations():
    rng = np.random.default_rng(3)
    yield "circle", CurveModel.circle(1.0), unit_data(), (0.0, 2.0)
    yield "circle R=2", CurveModel.circle(2.0), unit_data(), (0.5,)
    yield "parabola", parabola(), unit_data(), (0.0, 0.8, -2.5)
    yield "flat line", flat_line(), strip_data(0.5), (0.0, 3.0)
    for i, c in enumerate(PERTURBED_CURVES):
        curve = CurveModel.closed_fourier(c)
        B = field_of_poles(interior_poles(rng, curve, 2), rng.normal(size=2) + 1j * rng.normal(size=2))
        yield f"perturbed {i}", curve, planted_data(curve, B, exact=True), (0.0, 1.1, 4.0)
    for i in range(5):
        curve = random_fourier_curve(rng)
        yield f"random {i}", curve, unit_data(), tuple(rng.uniform(0, 2 * math.pi, 2))


def test_majorant_dominance():
    violations, checked = [], 0
    for name, curve, data, nodes in dominance_configurations():
        for t0 in nodes:
            sol = local_series(curve, data, float(t0), 12)
            bad = sol.dominance_violation(12)
            checked += 1
            if bad is not None:
                violations.append((name, t0, bad))
    record(9, not violations, f"{checked} expansions checked to total degree 12, violations: {violations}")


def test_inequality_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(10)
    bad = []
    for i in range(200):
        curve = random_fourier_curve(rng)
        f = FourierSeries.from_cos_sin(rng.normal(), rng.normal(size=2), rng.normal(size=2))
        h = FourierSeries.from_cos_sin(0.0, rng.normal(size=2), rng.normal(size=2))
        prof = dstar(curve, BoundaryData.fourier(f, h, entire=True), check=False)
        if prof.d_star > prof.curvature_bound * (1 + 1e-12):
            bad.append((i, "curvature"))
        if prof.fourier_lower_bound > prof.d_star * (1 + 1e-12):
            bad.append((i, "fourier"))
    elapsed = time.perf_counter() - start
    record(10, not bad and elapsed < 60.0, f"200 curves, violations {bad}, {elapsed:.1f} s")


def test_graph_potential():
    flat = GraphCauchyData([0.0], 1.0, 0.0)
    e_flat = abs(graph_H(flat, 0.0) - 2 / math.pi)
    worst = 0.0
    psi = Polynomial([0.0, 0.3, 1.0, -0.4])
    h = Polynomial([1.0, 0.5, -0.25])
    g = Polynomial([0.2, -0.1])
    curved = GraphCauchyData(psi, h, g)
    for x in (-0.6, 0.0, 0.35, 0.8):
        oracle = float(g(x)) + graph_log_oracle(psi, h, x)
        worst = max(worst, abs(graph_H(curved, x) - oracle))
    record(11, e_flat <= 1e-9 and worst <= 1e-7, f"flat |H(0) - 2/pi| = {e_flat:.1e}, curved vs oracle {worst:.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
