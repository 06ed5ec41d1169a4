"""Guaranteed extension distance along the boundary and its global bounds.

For each base point ``t0`` the local analysis combines the jets of the
normal-derivative coefficient ``Lambda`` and of the forcing ``Lambda Theta'``
into ``d(t0) = |gamma'(t0)| / 2 * min(1 / sup|b_n|^{1/n}, R2(t0))``.  The
profile over the boundary gives ``d* = min(inf d, l*)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .analytic import FourierSeries
from .boundary import BoundaryData, classify_spectrum, data_for_curve, theta_factor_jet, theta_prime_jet
from .curve import CurveModel, collar_width, curve_jet, max_curvature_point, min_radius_of_curvature
from .errors import HypothesisNotDeclared, InsufficientOrder, InvariantViolation
from .series import (
    LocalJet,
    _cauchy_product,
    RadiusEstimate,
    RadiusMethod,
    SupRoot,
    fit_radius,
    lambda_jet,
    r0,
    singularity_distances,
    sup_root,
)

DEFAULT_ORDER = 32
DEFAULT_FIT_ORDER = 64
MIN_FIT_ORDERS = 16
RESOLVED_MARGIN = 10.0
OPEN_MARGIN = 0.01


def worker_count(requested: int | None = None) -> int:
    """Worker threads to use: ``requested``, else ``HC_THREADS``, else 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("HC_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def aprox_bound(curve: CurveModel, t0: float) -> float:
    """Certified upper bound on ``sup_n |b_n(t0)|^{1/n}``: ``sum_n |a_n(t0)| / |gamma'(t0)|``.

    For a Fourier curve the series is bounded termwise by
    ``sum_k |c_k| |k| e^{|k|}``; for a polynomial curve it is a finite sum.
    """
    return float(aprox_bounds(curve, np.array([t0], dtype=float))[0])


@dataclass(frozen=True)
class NodeRecord:
    """Local quantities at one base point."""

    t: float
    d: float
    r0: float
    sup_root: float
    sup_bound: float
    upper_estimate: bool
    R1: float
    R2: float
    R2_method: str
    kappa: float
    speed: float


@dataclass(frozen=True, eq=False)
class LocalJets:
    """Everything the series solution at ``t0`` needs."""

    t0: float
    b: LocalJet
    c: LocalJet
    R1: RadiusEstimate
    R2: RadiusEstimate
    sup: SupRoot


def _curve_singular_points(curve: CurveModel):
    z = curve.speed_zeros()
    return list(z), list(z) + list(np.conj(z))


def aprox_bounds(curve: CurveModel, ts: np.ndarray) -> np.ndarray:
    """:func:`aprox_bound` at each parameter in ``ts``."""
    speed = curve.speed(ts)
    g = curve.gamma
    if isinstance(g, FourierSeries):
        return g.mean_abs_weight() / speed
    jet = curve.d1.taylor(ts, max(curve.d1.degree, 0))
    return np.abs(jet.coeffs).sum(axis=0) / speed


def _exact_radii(ts, points, period):
    if not points:
        return [RadiusEstimate(math.inf, RadiusMethod.DECLARED_ENTIRE, "no finite singularities")] * len(ts)
    note = f"{len(points)} singular points located"
    return [RadiusEstimate(float(r), RadiusMethod.EXACT_ROOTS, note)
            for r in singularity_distances(ts, points, period)]


def _band_edge(series, interpolant: bool) -> tuple[float, int]:
    """Amplitude and frequency of the worst unrepresented mode of Fourier data.

    An interpolant misses everything beyond its band, which is no smaller
    than its own edge coefficients; exact coefficients carry only roundoff.
    """
    kc = max(1, max(s.degree for s in series))
    top = max((float(np.abs(s.cs).max()) for s in series if s.cs.size), default=0.0)
    if interpolant:
        edge = max(float(np.abs(s.cs[np.abs(s.ks) >= kc - 2]).max(initial=0.0)) for s in series)
        return max(edge, 1e-15 * top), kc
    return np.finfo(float).eps * sum(float(np.abs(s.cs).sum()) for s in series), kc


def _forcing_noise(curve: CurveModel, b: LocalJet, ts, order: int, amp: float, kc: int) -> np.ndarray:
    """Majorant of the error in the forcing coefficients caused by the data's band edge.

    A mode ``e^{i kc t}`` of size ``amp`` has Taylor coefficients
    ``amp kc^n / n!``; absolute values of the other factors are convolved in.
    """
    n = np.arange(order + 2)
    fh = 2 * amp * np.exp(n * math.log(kc) - gammaln(n + 1))
    factor = np.abs(theta_factor_jet(curve, ts, order + 1).coeffs)
    th = _cauchy_product(factor, fh).real
    dth = th[1:] * n[1:, None]
    return _cauchy_product(np.abs(b.coeffs), dth).real


def _resolved_orders(mag: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Highest order up to which every coefficient stands clear of the noise majorant."""
    # a running maximum absorbs isolated near-zero coefficients
    env = np.maximum(mag, np.maximum(np.roll(mag, 1, axis=0), np.roll(mag, -1, axis=0)))
    env[0], env[-1] = np.maximum(mag[0], mag[1]), np.maximum(mag[-1], mag[-2])
    ok = env[1:] > RESOLVED_MARGIN * noise[1:]
    bad = ~ok
    first_bad = np.where(bad.any(axis=0), bad.argmax(axis=0), ok.shape[0])
    return first_bad


def _strip_half_width(series) -> float:
    """Decay rate of the data spectrum, a lower estimate of the distance to any singularity."""
    kc = max(s.degree for s in series)
    if kc == 0:
        return math.inf
    mag = np.zeros(kc + 1)
    for s in series:
        np.maximum.at(mag, np.abs(s.ks), np.abs(s.cs))
    _, rho, *_ = classify_spectrum(mag)
    return -math.log(rho) if rho < 1 else 0.0


def jets_at(
    curve: CurveModel,
    data: BoundaryData,
    ts,
    K: int = DEFAULT_ORDER,
    fit_order: int = DEFAULT_FIT_ORDER,
    r2_method: str = "auto",
) -> list[LocalJets]:
    """:func:`local_jets` at every parameter in ``ts``, computed as one batch."""
    if r2_method not in ("auto", "fit"):
        raise ValueError(f"unknown radius method {r2_method!r}")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    zeros, curve_pts = _curve_singular_points(curve)
    b = lambda_jet(curve_jet(curve, ts, K))
    R1 = _exact_radii(ts, zeros, curve.period)
    c = b * theta_prime_jet(curve, data, ts, K, allow_interpolant=True)
    data_pts = data.singularities()
    if r2_method == "auto" and data_pts is not None:
        R2 = _exact_radii(ts, curve_pts + data_pts, curve.period)
    else:
        order = max(K, fit_order)
        if order == K:
            b_fit, c_fit = b, c
        else:
            b_fit = lambda_jet(curve_jet(curve, ts, order))
            c_fit = b_fit * theta_prime_jet(curve, data, ts, order, allow_interpolant=True)
        caps = singularity_distances(ts, curve_pts, curve.period)
        f, h = data.analytic_pair(allow_interpolant=True)
        fourier = isinstance(f, FourierSeries)
        resolved = np.full(ts.size, order)
        if fourier:
            noise = _forcing_noise(curve, b_fit, ts, order, *_band_edge((f, h), not data.has_coefficients))
            resolved = _resolved_orders(np.abs(c_fit.coeffs), noise)
        strip = None
        R2 = []
        for j in range(ts.size):
            n_ok = int(resolved[j])
            if n_ok >= MIN_FIT_ORDERS:
                try:
                    value, note = fit_radius(c_fit.coeffs[: n_ok + 1, j])
                except InsufficientOrder:
                    value, note = math.inf, "too few nonzero coefficients to fit; no singularity seen"
                if n_ok < order:
                    note += f"; orders above {n_ok} are below the data's resolution"
            else:
                if strip is None:
                    strip = _strip_half_width((f, h))
                value = strip
                note = f"only {n_ok} orders resolved; strip half-width of the data spectrum (lower estimate)"
            if not data.has_coefficients:
                note += "; data known only on a grid (trigonometric interpolant)"
            if caps[j] < value:
                note += "; capped by the curve's own singularities"
            R2.append(RadiusEstimate(min(value, float(caps[j])), RadiusMethod.CAUCHY_HADAMARD_FIT, note))
    bounds = aprox_bounds(curve, ts)
    out = []
    for j in range(ts.size):
        bj = b.column(j)
        out.append(LocalJets(float(ts[j]), bj, c.column(j), R1[j], R2[j], sup_root(bj, float(bounds[j]))))
    return out


def local_jets(
    curve: CurveModel,
    data: BoundaryData,
    t0: float,
    K: int = DEFAULT_ORDER,
    fit_order: int = DEFAULT_FIT_ORDER,
    r2_method: str = "auto",
) -> LocalJets:
    """Jets ``b`` and ``c`` at ``t0`` with the radii ``R1`` and ``R2``.

    ``r2_method`` is ``"auto"`` (exact singularities when the data is given
    by coefficients, otherwise a fit) or ``"fit"`` (always fit the decay of
    the forcing coefficients, capped by the exact radius of the curve terms).
    """
    return jets_at(curve, data, [t0], K, fit_order, r2_method)[0]


def _record(curve: CurveModel, jets: LocalJets) -> NodeRecord:
    speed = float(curve.speed(jets.t0))
    r = r0(jets.sup.safe, jets.R2)
    return NodeRecord(
        t=jets.t0,
        d=speed / 2 * r,
        r0=r,
        sup_root=jets.sup.value,
        sup_bound=jets.sup.bound,
        upper_estimate=jets.sup.rising,
        R1=jets.R1.value,
        R2=jets.R2.value,
        R2_method=jets.R2.method.value,
        kappa=float(curve.curvature(jets.t0)),
        speed=speed,
    )


def local_records(curve, data, ts, K=DEFAULT_ORDER, fit_order=DEFAULT_FIT_ORDER, r2_method="auto") -> list[NodeRecord]:
    return [_record(curve, j) for j in jets_at(curve, data, ts, K, fit_order, r2_method)]


def local_record(curve, data, t0, K=DEFAULT_ORDER, fit_order=DEFAULT_FIT_ORDER, r2_method="auto") -> NodeRecord:
    return local_records(curve, data, [t0], K, fit_order, r2_method)[0]


def local_distance(curve: CurveModel, data: BoundaryData, t0: float, K: int = DEFAULT_ORDER, **kw) -> float:
    """``d(t0) = |gamma'(t0)| / 2 * min(1 / sup|b_n|^{1/n}, R2(t0))``."""
    return local_record(curve, data_for_curve(curve, data), t0, K, **kw).d


def curvature_upper_bound(curve: CurveModel) -> float:
    """Half the minimum radius of curvature."""
    return 0.5 * min_radius_of_curvature(curve)


def min_speed_squared(curve: CurveModel) -> float:
    t = curve.grid()
    s2 = curve.speed(t) ** 2
    i = int(np.argmin(s2))
    h = t[1] - t[0]
    res = minimize_scalar(lambda u: float(curve.speed(u)) ** 2, bounds=(t[i] - h, t[i] + h),
                          method="bounded", options={"xatol": 1e-12})
    return float(min(s2[i], res.fun))


def fourier_lower_bound(curve: CurveModel, entire: bool | None, l_star: float | None = None) -> float:
    """``min(inf|gamma'|^2 / (2 sum |c_k||k|e^{|k|}), l*)`` for entire data on a Fourier curve."""
    if not isinstance(curve.gamma, FourierSeries):
        raise ValueError("the Fourier lower bound needs a closed Fourier curve")
    if entire is not True:
        raise HypothesisNotDeclared("data is not declared to continue to an entire function")
    if l_star is None:
        l_star = collar_width(curve)
    bound = min_speed_squared(curve) / (2 * curve.gamma.mean_abs_weight())
    return min(bound, l_star)


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    t: np.ndarray
    records: list
    d_star: float
    inf_d: float
    argmin_t: float
    l_star: float
    curvature_bound: float
    fourier_lower_bound: float | None
    grid_resolution: float
    warnings: list = field(default_factory=list)

    CSV_COLUMNS = ("t", "d", "r0", "sup_root", "R2", "kappa", "speed")

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def upper_estimate(self) -> bool:
        return any(r.upper_estimate for r in self.records)

    def summary(self) -> dict:
        return {
            "d_star": self.d_star,
            "inf_d": self.inf_d,
            "argmin_t": self.argmin_t,
            "l_star": self.l_star,
            "curvature_bound": self.curvature_bound,
            "fourier_lower_bound": self.fourier_lower_bound,
            "grid_resolution": self.grid_resolution,
            "nodes": len(self.records),
            "upper_estimate_nodes": int(sum(r.upper_estimate for r in self.records)),
            "R2_methods": sorted({r.R2_method for r in self.records}),
        }

    def rows(self):
        for r in self.records:
            yield [getattr(r, c) for c in self.CSV_COLUMNS]


def _window(curve: CurveModel, n: int) -> np.ndarray:
    if curve.closed:
        return curve.grid(n)
    lo, hi = curve.interval
    m = OPEN_MARGIN * (hi - lo)
    return np.linspace(lo + m, hi - m, n)


def dstar(
    curve: CurveModel,
    data: BoundaryData,
    grid_size: int = 256,
    K: int = DEFAULT_ORDER,
    fit_order: int = DEFAULT_FIT_ORDER,
    r2_method: str = "auto",
    collar_tol: float = 1e-9,
    workers: int | None = None,
    check: bool = True,
) -> DistanceProfile:
    """Profile of ``d`` over the boundary and the aggregate bounds."""
    data = data_for_curve(curve, data)
    t = _window(curve, grid_size)

    def rec(s):
        return local_record(curve, data, float(s), K, fit_order, r2_method)

    n_workers = min(worker_count(workers), t.size)
    if n_workers > 1:
        chunks = np.array_split(t, n_workers)
        with ThreadPoolExecutor(n_workers) as pool:
            parts = pool.map(lambda ts: local_records(curve, data, ts, K, fit_order, r2_method), chunks)
            records = [r for part in parts for r in part]
    else:
        records = local_records(curve, data, t, K, fit_order, r2_method)

    d = np.array([r.d for r in records])
    extra = []
    i = int(np.argmin(d))
    if math.isfinite(d[i]):
        h = t[1] - t[0]
        lo, hi = t[i] - h, t[i] + h
        if not curve.closed:
            lo, hi = max(lo, t[0]), min(hi, t[-1])
        res = minimize_scalar(lambda s: rec(s).d, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        extra.append(rec(res.x))
    # include the curvature maximizer so the curvature inequality is checked where it is tight
    tk, kmax = max_curvature_point(curve)
    if kmax > 0 and (curve.closed or t[0] <= tk <= t[-1]):
        extra.append(rec(tk))
    all_records = records + extra

    inf_rec = min(all_records, key=lambda r: r.d)
    l_star = collar_width(curve, collar_tol)
    d_star = min(inf_rec.d, l_star)
    curv = curvature_upper_bound(curve)
    flb = None
    warnings = []
    if curve.closed and data.entire is True:
        flb = fourier_lower_bound(curve, True, l_star)
    if any(r.upper_estimate for r in all_records):
        warnings.append("sup |b_n|^(1/n) still rising at the truncation order at some nodes; certified bound used there")
    if any(r.R2_method == RadiusMethod.CAUCHY_HADAMARD_FIT.value for r in all_records):
        warnings.append("R2 estimated from coefficient decay at some nodes; not certified")

    profile = DistanceProfile(
        t=np.array([r.t for r in all_records]),
        records=all_records,
        d_star=d_star,
        inf_d=inf_rec.d,
        argmin_t=inf_rec.t,
        l_star=l_star,
        curvature_bound=curv,
        fourier_lower_bound=flb,
        grid_resolution=float(t[1] - t[0]),
        warnings=warnings,
    )
    if check:
        if d_star > curv * (1 + 1e-12) + 1e-15:
            raise InvariantViolation(f"d* = {d_star!r} exceeds half the minimum radius of curvature {curv!r}")
        if flb is not None and flb > d_star + 1e-9:
            raise InvariantViolation(f"Fourier lower bound {flb!r} exceeds d* = {d_star!r}")
    return profile
