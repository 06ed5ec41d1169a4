"""Analytic boundary curves and their differential geometry.

A closed curve is a finite Fourier series ``gamma(t) = sum c_k e^{ikt}`` on
``[0, 2 pi)``; an open curve is a pair of real polynomials on an interval.
Points are complex numbers ``x + iy``.  The outward normal is always
``i gamma'(t) / |gamma'(t)|``, i.e. the tangent rotated a quarter turn to the
left, so closed curves must run clockwise.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing, LineString

from .analytic import FourierSeries, PolySeries
from .errors import DegenerateCurve, OrientationError, SelfIntersectingCurve
from .series import LocalJet

SPEED_TOL = 1e-12


class CurveKind(str, enum.Enum):
    CLOSED_FOURIER = "ClosedFourier"
    OPEN_POLYNOMIAL = "OpenPolynomial"


@dataclass(frozen=True, eq=False)
class CurveModel:
    """An immutable, validated analytic curve.

    Use :meth:`closed_fourier` or :meth:`open_polynomial` to build one.
    """

    kind: CurveKind
    gamma: FourierSeries | PolySeries
    interval: tuple[float, float]
    n_grid: int
    reversed: bool = False
    d1: object = field(init=False, repr=False)
    d2: object = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "d1", self.gamma.derivative(1))
        object.__setattr__(self, "d2", self.gamma.derivative(2))
        self._validate()

    # -- construction ----------------------------------------------------------

    @classmethod
    def closed_fourier(cls, coeffs, n_grid: int = 2048, auto_orient: bool = False):
        """Closed curve from ``{k: c_k}`` (or a :class:`FourierSeries`).

        With ``auto_orient`` a counter-clockwise curve is silently reversed
        (``t -> -t``) instead of being rejected.
        """
        g = coeffs if isinstance(coeffs, FourierSeries) else FourierSeries.from_dict(dict(coeffs))
        flipped = False
        if auto_orient and signed_area_fourier(g) > 0:
            g = FourierSeries(-g.ks, g.cs)
            flipped = True
        return cls(CurveKind.CLOSED_FOURIER, g, (0.0, 2 * math.pi), n_grid, flipped)

    @classmethod
    def open_polynomial(cls, x_coeffs, y_coeffs, interval, exterior: str = "left", n_grid: int = 4096):
        """Open curve ``(x(t), y(t))`` with ascending real coefficients.

        ``exterior`` says on which side of the direction of travel the
        exterior lies.  ``"right"`` is handled by reversing the parameter.
        """
        x = np.zeros(max(len(x_coeffs), len(y_coeffs)), dtype=complex)
        x[: len(x_coeffs)] += np.asarray(x_coeffs, dtype=float)
        x[: len(y_coeffs)] += 1j * np.asarray(y_coeffs, dtype=float)
        g = PolySeries(x)
        lo, hi = float(interval[0]), float(interval[1])
        if not hi > lo:
            raise ValueError("interval must be increasing")
        if exterior == "left":
            return cls(CurveKind.OPEN_POLYNOMIAL, g, (lo, hi), n_grid)
        if exterior == "right":
            return cls(CurveKind.OPEN_POLYNOMIAL, g.compose_linear(-1.0, 0.0), (-hi, -lo), n_grid, True)
        raise ValueError(f"exterior must be 'left' or 'right', not {exterior!r}")

    @classmethod
    def circle(cls, radius: float = 1.0, center: complex = 0.0, **kw):
        """Clockwise circle ``center + radius e^{-it}``."""
        return cls.closed_fourier({0: center, -1: radius}, **kw)

    # -- validation ------------------------------------------------------------

    def _validate(self):
        t = self.grid()
        speed = np.abs(self.d1(t))
        if not np.all(np.isfinite(speed)) or speed.min() < SPEED_TOL * max(1.0, self.scale):
            raise DegenerateCurve(f"curve speed drops to {speed.min():.3g} on the construction grid")
        # a stationary point between grid nodes shows up as a near-real zero of gamma'
        zs = self.d1.zeros()
        zs = zs[np.abs(zs.imag) < 1e-6].real
        for z in zs:
            if self.in_domain(z) and abs(complex(self.d1(z))) < 1e-9 * max(1.0, self.scale):
                raise DegenerateCurve(f"curve speed vanishes at t={z:.6g}")
        if self.closed:
            area = signed_area_fourier(self.gamma)
            if area >= 0:
                raise OrientationError(
                    "closed curve runs counter-clockwise; the normal i*gamma' would point inward "
                    "(pass auto_orient=True to reverse it)"
                )
        pts = self.gamma(t)
        xy = np.column_stack([pts.real, pts.imag])
        geom = LinearRing(xy) if self.closed else LineString(xy)
        if not geom.is_simple:
            raise SelfIntersectingCurve("curve crosses itself on the construction grid")

    # -- basic queries ---------------------------------------------------------

    @property
    def closed(self) -> bool:
        return self.kind is CurveKind.CLOSED_FOURIER

    @property
    def period(self):
        return 2 * math.pi if self.closed else None

    @property
    def scale(self) -> float:
        if self.closed:
            return float(np.abs(self.gamma.cs[self.gamma.ks != 0]).sum()) if self.gamma.ks.size else 0.0
        pts = self.gamma(np.linspace(*self.interval, 64))
        return float(np.ptp(pts.real) + np.ptp(pts.imag))

    def grid(self, n: int | None = None) -> np.ndarray:
        n = self.n_grid if n is None else n
        if self.closed:
            return np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        return np.linspace(*self.interval, n)

    def diameter(self) -> float:
        pts = self.gamma(self.grid())
        hull = np.column_stack([pts.real, pts.imag])
        return float(np.max(np.ptp(hull, axis=0)) * math.sqrt(2))

    def point(self, t):
        return self.gamma(t)

    def deriv(self, t, m: int = 1):
        """``gamma^{(m)}(t)`` as a complex number ``x^{(m)} + i y^{(m)}``."""
        if m == 1:
            return self.d1(t)
        if m == 2:
            return self.d2(t)
        return self.gamma.derivative(m)(t)

    def speed(self, t):
        return np.abs(self.d1(t))

    def tangent(self, t):
        d = self.d1(t)
        return d / np.abs(d)

    def normal(self, t):
        return 1j * self.tangent(t)

    def signed_curvature(self, t):
        """``(x'y'' - y'x'') / |gamma'|^3``; positive where the curve bends toward the exterior."""
        d1 = self.d1(t)
        d2 = self.d2(t)
        return np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3

    def curvature(self, t):
        return np.abs(self.signed_curvature(t))

    def conj_derivative(self):
        """Analytic continuation of ``x'(t) - i y'(t)``."""
        return self._conj_d1

    @functools.cached_property
    def _conj_d1(self):
        return self.d1.conj()

    def speed_zeros(self) -> np.ndarray:
        """Complex zeros of ``gamma'``; those of the conjugate continuation are their conjugates."""
        return self._speed_zeros.copy()

    @functools.cached_property
    def _speed_zeros(self) -> np.ndarray:
        return self.d1.zeros()

    def in_domain(self, t) -> bool:
        if self.closed:
            return True
        lo, hi = self.interval
        return lo <= t <= hi

    def wrap(self, t):
        if self.closed:
            return np.mod(t, 2 * math.pi)
        return t


def signed_area_fourier(g: FourierSeries) -> float:
    """Signed area enclosed by ``sum c_k e^{ikt}`` (positive when counter-clockwise)."""
    return float(math.pi * np.sum(g.ks * np.abs(g.cs) ** 2))


@dataclass(frozen=True)
class FrameAt:
    point: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    speed: float
    curvature: float
    signed_curvature: float


def _vec(z):
    return np.array([z.real, z.imag])


def frame_at(curve: CurveModel, t: float) -> FrameAt:
    d1 = complex(curve.d1(t))
    speed = abs(d1)
    if speed < SPEED_TOL:
        raise DegenerateCurve(f"speed {speed:.3g} at t={t}")
    tan = d1 / speed
    ks = float(curve.signed_curvature(t))
    return FrameAt(
        point=_vec(complex(curve.gamma(t))),
        tangent=_vec(tan),
        normal=_vec(1j * tan),
        speed=speed,
        curvature=abs(ks),
        signed_curvature=ks,
    )


def curve_jet(curve: CurveModel, t0: float, K: int) -> LocalJet:
    """Taylor coefficients of ``gamma'`` about ``t0``."""
    if K < 1:
        raise ValueError("order must be at least 1")
    return curve.d1.taylor(t0, K)


def _refine_min(func, t, vals, curve, count=3):
    """Polish the smallest grid values of ``func`` with a bounded scalar search."""
    order = np.argsort(vals)[:count]
    best_t, best_v = t[order[0]], vals[order[0]]
    h = t[1] - t[0]
    for i in order:
        lo, hi = t[i] - h, t[i] + h
        if not curve.closed:
            lo, hi = max(lo, curve.interval[0]), min(hi, curve.interval[1])
        res = minimize_scalar(func, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        if res.fun < best_v:
            best_t, best_v = float(res.x), float(res.fun)
    return best_t, best_v


def max_curvature_point(curve: CurveModel) -> tuple[float, float]:
    """Parameter and value of the largest unsigned curvature."""
    t = curve.grid()
    k = curve.curvature(t)
    if k.max() < 1e-14:
        return float(t[0]), 0.0
    tt, v = _refine_min(lambda s: -float(curve.curvature(s)), t, -k, curve)
    return tt, -v


def min_radius_of_curvature(curve: CurveModel) -> float:
    """``inf_t 1/kappa(t)``; ``inf`` for a straight line."""
    _, kmax = max_curvature_point(curve)
    return math.inf if kmax < 1e-14 else 1.0 / kmax


# -- collar width ------------------------------------------------------------------


def _ray_meeting(p1, n1, p2, n2):
    """Length at which normal fibers from ``p1`` and ``p2`` first meet (``inf`` if never).

    All arguments are complex arrays; the fibers are ``p + s n`` with ``s >= 0``.
    """
    D = p2 - p1
    # p1 + s n1 = p2 + u n2  ->  s n1 - u n2 = D
    det = np.imag(np.conj(n1) * (-n2))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.imag(np.conj(D) * (-n2)) / det
        u = np.imag(np.conj(n1) * D) / det
    out = np.where((s >= 0) & (u >= 0), np.maximum(s, u), np.inf)
    # antiparallel facing fibers along a common line meet halfway
    absD = np.abs(D)
    par = np.abs(det) < 1e-12
    if np.any(par):
        collinear = np.abs(np.imag(np.conj(n1) * D)) < 1e-9 * np.maximum(absD, 1e-300)
        facing = (np.real(np.conj(n1) * D) > 0) & (np.real(np.conj(n2) * D) < 0)
        out = np.where(par, np.where(collinear & facing, absD / 2, np.inf), out)
    return out


def collar_width(curve: CurveModel, tol: float = 1e-9, n_grid: int | None = None, cap_factor: float = 1e3) -> float:
    """Largest ``l`` for which the outward normal fibers of length ``l`` are disjoint.

    Two mechanisms limit ``l``: focal points of arcs that bend toward the
    exterior (at distance ``1/kappa``) and fibers from distant parts of the
    curve meeting each other.  The first is found by minimizing the radius of
    curvature over concave arcs, the second from pairwise intersections of
    normal rays on the grid, refined continuously.  Returns ``inf`` when no
    collision occurs below ``cap_factor`` times the curve diameter.
    """
    t = curve.grid(n_grid)
    pts = curve.gamma(t)
    xy = np.column_stack([pts.real, pts.imag])
    geom = LinearRing(xy) if curve.closed else LineString(xy)
    if not geom.is_simple:
        raise SelfIntersectingCurve("fibers collide at zero length")

    ks = curve.signed_curvature(t)
    speed = curve.speed(t)
    scale = 1.0 / max(curve.diameter(), 1e-300)
    concave = ks > 1e-12 * scale
    cap = cap_factor * curve.diameter()

    if not np.any(concave):
        if curve.closed:
            return math.inf
        dt = t[1] - t[0]
        turning = abs(np.sum(ks * speed) * dt)
        if turning <= math.pi:
            return math.inf

    best = cap
    if np.any(concave):
        inv = np.where(concave, 1.0 / np.where(concave, ks, 1.0), np.inf)

        def focal(s):
            k = float(curve.signed_curvature(s))
            return 1.0 / k if k > 0 else 1e300

        _, fv = _refine_min(focal, t, inv, curve)
        best = min(best, fv)

    normals = 1j * curve.d1(t) / speed

    def closest_meeting(stride, radius):
        # fibers from points farther apart than 2 l cannot meet within l
        sub = np.arange(0, t.size, stride)
        pairs = cKDTree(xy[sub]).query_pairs(2 * radius * (1 + 1e-9), output_type="ndarray")
        if not pairs.size:
            return math.inf, None
        i, j = sub[pairs[:, 0]], sub[pairs[:, 1]]
        gap = np.abs(i - j)
        if curve.closed:
            gap = np.minimum(gap, t.size - gap)
        keep = gap >= 2
        i, j = i[keep], j[keep]
        if not i.size:
            return math.inf, None
        vals = _ray_meeting(pts[i], normals[i], pts[j], normals[j])
        k = int(np.argmin(vals))
        return float(vals[k]), (i[k], j[k])

    # any grid meeting is a genuine collision, so a coarse pass shrinks the search radius
    coarse, _ = closest_meeting(8, best) if t.size >= 256 else (math.inf, None)
    val, ij = closest_meeting(1, min(best, coarse))
    if ij is not None and val < best:

        def meet(v):
            a, b = v
            if not (curve.in_domain(a) and curve.in_domain(b)):
                return 1e300
            pa, pb = curve.gamma(a), curve.gamma(b)
            na, nb = curve.normal(a), curve.normal(b)
            m = float(_ray_meeting(np.array([pa]), np.array([na]), np.array([pb]), np.array([nb]))[0])
            return m if math.isfinite(m) else 1e300

        res = minimize(meet, [t[ij[0]], t[ij[1]]], method="Nelder-Mead",
                       options={"xatol": tol * 1e-2, "fatol": tol * val * 1e-2, "maxiter": 4000})
        best = min(best, val, float(res.fun))
    return math.inf if best >= cap else float(best)
