"""Boundary data, the boundary function Theta, and boundary integral operators.

Conventions: ``f`` is the tangential and ``h`` the normal component of the
field on the curve.  The complex field ``B1 - i B2`` restricted to the curve
is ``Theta(t) = conj(gamma'(t)) (f - i h) / |gamma'(t)|``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .analytic import FourierSeries, PolySeries, RationalFunction, singularities_of
from .curve import CurveModel, SPEED_TOL, curve_jet
from .errors import DegenerateCurve, GridOnlyData, OpenCurveUnsupported, QuadratureFailure
from .series import LocalJet, lambda_jet


# -- boundary data -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Tangential data ``f`` and normal data ``h`` on a curve.

    Either exact representations (``FourierSeries`` on closed curves,
    ``PolySeries``/``RationalFunction`` on open ones) or equispaced samples on
    ``[0, 2 pi)``, or both.  ``entire`` records whether the data is declared
    to continue to an entire function; ``None`` means undeclared.
    """

    f: object = None
    h: object = None
    grid_f: np.ndarray | None = None
    grid_h: np.ndarray | None = None
    entire: bool | None = None
    _interp: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if (self.f is None) != (self.h is None):
            raise ValueError("give both f and h in coefficient form, or neither")
        if (self.grid_f is None) != (self.grid_h is None):
            raise ValueError("give both f and h samples, or neither")
        if self.f is None and self.grid_f is None:
            raise ValueError("boundary data needs coefficients or samples")
        if self.grid_f is not None:
            gf = np.asarray(self.grid_f, dtype=float).ravel()
            gh = np.asarray(self.grid_h, dtype=float).ravel()
            if gf.shape != gh.shape:
                raise ValueError("f and h grids differ in length")
            if gf.size < 4 or gf.size % 2:
                raise ValueError("grid length must be even and at least 4")
            if not (np.all(np.isfinite(gf)) and np.all(np.isfinite(gh))):
                raise ValueError("samples must be finite")
            object.__setattr__(self, "grid_f", gf)
            object.__setattr__(self, "grid_h", gh)
            if self.f is not None and isinstance(self.f, FourierSeries):
                t = np.linspace(0, 2 * np.pi, gf.size, endpoint=False)
                err = max(np.abs(self.f(t).real - gf).max(), np.abs(self.h(t).real - gh).max())
                if err > 1e-10 * max(1.0, np.abs(gf).max(), np.abs(gh).max()):
                    raise ValueError(f"coefficients and samples disagree by {err:.3g}")

    @classmethod
    def fourier(cls, f: FourierSeries, h: FourierSeries, entire: bool | None = True):
        """Trigonometric-polynomial data on a closed curve (entire by construction)."""
        return cls(f=f, h=h, entire=entire)

    @classmethod
    def rational(cls, f, h, entire: bool | None = None):
        f = f if isinstance(f, RationalFunction) else RationalFunction(f, [1.0])
        h = h if isinstance(h, RationalFunction) else RationalFunction(h, [1.0])
        if entire is None and f.is_polynomial and h.is_polynomial:
            entire = True
        return cls(f=f, h=h, entire=entire)

    @classmethod
    def from_grid(cls, f_samples, h_samples, entire: bool | None = None):
        return cls(grid_f=f_samples, grid_h=h_samples, entire=entire)

    @classmethod
    def zero(cls, closed: bool = True):
        if closed:
            return cls.fourier(FourierSeries([], []), FourierSeries([], []))
        return cls.rational([0.0], [0.0])

    @property
    def has_coefficients(self) -> bool:
        return self.f is not None

    def analytic_pair(self, allow_interpolant: bool = False):
        """``(f, h)`` as exact functions; grid-only data is interpolated if allowed."""
        if self.f is not None:
            return self.f, self.h
        if not allow_interpolant:
            raise GridOnlyData("boundary data is only available as samples")
        if "pair" not in self._interp:
            self._interp["pair"] = (
                FourierSeries.from_samples(self.grid_f),
                FourierSeries.from_samples(self.grid_h),
            )
        return self._interp["pair"]

    def singularities(self):
        """Finite singular points of the data, ``None`` when unknown."""
        if self.f is None:
            return None
        return singularities_of(self.f) + singularities_of(self.h)

    def samples(self, M: int):
        """``(t, f, h)`` on ``M`` equispaced nodes of ``[0, 2 pi)``."""
        t = np.linspace(0, 2 * np.pi, M, endpoint=False)
        if self.f is not None:
            return t, np.real(self.f(t)), np.real(self.h(t))
        if self.grid_f.size == M:
            return t, self.grid_f, self.grid_h
        f, h = self.analytic_pair(allow_interpolant=True)
        return t, np.real(f(t)), np.real(h(t))

    def transformed(self, scale: float, shift: float):
        """Data under the reparameterization ``t -> scale * t + shift`` (open curves)."""
        if self.f is None or isinstance(self.f, FourierSeries):
            raise ValueError("only open-curve coefficient data can be reparameterized")
        return BoundaryData(
            f=self.f.compose_linear(scale, shift),
            h=self.h.compose_linear(scale, shift),
            entire=self.entire,
        )


def data_for_curve(curve: CurveModel, data: BoundaryData) -> BoundaryData:
    """Data expressed in the curve's own parameter (accounts for a reversed open curve)."""
    if curve.reversed and not curve.closed:
        return data.transformed(-1.0, 0.0)
    if curve.reversed and curve.closed and data.f is not None:
        f, h = data.f, data.h
        return BoundaryData(f=FourierSeries(-f.ks, f.cs), h=FourierSeries(-h.ks, h.cs), entire=data.entire)
    return data


# -- Theta and its jets -----------------------------------------------------------------


def theta(curve: CurveModel, data: BoundaryData, t, allow_interpolant: bool = True):
    """``conj(gamma') (f - i h) / |gamma'|`` at parameter(s) ``t``."""
    f, h = data.analytic_pair(allow_interpolant)
    d1 = curve.d1(t)
    speed = np.abs(d1)
    if np.any(speed < SPEED_TOL):
        raise DegenerateCurve("curve speed vanishes")
    return np.conj(d1) * (np.real(f(t)) - 1j * np.real(h(t))) / speed


def theta_factor_jet(curve: CurveModel, t0, K: int) -> LocalJet:
    """Jet of ``conj(gamma') / |gamma'|`` continued analytically, so that ``Theta = factor (f - i h)``."""
    a = curve.d1.taylor(t0, K)
    ac = curve.conj_derivative().taylor(t0, K)
    return ac * (a * ac).sqrt().reciprocal()


def theta_jet(curve: CurveModel, data: BoundaryData, t0: float, K: int, allow_interpolant: bool = False) -> LocalJet:
    """Taylor coefficients of the analytic continuation of Theta about ``t0``."""
    f, h = data.analytic_pair(allow_interpolant)
    return theta_factor_jet(curve, t0, K) * (f.taylor(t0, K) - 1j * h.taylor(t0, K))


def theta_prime_jet(curve: CurveModel, data: BoundaryData, t0: float, K: int, allow_interpolant: bool = False) -> LocalJet:
    """Jet of ``Theta'`` to order ``K``."""
    return theta_jet(curve, data, t0, K + 1, allow_interpolant).derivative()


def forcing_jet(curve: CurveModel, data: BoundaryData, t0: float, K: int, allow_interpolant: bool = False) -> LocalJet:
    """Coefficients ``c_n`` of ``Lambda Theta'``."""
    b = lambda_jet(curve_jet(curve, t0, K))
    return b * theta_prime_jet(curve, data, t0, K, allow_interpolant)


# -- generalized Hilbert transform ----------------------------------------------------


def _require_closed(curve):
    if not curve.closed:
        raise OpenCurveUnsupported("the boundary Hilbert transform needs a closed curve")


def hilbert_remainder(curve: CurveModel, M: int) -> np.ndarray:
    """Smooth part ``R(t_i, t_j)`` of the kernel after removing ``cot((t - s)/2)/2``."""
    t = curve.grid(M)
    g = curve.gamma(t)
    d1 = curve.d1(t)
    d2 = curve.d2(t)
    T = d1 / np.abs(d1)
    diff = g[:, None] - g[None, :]
    dt = t[:, None] - t[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.abs(d1)[None, :] * np.real(T[:, None] / diff) - 0.5 / np.tan(dt / 2)
    np.fill_diagonal(R, -0.5 * np.real(d2 / d1))
    return R


def hilbert_matrix(curve: CurveModel, M: int) -> np.ndarray:
    """Matrix of the discrete transform on ``M`` equispaced nodes."""
    _require_closed(curve)
    if M % 2 or M < 4:
        raise ValueError("grid size must be even and at least 4")
    idx = np.arange(M)
    offset = idx[:, None] - idx[None, :]
    dt = offset * (2 * np.pi / M)
    odd = (offset % 2) == 1
    with np.errstate(divide="ignore"):
        C = np.where(odd, 1.0 / np.tan(np.where(odd, dt, 1.0) / 2), 0.0)
    return (2.0 / M) * (C + hilbert_remainder(curve, M))


def hilbert_transform(curve: CurveModel, h_grid) -> np.ndarray:
    """Principal-value transform ``(1/pi) p.v. int h(s) Re[T(t) / (gamma(t) - gamma(s))] |gamma'(s)| ds``."""
    _require_closed(curve)
    h = np.asarray(h_grid, dtype=float)
    return hilbert_matrix(curve, h.size) @ h


# -- compatibility --------------------------------------------------------------------


class Verdict(str, enum.Enum):
    ANALYTIC_LIKELY = "AnalyticLikely"
    NOT_ANALYTIC = "NotAnalytic"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class CompatibilityReport:
    residual: np.ndarray
    spectrum: np.ndarray
    rho: float
    fit_residual: float
    verdict: Verdict
    strip_width: float
    r2_exponential: float = float("nan")
    r2_algebraic: float = float("nan")
    fit_range: tuple[int, int] = (0, 0)

    def summary(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "rho": self.rho,
            "strip_width": self.strip_width,
            "fit_residual": self.fit_residual,
            "r2_exponential": self.r2_exponential,
            "r2_algebraic": self.r2_algebraic,
            "fit_range": list(self.fit_range),
            "max_residual": float(np.abs(self.residual).max()),
        }


def _r2(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - fit) ** 2) / ss if ss > 0 else 1.0
    return coef, r2


def classify_spectrum(mag: np.ndarray, r2_min=0.98, slope_max=-0.05, floor_factor=100.0):
    """Decide between geometric and algebraic decay of Fourier magnitudes ``mag[k]``, ``k >= 0``.

    Returns ``(verdict, rho, fit_residual, r2_exp, r2_alg, (k_lo, k_hi))``.
    """
    eps = np.finfo(float).eps
    top = mag[1:].max() if mag.size > 1 else 0.0
    if top <= floor_factor * eps * max(1.0, mag[0]):
        return Verdict.ANALYTIC_LIKELY, np.finfo(float).tiny, 0.0, 1.0, float("nan"), (0, 0)
    # an upper envelope removes zeros from parity or cancellation patterns
    w = 3
    env = np.array([mag[max(1, k - w + 1) : k + w].max() for k in range(1, mag.size)])
    k = np.arange(1, mag.size)
    floor = floor_factor * eps * top
    # estimate the roundoff plateau from the highest quarter of the spectrum
    tail = env[3 * env.size // 4 :]
    plateau = np.median(tail) if tail.size else 0.0
    cut = max(floor, 10 * plateau) if plateau < 1e-6 * top else floor
    above = env > cut
    if not np.any(above):
        return Verdict.ANALYTIC_LIKELY, np.finfo(float).tiny, 0.0, 1.0, float("nan"), (0, 0)
    i_lo = int(np.argmax(env))
    # the fit range ends where the envelope first reaches the noise floor;
    # anything rising again beyond it is aliasing or roundoff
    below = np.nonzero(~above[i_lo:])[0]
    i_hi = i_lo + (int(below[0]) - 1 if below.size else env.size - 1 - i_lo)
    k_lo, k_hi = int(k[i_lo]), int(k[max(i_hi, i_lo)])
    sel = (k >= k_lo) & (k <= k_hi)
    if sel.sum() < 4:
        # decays below the floor within a few modes: band-limited
        span = max(k_hi, 1)
        rho = (floor / top) ** (1.0 / (span + 1))
        return Verdict.ANALYTIC_LIKELY, float(rho), 0.0, 1.0, float("nan"), (k_lo, k_hi)
    x = k[sel].astype(float)
    y = np.log(env[sel])
    (_, slope), r2e = _r2(x, y)
    _, r2a = _r2(np.log(x), y)
    rho = float(min(1.0, math.exp(slope)))
    if r2e >= r2_min and slope <= slope_max and r2e >= r2a:
        v = Verdict.ANALYTIC_LIKELY
    elif r2a > r2e:
        v = Verdict.NOT_ANALYTIC
    else:
        v = Verdict.INCONCLUSIVE
    return v, rho, float(1 - r2e), float(r2e), float(r2a), (k_lo, k_hi)


def compatibility(curve: CurveModel, data: BoundaryData, M: int = 256, **thresholds) -> CompatibilityReport:
    """Residual ``f - H h`` and a verdict on whether it is real analytic."""
    _require_closed(curve)
    _, f, h = data.samples(M)
    g = f - hilbert_transform(curve, h)
    ghat = np.fft.rfft(g) / M
    mag = np.abs(ghat)
    verdict, rho, fit_res, r2e, r2a, rng = classify_spectrum(mag, **thresholds)
    strip = -math.log(rho) if rho > np.finfo(float).tiny else math.inf
    return CompatibilityReport(
        residual=g,
        spectrum=mag,
        rho=rho,
        fit_residual=fit_res,
        verdict=verdict,
        strip_width=strip,
        r2_exponential=r2e,
        r2_algebraic=r2a,
        fit_range=rng,
    )


# -- graph-mode potentials ------------------------------------------------------------


def _as_callable(v):
    if callable(v):
        return v
    if np.isscalar(v):
        return lambda x, c=float(v): np.full(np.shape(x), c)
    p = Polynomial(np.asarray(v, dtype=float))
    return p


@dataclass(frozen=True, eq=False)
class GraphCauchyData:
    """Boundary ``y = psi(x)`` on ``[-1, 1]`` with potential data ``g`` and normal data ``h``.

    ``psi`` is a polynomial (ascending coefficients); ``g`` and ``h`` are
    callables, scalars or polynomial coefficient lists.
    """

    psi: Polynomial
    h: Callable
    g: Callable = 0.0

    def __post_init__(self):
        psi = self.psi if isinstance(self.psi, Polynomial) else Polynomial(np.asarray(self.psi, dtype=float))
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "h", _as_callable(self.h))
        object.__setattr__(self, "g", _as_callable(self.g))

    @classmethod
    def from_tangential(cls, psi, f, h, n_nodes: int = 64):
        """Build ``g`` with ``g' = f sqrt(1 + psi'^2)`` and ``g(0) = 0`` (Chebyshev antiderivative)."""
        psi = psi if isinstance(psi, Polynomial) else Polynomial(np.asarray(psi, dtype=float))
        fc = _as_callable(f)
        dpsi = psi.deriv()
        cheb = np.polynomial.Chebyshev.interpolate(lambda x: fc(x) * np.sqrt(1 + dpsi(x) ** 2), n_nodes)
        anti = cheb.integ()
        anti = anti - anti(0.0)
        return cls(psi, h, anti)

    def divided_difference(self, x: float) -> Polynomial:
        """``phi(x, t) = (psi(x) - psi(t)) / (x - t)`` as a polynomial in ``t``."""
        c = self.psi.coef
        n = c.size
        out = np.zeros(max(n - 1, 1))
        for m in range(n - 1):
            out[m] = sum(c[k] * x ** (k - 1 - m) for k in range(m + 1, n))
        return Polynomial(out)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _gl_panels(func, edges, n):
    x0, w0 = _gauss(n)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        x = 0.5 * (b - a) * x0 + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.dot(w0, func(x))
    return total


def _log_weighted(W, L, n, ratio, depth):
    """``int_0^L W(s) log(s) ds`` on a geometrically graded mesh toward ``s = 0``.

    Panels ``[L q^{m+1}, L q^m]`` use Gauss-Legendre; the innermost panel
    ``[0, l]`` uses the exact moments ``int_0^l log s = l (log l - 1)`` and
    ``int_0^l s log s = l^2 (log l / 2 - 1/4)`` with a linear model of ``W``.
    """
    if L <= 0:
        return 0.0
    edges = L * ratio ** np.arange(depth, -1, -1.0)
    total = _gl_panels(lambda s: W(s) * np.log(s), edges, n)
    ell = edges[0]
    w0 = W(np.array([0.0]))[0]
    w1 = (W(np.array([ell]))[0] - w0) / ell
    total += w0 * ell * (math.log(ell) - 1) + w1 * ell**2 * (math.log(ell) / 2 - 0.25)
    return total


def _adaptive(compute, tol, what):
    prev = None
    for n, depth in ((12, 16), (16, 22), (24, 28), (32, 34), (48, 40)):
        val = compute(n, depth)
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
    raise QuadratureFailure(f"{what}: tolerance {tol} not reached")


def graph_H(gcd: GraphCauchyData, x: float, tol: float = 1e-10) -> float:
    """``g(x) - (1/pi) int_{-1}^{1} h(t) sqrt(1 + psi'(t)^2) log|(x, psi(x)) - (t, psi(t))| dt``."""
    if not -1 < x < 1:
        raise ValueError("x must lie in (-1, 1)")
    dpsi = gcd.psi.deriv()
    phi = gcd.divided_difference(x)

    def weight(t):
        return gcd.h(t) * np.sqrt(1 + dpsi(t) ** 2)

    def smooth(t):
        return weight(t) * 0.5 * np.log1p(phi(t) ** 2)

    def compute(n, depth):
        log_part = _log_weighted(lambda s: weight(x - s), 1 + x, n, 0.2, depth)
        log_part += _log_weighted(lambda s: weight(x + s), 1 - x, n, 0.2, depth)
        edges = np.concatenate([np.linspace(-1, x, 4), np.linspace(x, 1, 4)[1:]])
        return log_part + _gl_panels(smooth, edges, n)

    integral = _adaptive(compute, tol, "graph_H")
    return float(gcd.g(np.array([x]))[0] - integral / math.pi)


def graph_F(gcd: GraphCauchyData, x: float, tol: float = 1e-10) -> float:
    """``(1/pi) int h(t) sqrt(1+psi'^2) (psi(x) - psi(t) - psi'(x)(x - t)) / |(x,psi(x)) - (t,psi(t))|^2 dt``.

    The kernel is bounded: it equals ``-q(t) / (1 + phi(t)^2)`` where
    ``phi`` is the first and ``q`` the second divided difference of ``psi``.
    """
    if not -1 < x < 1:
        raise ValueError("x must lie in (-1, 1)")
    dpsi = gcd.psi.deriv()
    phi = gcd.divided_difference(x)
    q = (phi - phi(x)) // Polynomial([-x, 1.0])

    def integrand(t):
        return gcd.h(t) * np.sqrt(1 + dpsi(t) ** 2) * (-q(t)) / (1 + phi(t) ** 2)

    def compute(n, depth):
        edges = np.concatenate([np.linspace(-1, x, 4), np.linspace(x, 1, 4)[1:]])
        return _gl_panels(integrand, edges, n)

    return float(_adaptive(compute, tol, "graph_F") / math.pi)
