"""Truncated complex power series and the coefficient-level quantities built on them.

A :class:`LocalJet` holds the Taylor coefficients of a function of the curve
parameter about a base point ``t0``.  On top of the jet arithmetic this module
provides the coefficients of the normal-derivative coefficient function
``i a0 / a(x)``, radius-of-convergence estimates, the guaranteed radius ``r0``,
and the two-variable majorant used to certify truncation errors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DivisionByZeroJet, DegenerateCurve, InsufficientOrder

RECIPROCAL_TOL = 1e-14


def _cauchy_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """First ``len(a)`` coefficients of the product of two series (columnwise for 2-D input)."""
    if a.ndim == 1 and b.ndim == 1:
        return np.convolve(a, b)[: a.size]
    a, b = np.broadcast_arrays(a if a.ndim == 2 else a[:, None], b if b.ndim == 2 else b[:, None])
    out = np.empty(a.shape, dtype=complex)
    for n in range(a.shape[0]):
        out[n] = np.einsum("i...,i...->...", a[: n + 1], b[n::-1])
    return out


def _lag_sum(x: np.ndarray, y: np.ndarray, n: int):
    """``sum_{k=1}^{n} x_k y_{n-k}``, columnwise for 2-D input."""
    if x.ndim == 1:
        return np.dot(x[1 : n + 1], y[n - 1 :: -1])
    return np.einsum("i...,i...->...", x[1 : n + 1], y[n - 1 :: -1])


@dataclass(frozen=True, eq=False)
class LocalJet:
    """Taylor coefficients ``coeffs[n]`` of ``(x - t0)**n`` up to order ``K``.

    A batch of jets at several base points is stored with ``t0`` of shape
    ``(m,)`` and ``coeffs`` of shape ``(K + 1, m)``; all arithmetic acts
    columnwise.
    """

    t0: float | np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if np.ndim(self.t0) == 0:
            c = c.ravel()
            t0 = float(self.t0)
        else:
            t0 = np.asarray(self.t0, dtype=float).ravel()
            t0.setflags(write=False)
            if c.ndim != 2 or c.shape[1] != t0.size:
                raise ValueError(f"batched jets need coefficients of shape (K+1, {t0.size})")
        if c.shape[0] < 1:
            raise ValueError("a jet needs at least one coefficient")
        if not np.isfinite(c.sum()) and not np.isfinite(c).all():
            raise ValueError("jet coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "t0", t0)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def batched(self) -> bool:
        return self.coeffs.ndim == 2

    def column(self, j: int) -> "LocalJet":
        """The single jet at base point ``t0[j]`` of a batch."""
        return LocalJet(float(self.t0[j]), self.coeffs[:, j])

    def __len__(self):
        return self.coeffs.shape[0]

    def __getitem__(self, n):
        return self.coeffs[n]

    def __repr__(self):
        if self.batched:
            return f"LocalJet(batch of {self.t0.size}, order={self.order})"
        return f"LocalJet(t0={self.t0!r}, order={self.order})"

    @classmethod
    def constant(cls, t0, value, order):
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        return cls(t0, c)

    @classmethod
    def identity(cls, t0, order):
        """Jet of ``x`` itself."""
        c = np.zeros(order + 1, dtype=complex)
        c[0] = t0
        if order >= 1:
            c[1] = 1.0
        return cls(t0, c)

    def truncate(self, order):
        if order > self.order:
            raise ValueError(f"cannot raise order {self.order} to {order}")
        return LocalJet(self.t0, self.coeffs[: order + 1])

    def _pair(self, other):
        if isinstance(other, LocalJet):
            if np.shape(other.t0) != np.shape(self.t0) or np.any(np.asarray(other.t0) != np.asarray(self.t0)):
                raise ValueError(f"base points differ: {self.t0} vs {other.t0}")
            n = min(self.order, other.order) + 1
            return self.coeffs[:n], other.coeffs[:n]
        return self.coeffs, complex(other)

    def __add__(self, other):
        a, b = self._pair(other)
        if isinstance(other, LocalJet):
            return LocalJet(self.t0, a + b)
        c = a.copy()
        c[0] += b
        return LocalJet(self.t0, c)

    __radd__ = __add__

    def __neg__(self):
        return LocalJet(self.t0, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._pair(other)
        if isinstance(other, LocalJet):
            return LocalJet(self.t0, _cauchy_product(a, b))
        return LocalJet(self.t0, a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LocalJet):
            return self * other.reciprocal()
        return LocalJet(self.t0, self.coeffs / complex(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        """Jet of ``1/x`` by the convolution recurrence."""
        x = self.coeffs
        if np.any(np.abs(x[0]) <= RECIPROCAL_TOL):
            raise DivisionByZeroJet(f"constant term {x[0]!r} is too small to invert")
        y = np.zeros_like(x)
        y[0] = 1.0 / x[0]
        for n in range(1, x.shape[0]):
            y[n] = -_lag_sum(x, y, n) / x[0]
        return LocalJet(self.t0, y)

    def sqrt(self):
        """Principal square root, continued from the principal root of the constant term."""
        x = self.coeffs
        if np.any(np.abs(x[0]) <= RECIPROCAL_TOL):
            raise DivisionByZeroJet("square root of a jet with vanishing constant term")
        y = np.zeros_like(x)
        y[0] = np.sqrt(x[0])
        for n in range(1, x.shape[0]):
            # y[n] is still zero, so this is sum_{k=1}^{n-1} y_k y_{n-k}
            y[n] = (x[n] - _lag_sum(y, y, n)) / (2.0 * y[0])
        return LocalJet(self.t0, y)

    def derivative(self):
        """Jet of the derivative; the order drops by one."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        n = np.arange(1, self.coeffs.shape[0])
        if self.batched:
            n = n[:, None]
        return LocalJet(self.t0, n * self.coeffs[1:])

    def conj_coeffs(self):
        """Jet with conjugated coefficients (the continuation of ``conj(f(conj x))``)."""
        return LocalJet(self.t0, np.conj(self.coeffs))

    def __call__(self, x):
        """Evaluate the truncated polynomial at ``x``."""
        if self.batched:
            raise ValueError("evaluate a single column of a batched jet")
        u = np.asarray(x) - self.t0
        return np.polynomial.polynomial.polyval(u, self.coeffs)


def jet_algebra(op: str, x: LocalJet, y: LocalJet | None = None) -> LocalJet:
    """Dispatch ``add``, ``mul``, ``reciprocal`` or ``differentiate`` on jets."""
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "reciprocal":
        return x.reciprocal()
    if op == "differentiate":
        return x.derivative()
    raise ValueError(f"unknown jet operation {op!r}")


# -- coefficients of Lambda = i a0 / a(x) ---------------------------------------


def lambda_jet(a: LocalJet) -> LocalJet:
    """Coefficients ``b_n`` of ``i a_0 / sum a_n (x - t0)^n``.

    The convolution identity ``a * b = i a_0`` gives ``b_0 = i`` and
    ``b_n = -(1/a_0) sum_{k=1}^{n} a_k b_{n-k}``.
    """
    x = a.coeffs
    if np.any(np.abs(x[0]) <= RECIPROCAL_TOL):
        raise DegenerateCurve("curve speed vanishes at the base point")
    b = np.zeros_like(x)
    b[0] = 1j
    for n in range(1, x.shape[0]):
        b[n] = -_lag_sum(x, b, n) / x[0]
    return LocalJet(a.t0, b)


def lambda_matrix(a: LocalJet, n: int) -> np.ndarray:
    """The ``(n+1) x (n+1)`` matrix whose determinant gives ``b_n``.

    Row 0 is ``(0, a_1, ..., a_n)``; rows ``1..n-1`` carry the shifted band
    ``a_{j-i}`` in columns ``j >= i``; the last row is ``(1, 0, ..., 0, a_0)``.
    """
    x = a.coeffs
    A = np.zeros((n + 1, n + 1), dtype=complex)
    A[0, 1:] = x[1 : n + 1]
    for i in range(1, n + 1):
        for j in range(max(i, 1), n + 1):
            A[i, j] = x[j - i]
    A[n, 0] = 1.0
    return A


def lambda_coeff_det(a: LocalJet, n: int) -> complex:
    """``b_n = i / a_0^n * det(A_n)``, independent of the recurrence in :func:`lambda_jet`."""
    if not 1 <= n <= a.order:
        raise ValueError(f"index {n} outside 1..{a.order}")
    return complex(1j / a.coeffs[0] ** n * np.linalg.det(lambda_matrix(a, n)))


# -- radius of convergence ------------------------------------------------------


class RadiusMethod(str, enum.Enum):
    EXACT_ROOTS = "ExactRoots"
    CAUCHY_HADAMARD_FIT = "CauchyHadamardFit"
    DECLARED_ENTIRE = "DeclaredEntire"


@dataclass(frozen=True)
class RadiusEstimate:
    value: float
    method: RadiusMethod
    note: str = ""

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"radius must be positive, got {self.value}")

    @property
    def exact(self) -> bool:
        return self.method is not RadiusMethod.CAUCHY_HADAMARD_FIT


def singularity_distances(t0, points: Iterable[complex], period: float | None = None) -> np.ndarray:
    """Distance from each real ``t0`` to the nearest point, including periodic images."""
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    pts = np.asarray(list(points), dtype=complex)
    if pts.size == 0:
        return np.full(t0.shape, math.inf)
    dx = pts.real[None, :] - t0[:, None]
    if period is not None:
        dx = (dx + period / 2) % period - period / 2
    return np.hypot(dx, pts.imag[None, :]).min(axis=1)


def nearest_singularity(t0: float, points: Iterable[complex], period: float | None = None) -> float:
    """Distance from real ``t0`` to the nearest point, including periodic images."""
    return float(singularity_distances(t0, points, period)[0])


def _loglinear(x, y, with_log):
    cols = [np.ones_like(x), x]
    if with_log:
        cols.append(np.log(x))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def fit_radius(coeffs: Sequence[complex], min_nonzero: int = 8) -> tuple[float, str]:
    """Estimate a radius of convergence from Taylor coefficients.

    Fits ``log|c_n| ~ alpha + beta n + gamma log n`` over the top half of the
    available orders.  When the coefficients oscillate (a conjugate pair of
    singularities at equal distance), the fit is done instead on the
    second-order Hankel determinants ``c_n c_{n+2} - c_{n+1}^2`` whose
    geometric rate is the square of the coefficients' rate.
    """
    c = np.asarray(coeffs, dtype=complex)
    mag = np.abs(c)
    scale = mag.max() if mag.size else 0.0
    nonzero = mag > 1e-300 + 1e-15 * scale
    if np.count_nonzero(nonzero[1:]) < min_nonzero:
        raise InsufficientOrder(
            f"{np.count_nonzero(nonzero[1:])} nonzero coefficients, need {min_nonzero}"
        )
    K = c.size - 1
    lo = max(1, K // 2)
    # Normalize to avoid overflow in the products below.
    with np.errstate(divide="ignore"):
        ratio = np.exp(np.mean(np.diff(np.log(mag[nonzero]))))
    n_all = np.arange(K + 1)
    u = c / ratio**n_all if np.isfinite(ratio) and ratio > 0 else c
    D = u[:-2] * u[2:] - u[1:-1] ** 2
    nd = np.arange(D.size)
    top = nd >= lo
    dscale = np.max(np.abs(u[lo:]) ** 2)
    if np.max(np.abs(D[top])) > 1e-8 * dscale:
        sel = top & (np.abs(D) > 1e-300)
        coef = _loglinear(nd[sel].astype(float), np.log(np.abs(D[sel])), sel.sum() >= 4)
        rate = coef[1] / 2.0
        how = "Hankel-sequence fit"
    else:
        sel = (n_all >= lo) & nonzero
        coef = _loglinear(n_all[sel].astype(float), np.log(np.abs(u[sel])), sel.sum() >= 4)
        rate = coef[1]
        how = "log-linear fit"
    if np.isfinite(ratio) and ratio > 0:
        rate += math.log(ratio)
    R = math.exp(-rate) if rate < 700 else 0.0
    if R <= 0:
        R = np.finfo(float).tiny
    return R, f"{how} over orders {lo}..{K}"


def radius_estimate(
    jet: LocalJet,
    singularities: Iterable[complex] | None = None,
    period: float | None = None,
    min_order: int = 8,
) -> RadiusEstimate:
    """Radius of convergence of the series in ``jet``.

    If ``singularities`` is given the radius is the exact distance from
    ``jet.t0`` to the nearest of them (``+inf`` when the list is empty, i.e.
    the function is declared entire).  Otherwise the radius is fitted from
    the coefficient decay.
    """
    if singularities is not None:
        pts = list(singularities)
        if not pts:
            return RadiusEstimate(math.inf, RadiusMethod.DECLARED_ENTIRE, "no finite singularities")
        R = nearest_singularity(jet.t0, pts, period)
        return RadiusEstimate(R, RadiusMethod.EXACT_ROOTS, f"{len(pts)} singular points located")
    if jet.order < min_order:
        raise InsufficientOrder(f"order {jet.order} below {min_order}")
    R, note = fit_radius(jet.coeffs, min_order)
    return RadiusEstimate(R, RadiusMethod.CAUCHY_HADAMARD_FIT, note + "; estimate, not certified")


# -- sup |b_n|^(1/n) and r0 -----------------------------------------------------


@dataclass(frozen=True)
class SupRoot:
    """Truncated ``max_{1<=n<=K} |b_n|^{1/n}`` with an optional certified bound."""

    value: float
    bound: float = math.inf
    argmax: int = 0
    rising: bool = False

    @property
    def safe(self) -> float:
        """Value to use when the guarantee matters: the bound when the sup is still rising."""
        if self.rising and math.isfinite(self.bound):
            return max(self.value, self.bound)
        return self.value


def nth_roots(b: LocalJet) -> np.ndarray:
    mag = np.abs(b.coeffs[1:])
    n = np.arange(1, b.coeffs.size)
    return mag ** (1.0 / n)


def sup_root(b: LocalJet, fallback_bound: float = math.inf, rise_tol: float = 1e-12) -> SupRoot:
    """``max |b_n|^{1/n}`` over the available orders.

    ``rising`` is set when the running maximum is still being pushed up by the
    highest orders, in which case the truncated value may understate the sup.
    """
    roots = nth_roots(b)
    if roots.size == 0:
        return SupRoot(0.0, fallback_bound)
    k = int(np.argmax(roots))
    value = float(roots[k])
    rising = (
        roots.size >= 3
        and k >= roots.size - 2
        and value > roots[:-2].max() * (1 + rise_tol)
    )
    return SupRoot(value, float(fallback_bound), k + 1, bool(rising))


def r0(sup_root_value: float, R2) -> float:
    """``min(1/sup, R2)`` with ``1/0 = inf``."""
    R = R2.value if isinstance(R2, RadiusEstimate) else float(R2)
    inv = math.inf if sup_root_value <= 0 else 1.0 / sup_root_value
    return min(inv, R)


def m1(b: LocalJet, r):
    """``max(1, |b_1| r, |b_2| r^2, ...)`` over the available orders (vectorized in r)."""
    r = np.asarray(r, dtype=float)
    mag = np.abs(b.coeffs[1:])
    if mag.size == 0:
        return np.ones_like(r)
    n = np.arange(1, b.coeffs.size)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = mag[None, :] * np.power.outer(np.atleast_1d(r), n)
    vals = np.where(mag[None, :] == 0, 0.0, vals)
    out = np.maximum(1.0, vals.max(axis=1))
    return out.reshape(r.shape)


def m2(c: LocalJet, r):
    """``max(|c_0|, |c_1| r, ...)`` over the available orders (vectorized in r)."""
    r = np.asarray(r, dtype=float)
    mag = np.abs(c.coeffs)
    n = np.arange(c.coeffs.size)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = mag[None, :] * np.power.outer(np.atleast_1d(r), n)
    vals = np.where(mag[None, :] == 0, 0.0, vals)
    return vals.max(axis=1).reshape(r.shape)


@dataclass(frozen=True)
class MajorantParams:
    r: float
    M1: float
    M2: float
    r0: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("majorant radius must be positive")
        if self.M1 < 1:
            raise ValueError("M1 is at least 1 by definition")
        if self.M2 < 0:
            raise ValueError("M2 is nonnegative")

    @property
    def scale(self) -> float:
        return self.M2 / self.M1

    def contains(self, x, y):
        """Membership of ``(|x - t0|, |y|)`` in the convergence region for this ``r``."""
        x = np.abs(np.asarray(x, dtype=float))
        y = np.abs(np.asarray(y, dtype=float))
        return (x < self.r) & (y < (self.r - x) ** 2 / (2 * self.M1 * self.r))

    def height(self) -> float:
        """Extent of the region in the normal direction at ``x = t0``."""
        return self.r / (2 * self.M1)


def choose_majorant(
    b: LocalJet,
    c: LocalJet,
    R1: float,
    R2: float,
    shrink: float = 0.95,
    cap: float = 1e3,
) -> MajorantParams:
    """Pick ``r`` maximizing ``r / (2 M1(r))`` while staying inside both radii.

    When the maximizer ``r0 = 1/sup|b_n|^{1/n}`` lies strictly inside the
    radii it is used directly; otherwise ``r`` is taken just below the limiting
    radius.
    """
    s = sup_root(b).value
    limit = min(R1, R2)
    r_0 = r0(s, limit)
    if math.isfinite(r_0) and r_0 < limit:
        r = r_0
    elif math.isfinite(limit):
        r = shrink * limit
    else:
        r = cap
    M1 = float(m1(b, r))
    M2 = float(m2(c, r))
    return MajorantParams(r=r, M1=M1, M2=M2, r0=r_0)


# -- the two-variable majorant ---------------------------------------------------


def _catalan(n):
    return math.comb(2 * n, n) // (n + 1)


def majorant_unit_table(Kx: int, Ky: int, M1: float, r: float) -> np.ndarray:
    """Taylor coefficients ``V[k, l]`` of ``r - x - sqrt((r - x)^2 - 2 M1 r y)``."""
    V = np.zeros((Kx + 1, Ky + 1))
    k = np.arange(Kx + 1)
    for l in range(1, Ky + 1):
        beta = _catalan(l - 1) / 2.0 ** (2 * l - 1)
        logs = (
            math.log(beta)
            + l * math.log(2 * M1)
            + (1 - l - k) * math.log(r)
            + gammaln(2 * l - 1 + k)
            - gammaln(k + 1)
            - gammaln(2 * l - 1)
        )
        V[:, l] = np.exp(logs)
    return V


def majorant_table(params: MajorantParams, Kx: int, Ky: int) -> np.ndarray:
    """``(M2/M1) V[k, l]`` for ``k <= Kx``, ``l <= Ky``."""
    return params.scale * majorant_unit_table(Kx, Ky, params.M1, params.r)


def majorant_value(params: MajorantParams, x, y):
    """``(M2/M1) V(x, y)`` in closed form (rationalized to avoid cancellation)."""
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    d = params.r - x
    q = 2 * params.M1 * params.r * y
    with np.errstate(invalid="ignore"):
        v = q / (d + np.sqrt(d * d - q))
    return params.scale * v


def _negative_binomial_tail(p: int, x: float, K: int, rtol=1e-17) -> float:
    """``sum_{k > K} binom(p - 1 + k, k) x^k`` for ``0 <= x < 1``."""
    if x <= 0:
        return 0.0
    k = K + 1
    term = math.exp(
        math.lgamma(p + k) - math.lgamma(k + 1) - math.lgamma(p) + k * math.log(x)
    ) if p > 0 else 0.0
    total = 0.0
    for _ in range(200000):
        total += term
        ratio = x * (p + k) / (k + 1)
        if term <= rtol * total and ratio < 1:
            total += term * ratio / (1 - ratio)
            break
        term *= ratio
        k += 1
    else:
        return math.inf
    return total


def majorant_tail(params: MajorantParams, x: float, y: float, Kx: int, Ky: int) -> float:
    """``(M2/M1)(V - V_trunc)(x, y)`` where ``V_trunc`` keeps ``k <= Kx, l <= Ky``.

    Returns ``inf`` outside the convergence region.
    """
    x = abs(float(x))
    y = abs(float(y))
    if params.M2 == 0:
        return 0.0
    if not params.contains(x, y):
        return math.inf
    r, M1 = params.r, params.M1
    d = r - x
    u = 2 * M1 * r * y / (d * d)
    total = 0.0
    # rows l > Ky summed in closed form in x: beta_l u^l (r - x)
    if y > 0:
        l = Ky + 1
        log_beta = math.log(_catalan(l - 1)) - (2 * l - 1) * math.log(2)
        term = math.exp(log_beta + l * math.log(u)) * d
        for _ in range(200000):
            total += term
            ratio = u * (2 * l) * (2 * l - 1) / ((l + 1) * l * 4)
            if term <= 1e-17 * total and ratio < 1:
                total += term * ratio / (1 - ratio)
                break
            term *= ratio
            l += 1
        # columns k > Kx within rows 1..Ky
        for l in range(1, Ky + 1):
            beta = _catalan(l - 1) / 2.0 ** (2 * l - 1)
            coef = beta * (2 * M1 * r * y) ** l * r ** (1 - 2 * l)
            if coef == 0:
                continue
            total += coef * _negative_binomial_tail(2 * l - 1, x / r, Kx)
    return params.scale * total


def majorant_check(params: MajorantParams, phi: np.ndarray, max_degree: int | None = None, rtol=1e-12):
    """Entrywise ``|phi[k, l]| <= (M2/M1) V[k, l]``.

    Returns ``None`` when every checked entry passes, otherwise the first
    violating index ``(k, l)`` in order of increasing total degree.
    """
    phi = np.asarray(phi)
    Kx, Ky = phi.shape[0] - 1, phi.shape[1] - 1
    bound = majorant_table(params, Kx, Ky)
    top = Kx + Ky if max_degree is None else max_degree
    for deg in range(top + 1):
        for l in range(0, min(deg, Ky) + 1):
            k = deg - l
            if k > Kx:
                continue
            if abs(phi[k, l]) > bound[k, l] * (1 + rtol) + 1e-300:
                return (k, l)
    return None


def brute_r0_oracle(b: LocalJet, R1: float, R2: float, n_grid: int = 10_000, cap: float = 1e3) -> float:
    """``max r / (2 M1(r))`` over ``r in (0, min(R1, R2))`` by grid search.

    A logarithmic sweep locates the maximizer; a uniform grid around it
    then resolves the maximum.
    """
    top = min(R1, R2, cap)
    r = np.geomspace(top * 1e-8, top, n_grid, endpoint=False)
    vals = r / (2 * m1(b, r))
    i = int(np.argmax(vals))
    lo = r[max(i - 1, 0)]
    hi = r[min(i + 1, r.size - 1)] if i + 1 < r.size else top
    fine = np.linspace(lo, hi, n_grid)
    fine = fine[fine < top]
    fine_vals = fine / (2 * m1(b, fine))
    return float(max(vals.max(), fine_vals.max()))
