"""Power-series construction of the exterior field near the boundary.

Near a base point ``t0`` the exterior is flattened by
``(x, y) = gamma(xt) + yt * i gamma'(t0)``.  In these coordinates the field
is ``Theta(xt) + phi(xt, yt)`` where ``phi`` solves
``d phi / d yt = Lambda (d phi / d xt + Theta')`` with ``phi(xt, 0) = 0``.
The double power series of ``phi`` is generated row by row in ``yt`` and its
truncation error is bounded by the tail of an explicit majorant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .boundary import BoundaryData, data_for_curve, theta
from .curve import CurveModel
from .distance import DEFAULT_FIT_ORDER, OPEN_MARGIN, local_jets
from .errors import InversionFailure
from .series import MajorantParams, choose_majorant, majorant_check, majorant_tail

DEFAULT_SERIES_ORDER = 24
DEFAULT_LATTICE = 128


def series_table(b: np.ndarray, c: np.ndarray, Kx: int, Ky: int) -> np.ndarray:
    """Coefficients ``phi[k, l]`` of ``(xt - t0)^k yt^l`` for ``k <= Kx``, ``l <= Ky``.

    Row ``l + 1`` follows from row ``l`` by
    ``(l+1) phi[k, l+1] = sum_j b_j (k-j+1) phi[k-j+1, l] + [l = 0] c_k``.
    Row ``l`` is carried to ``Kx + Ky - l`` so the rectangle is exact.
    """
    N = Kx + Ky + 1
    if b.size < N or c.size < N:
        raise ValueError(f"jets of order {N - 1} needed, got {b.size - 1} and {c.size - 1}")
    out = np.zeros((Kx + 1, Ky + 1), dtype=complex)
    row = np.zeros(N, dtype=complex)
    for l in range(Ky):
        n_next = N - l - 1
        dx = np.arange(1, row.size) * row[1:]
        nxt = np.convolve(b[:n_next], dx)[:n_next]
        if l == 0:
            nxt = nxt + c[:n_next]
        row = nxt / (l + 1)
        out[:, l + 1] = row[: Kx + 1]
    return out


@dataclass(frozen=True, eq=False)
class LocalSolution:
    curve: CurveModel
    data: BoundaryData
    t0: float
    Kx: int
    Ky: int
    phi: np.ndarray
    params: MajorantParams
    base_point: complex
    normal: complex
    R1: float = math.inf
    R2: float = math.inf

    def partial_sum(self, x, y, Kx=None, Ky=None):
        Kx = self.Kx if Kx is None else Kx
        Ky = self.Ky if Ky is None else Ky
        return np.polynomial.polynomial.polyval2d(x, y, self.phi[: Kx + 1, : Ky + 1])

    def dominance_violation(self, max_degree=None):
        return majorant_check(self.params, self.phi, max_degree)


def local_series(
    curve: CurveModel,
    data: BoundaryData,
    t0: float,
    K_x: int = DEFAULT_SERIES_ORDER,
    K_y: int | None = None,
    r2_method: str = "auto",
    fit_order: int = DEFAULT_FIT_ORDER,
    shrink: float = 0.95,
    _curve_data=False,
) -> LocalSolution:
    """Series solution about ``t0`` with its majorant parameters."""
    K_y = K_x if K_y is None else K_y
    if not _curve_data:
        data = data_for_curve(curve, data)
    jets = local_jets(curve, data, t0, K_x + K_y, fit_order, r2_method)
    phi = series_table(jets.b.coeffs, jets.c.coeffs, K_x, K_y)
    params = choose_majorant(jets.b, jets.c, jets.R1.value, jets.R2.value, shrink=shrink)
    return LocalSolution(
        curve=curve,
        data=data,
        t0=float(t0),
        Kx=K_x,
        Ky=K_y,
        phi=phi,
        params=params,
        base_point=complex(curve.gamma(t0)),
        normal=complex(1j * curve.d1(t0)),
        R1=jets.R1.value,
        R2=jets.R2.value,
    )


@dataclass(frozen=True)
class FieldSample:
    point: tuple[float, float]
    value: complex
    t0: float
    xt: float
    yt: float
    err_bound: float
    certified: bool
    heuristic: bool = False
    beyond_bound: bool = False
    interior: bool = False
    distance: float = float("nan")

    @property
    def B(self):
        """Field components ``(B1, B2)``."""
        return self.value.real, -self.value.imag


def as_complex(point) -> complex:
    """Accept ``x + iy`` or an ``(x, y)`` pair."""
    if np.isscalar(point):
        return complex(point)
    x, y = point
    return complex(float(x), float(y))


def invert_flattening(sol: LocalSolution, P: complex, guess=None, max_iter: int = 50):
    """Solve ``gamma(xt) + yt * N0 = P`` for real ``(xt, yt)`` by damped Newton."""
    curve, N0 = sol.curve, sol.normal
    if guess is None:
        xt, yt = sol.t0, 0.0
    else:
        xt, yt = guess
    scale = max(abs(P - sol.base_point), abs(N0), 1e-300)

    def F(x, y):
        return complex(curve.gamma(x)) + y * N0 - P

    r = F(xt, yt)
    for _ in range(max_iter):
        if abs(r) <= 1e-14 * scale:
            return xt, yt
        g1 = complex(curve.d1(xt))
        J = np.array([[g1.real, N0.real], [g1.imag, N0.imag]])
        try:
            step = np.linalg.solve(J, [-r.real, -r.imag])
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-6:
            xn, yn = xt + lam * step[0], yt + lam * step[1]
            rn = F(xn, yn)
            if abs(rn) < abs(r) or abs(rn) <= 1e-14 * scale:
                break
            lam /= 2
        else:
            break
        xt, yt, r = xn, yn, rn
    if abs(r) <= 1e-12 * scale:
        return xt, yt
    # fallback: trust-region least squares from the normal projection
    res = least_squares(
        lambda v: [F(*v).real, F(*v).imag],
        [sol.t0, ((P - sol.base_point) * np.conj(N0)).real / abs(N0) ** 2],
        xtol=1e-15, ftol=1e-15, gtol=1e-15,
    )
    if res.success and abs(F(*res.x)) <= 1e-12 * scale:
        return float(res.x[0]), float(res.x[1])
    raise InversionFailure(f"could not invert the flattening map at {P}")


def eval_field(sol: LocalSolution, point, guess=None) -> FieldSample:
    """Field ``B1 - i B2`` at a physical point, with a truncation-error bound."""
    P = as_complex(point)
    xt, yt = invert_flattening(sol, P, guess)
    X, Y = xt - sol.t0, yt
    series = complex(sol.partial_sum(X, Y))
    value = complex(theta(sol.curve, sol.data, xt)) + series
    inside = bool(sol.params.contains(X, Y)) and yt >= 0
    if inside:
        err = majorant_tail(sol.params, X, Y, sol.Kx, sol.Ky)
        heuristic = False
    else:
        # outside the certified region: compare with a lower-order partial sum
        lower = complex(sol.partial_sum(X, Y, max(sol.Kx - 4, 0), max(sol.Ky - 4, 0)))
        err = abs(series - lower)
        heuristic = True
    return FieldSample(
        point=(P.real, P.imag),
        value=value,
        t0=sol.t0,
        xt=float(xt),
        yt=float(yt),
        err_bound=float(err),
        certified=inside,
        heuristic=heuristic,
    )


def nearest_parameter(curve: CurveModel, P: complex, n: int = 4096):
    """Parameter of the nearest curve point and the signed distance (positive outside)."""
    t = curve.grid(n)
    dist = np.abs(curve.gamma(t) - P)
    i = int(np.argmin(dist))
    h = t[1] - t[0]
    lo, hi = t[i] - h, t[i] + h
    if not curve.closed:
        lo, hi = max(lo, curve.interval[0]), min(hi, curve.interval[1])
    res = minimize_scalar(lambda s: abs(complex(curve.gamma(s)) - P), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    ts = float(res.x) if res.fun <= dist[i] else float(t[i])
    foot = complex(curve.gamma(ts))
    side = ((P - foot) * np.conj(complex(curve.normal(ts)))).real
    return float(curve.wrap(ts)), math.copysign(abs(P - foot), side if side != 0 else 1.0)


@dataclass
class PatchedExtension:
    """Series solutions on a lattice of base points, built lazily and cached."""

    curve: CurveModel
    data: BoundaryData
    K: int = DEFAULT_SERIES_ORDER
    lattice: int = DEFAULT_LATTICE
    d_star: float = math.inf
    r2_method: str = "auto"
    fit_order: int = DEFAULT_FIT_ORDER
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.data = data_for_curve(self.curve, self.data)
        if self.curve.closed:
            self.nodes = np.linspace(0, 2 * math.pi, self.lattice, endpoint=False)
        else:
            lo, hi = self.curve.interval
            m = OPEN_MARGIN * (hi - lo)
            self.nodes = np.linspace(lo + m, hi - m, self.lattice)

    def solution(self, index: int) -> LocalSolution:
        if index not in self._cache:
            self._cache[index] = local_series(
                self.curve, self.data, float(self.nodes[index]), self.K,
                r2_method=self.r2_method, fit_order=self.fit_order, _curve_data=True,
            )
        return self._cache[index]

    def nearest_index(self, t: float) -> int:
        if self.curve.closed:
            gap = np.abs((self.nodes - t + math.pi) % (2 * math.pi) - math.pi)
        else:
            gap = np.abs(self.nodes - t)
        return int(np.argmin(gap))

    def neighbours(self, t: float, count: int = 2):
        if self.curve.closed:
            gap = np.abs((self.nodes - t + math.pi) % (2 * math.pi) - math.pi)
        else:
            gap = np.abs(self.nodes - t)
        return [int(i) for i in np.argsort(gap)[:count]]

    def evaluate(self, point, index: int | None = None) -> FieldSample:
        P = as_complex(point)
        ts, dist = nearest_parameter(self.curve, P)
        if dist < 0:
            return FieldSample((P.real, P.imag), complex(np.nan, np.nan), float("nan"), float("nan"),
                               float("nan"), float("inf"), False, interior=True, distance=dist)
        idx = self.nearest_index(ts) if index is None else index
        sol = self.solution(idx)
        s = eval_field(sol, P)
        return FieldSample(
            s.point, s.value, s.t0, s.xt, s.yt, s.err_bound, s.certified, s.heuristic,
            beyond_bound=dist > self.d_star, interior=False, distance=dist,
        )


def extend_on_grid(
    curve: CurveModel,
    data: BoundaryData,
    points,
    K: int = DEFAULT_SERIES_ORDER,
    lattice: int = DEFAULT_LATTICE,
    d_star: float | None = None,
    r2_method: str = "auto",
) -> list[FieldSample]:
    """Evaluate the extended field at each point from the nearest lattice base point.

    Points farther than ``d_star`` from the curve are flagged
    (``beyond_bound``) but still evaluated.
    """
    if d_star is None:
        from .distance import dstar

        d_star = dstar(curve, data, r2_method=r2_method).d_star
    ext = PatchedExtension(curve, data, K, lattice, d_star, r2_method)
    return [ext.evaluate(p) for p in points]
