"""Exact representations of analytic functions of the curve parameter.

Three families cover everything the package needs: finite Fourier series
``sum c_k e^{ikt}``, polynomials, and ratios of polynomials.  Each can be
evaluated at complex arguments, differentiated exactly, expanded into a
:class:`~harmext.series.LocalJet`, and continued to the conjugate function
(the analytic function that agrees with ``conj(f(t))`` for real ``t``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .series import LocalJet


@dataclass(frozen=True, eq=False)
class FourierSeries:
    """``f(z) = sum_k c_k exp(i k z)`` for integer frequencies ``k``."""

    ks: np.ndarray
    cs: np.ndarray

    period = 2 * math.pi

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=int).ravel()
        cs = np.asarray(self.cs, dtype=complex).ravel()
        if ks.shape != cs.shape:
            raise ValueError("frequencies and coefficients must have equal length")
        # merge duplicate frequencies and drop exact zeros
        merged: dict[int, complex] = {}
        for k, c in zip(ks.tolist(), cs.tolist()):
            merged[k] = merged.get(k, 0.0) + c
        items = sorted((k, c) for k, c in merged.items() if c != 0)
        ks = np.array([k for k, _ in items], dtype=int)
        cs = np.array([c for _, c in items], dtype=complex)
        for arr in (ks, cs):
            arr.setflags(write=False)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "cs", cs)

    @classmethod
    def from_dict(cls, coeffs: dict[int, complex]):
        return cls(np.array(list(coeffs.keys()), dtype=int), np.array(list(coeffs.values()), dtype=complex))

    @classmethod
    def from_cos_sin(cls, a0=0.0, cos=(), sin=()):
        """Real trigonometric polynomial ``a0 + sum a_k cos kt + sum b_k sin kt``."""
        d: dict[int, complex] = {0: complex(a0)}
        for k, a in enumerate(cos, start=1):
            d[k] = d.get(k, 0) + a / 2
            d[-k] = d.get(-k, 0) + a / 2
        for k, b in enumerate(sin, start=1):
            d[k] = d.get(k, 0) + b / 2j
            d[-k] = d.get(-k, 0) - b / 2j
        return cls.from_dict(d)

    @classmethod
    def from_samples(cls, values, tol=1e-15):
        """Trigonometric interpolant of equispaced samples on ``[0, 2 pi)``.

        Modes below ``tol`` times the largest are dropped: roundoff-level
        high frequencies would otherwise dominate high-order Taylor
        coefficients.
        """
        v = np.asarray(values)
        M = v.size
        if M % 2:
            raise ValueError("sample count must be even")
        chat = np.fft.fft(v) / M
        k = np.fft.fftfreq(M, 1.0 / M).astype(int)
        # split the Nyquist mode symmetrically so real data stays real
        nyq = M // 2
        chat = chat.copy()
        ks = list(k)
        cs = list(chat)
        i = ks.index(-nyq)
        cs[i] = chat[i] / 2
        ks.append(nyq)
        cs.append(chat[i] / 2)
        cs = np.array(cs)
        if tol > 0:
            keep = np.abs(cs) > tol * np.abs(cs).max()
            return cls(np.array(ks)[keep], cs[keep])
        return cls(np.array(ks), cs)

    @property
    def degree(self) -> int:
        return int(np.abs(self.ks).max()) if self.ks.size else 0

    def __call__(self, z):
        z = np.asarray(z)
        if self.ks.size == 0:
            return np.zeros(z.shape, dtype=complex)
        return np.exp(1j * np.multiply.outer(z, self.ks)) @ self.cs

    def derivative(self, m: int = 1) -> "FourierSeries":
        return FourierSeries(self.ks, self.cs * (1j * self.ks) ** m)

    def conj(self) -> "FourierSeries":
        return FourierSeries(-self.ks, np.conj(self.cs))

    def is_real(self, tol=1e-14) -> bool:
        return np.allclose(self(np.linspace(0, 2 * np.pi, 4 * self.degree + 8)).imag, 0, atol=tol * (1 + np.abs(self.cs).sum()))

    def taylor(self, t0: float, order: int) -> LocalJet:
        """``sum_k c_k (ik)^n e^{ik t0} / n!`` for ``n = 0..order`` (``t0`` may be an array)."""
        shape = (order + 1,) + np.shape(t0)
        if self.ks.size == 0:
            return LocalJet(t0, np.zeros(shape, dtype=complex))
        # row n holds (ik)^n / n!, built by a running product
        steps = np.empty((order + 1, self.ks.size), dtype=complex)
        steps[0] = 1.0
        steps[1:] = np.multiply.outer(1.0 / np.arange(1, order + 1), 1j * self.ks)
        powers = np.cumprod(steps, axis=0)
        phases = np.exp(1j * np.multiply.outer(self.ks, t0))
        return LocalJet(t0, powers @ (self.cs.reshape((-1,) + (1,) * np.ndim(t0)) * phases))

    def zeros(self) -> np.ndarray:
        """Zeros in the strip ``-pi < Re z <= pi`` (via ``w = e^{iz}``)."""
        if self.ks.size == 0:
            return np.array([], dtype=complex)
        lo, hi = int(self.ks.min()), int(self.ks.max())
        poly = np.zeros(hi - lo + 1, dtype=complex)
        poly[self.ks - lo] = self.cs
        # np.roots wants highest degree first
        w = np.roots(poly[::-1])
        w = w[np.abs(w) > 0]
        return np.angle(w) - 1j * np.log(np.abs(w))

    def mean_abs_weight(self) -> float:
        """``sum |c_k| |k| e^{|k|}``."""
        k = np.abs(self.ks)
        return float(np.sum(np.abs(self.cs) * k * np.exp(k)))


@dataclass(frozen=True, eq=False)
class PolySeries:
    """Polynomial with ascending coefficients ``p(z) = sum p_n z^n``."""

    coeffs: np.ndarray

    period = None

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=complex).ravel(), "b")
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return P.polyval(np.asarray(z), self.coeffs)

    def derivative(self, m: int = 1) -> "PolySeries":
        return PolySeries(P.polyder(self.coeffs, m) if self.degree >= m else [0.0])

    def conj(self) -> "PolySeries":
        return PolySeries(np.conj(self.coeffs))

    def taylor(self, t0: float, order: int) -> LocalJet:
        out = np.zeros((order + 1,) + np.shape(t0), dtype=complex)
        c = self.coeffs
        for n in range(min(order, self.degree) + 1):
            out[n] = P.polyval(np.asarray(t0, dtype=float), c) / math.factorial(n)
            c = P.polyder(c)
        return LocalJet(t0, out)

    def compose_linear(self, scale: float, shift: float) -> "PolySeries":
        """``p(scale * z + shift)``."""
        out = np.zeros(1, dtype=complex)
        lin = np.array([shift, scale], dtype=complex)
        power = np.ones(1, dtype=complex)
        for c in self.coeffs:
            out = P.polyadd(out, c * power)
            power = P.polymul(power, lin)
        return PolySeries(out)

    def zeros(self) -> np.ndarray:
        if self.degree < 1:
            return np.array([], dtype=complex)
        return np.roots(self.coeffs[::-1])


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """``num(z) / den(z)`` with polynomial numerator and denominator."""

    num: PolySeries
    den: PolySeries

    period = None

    def __post_init__(self):
        if not isinstance(self.num, PolySeries):
            object.__setattr__(self, "num", PolySeries(self.num))
        if not isinstance(self.den, PolySeries):
            object.__setattr__(self, "den", PolySeries(self.den))
        if np.all(self.den.coeffs == 0):
            raise ValueError("zero denominator")

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def conj(self) -> "RationalFunction":
        return RationalFunction(self.num.conj(), self.den.conj())

    def derivative(self, m: int = 1) -> "RationalFunction":
        out = self
        for _ in range(m):
            n, d = out.num.coeffs, out.den.coeffs
            top = P.polysub(P.polymul(P.polyder(n), d), P.polymul(n, P.polyder(d)))
            out = RationalFunction(PolySeries(top), PolySeries(P.polymul(d, d)))
        return out

    def taylor(self, t0: float, order: int) -> LocalJet:
        return self.num.taylor(t0, order) * self.den.taylor(t0, order).reciprocal()

    def poles(self) -> np.ndarray:
        return self.den.zeros()

    def compose_linear(self, scale: float, shift: float) -> "RationalFunction":
        return RationalFunction(self.num.compose_linear(scale, shift), self.den.compose_linear(scale, shift))

    @property
    def is_polynomial(self) -> bool:
        return self.den.degree == 0


def singularities_of(func) -> list[complex]:
    """Finite singular points of an exact representation (empty when entire)."""
    if isinstance(func, RationalFunction):
        return list(func.poles())
    return []
