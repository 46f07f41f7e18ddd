"""Power and saturated power nonlinearities with their primitives.

For ``y >= 0``::

    f(y) = y**sigma / (1 + (delta*y)**sigma)
    F(y) = int_0^y f,    G(y) = y f(y) - F(y) = int_0^y z f'(z) dz

``delta = 0`` is the pure power case where ``F = y**(sigma+1)/(sigma+1)`` and
``G = sigma * F``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

WHICH = ("f", "F", "G", "df", "dG", "d2f", "d2F", "d2G")


@dataclass(frozen=True)
class NonlinearityFns:
    sigma: int
    delta: float = 0.0

    def __post_init__(self):
        if int(self.sigma) != self.sigma or self.sigma < 1:
            raise ValueError(f"sigma must be an integer >= 1, got {self.sigma}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    @property
    def saturated(self) -> bool:
        return self.delta > 0

    def _sat(self, y):
        return 1.0 + (self.delta * y) ** self.sigma

    def f(self, y):
        y = _nonneg(y)
        return y**self.sigma / self._sat(y)

    def df(self, y):
        y = _nonneg(y)
        s = self.sigma
        return s * y ** (s - 1) / self._sat(y) ** 2

    def d2f(self, y):
        y = _nonneg(y)
        s = self.sigma
        if s == 1:
            lead = np.zeros_like(np.asarray(y, dtype=float))
        else:
            lead = s * (s - 1) * y ** (s - 2) / self._sat(y) ** 2
        if not self.saturated:
            return lead
        corr = -2 * s * s * self.delta**s * y ** (2 * s - 2) / self._sat(y) ** 3
        return lead + corr

    def F(self, y):
        y = _nonneg(y)
        s = self.sigma
        if not self.saturated:
            return y ** (s + 1) / (s + 1)
        # int_0^y z^s / (1 + (d z)^s) dz, with no cancellation at small y
        b = 1.0 + 1.0 / s
        return y ** (s + 1) / (s + 1) * special.hyp2f1(1.0, b, b + 1.0, -((self.delta * y) ** s))

    def G(self, y):
        y = _nonneg(y)
        if not self.saturated:
            return self.sigma * y ** (self.sigma + 1) / (self.sigma + 1)
        return y * self.f(y) - self.F(y)

    def dG(self, y):
        return _nonneg(y) * self.df(y)

    def d2F(self, y):
        return self.df(y)

    def d2G(self, y):
        y = _nonneg(y)
        return self.df(y) + y * self.d2f(y)

    def __call__(self, which: str, y):
        if which not in WHICH:
            raise ValueError(f"unknown evaluator {which!r}; choose from {WHICH}")
        return getattr(self, which)(y)

    def F_quad(self, y: float) -> float:
        """Adaptive-quadrature primitive, used to cross-check the closed form."""
        y = float(_nonneg(y))
        val, _ = integrate.quad(self.f, 0.0, y, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val


def _nonneg(y):
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0):
        raise ValueError("nonlinearity evaluators are defined for y >= 0 only")
    return arr if arr.ndim else float(arr)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def taylor_remainder(second_derivative, rho_p, rho, *, adaptive=False):
    """``(rho_p - rho)^2 * int_0^1 (1 - t) g''(rho + t (rho_p - rho)) dt``.

    This is the Bregman remainder ``g(rho_p) - g(rho) - (rho_p - rho) g'(rho)``
    written without the cancellation of the difference form. Fixed Gauss-Legendre
    is exact for the polynomial (unsaturated) case; ``adaptive`` switches to
    scipy's QUADPACK per pair.
    """
    rho_p = np.asarray(rho_p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    d = rho_p - rho
    if not adaptive:
        pts = rho[..., None] + _GL_X * d[..., None]
        integral = np.sum(_GL_W * (1 - _GL_X) * second_derivative(pts), axis=-1)
        return d**2 * integral
    out = np.empty(np.broadcast(rho_p, rho).shape)
    for idx, (a, b) in enumerate(zip(np.broadcast_to(rho, out.shape).ravel(),
                                     np.broadcast_to(d, out.shape).ravel())):
        val, _ = integrate.quad(lambda t: (1 - t) * second_derivative(a + t * b), 0.0, 1.0,
                                epsabs=0.0, epsrel=1e-12, limit=200)
        out.flat[idx] = b * b * val
    return out
