"""Gaussian wave-packet (FBI) transform and its commutator estimates, in 1D.

    W u(x, xi) = c eps^(-3/4) int exp(i (x - y) xi / eps - (x - y)^2 / (2 eps)) u(y) dy,
    c = 2^(-1/2) pi^(-3/4)

For each momentum node the y-integral is a convolution on the periodic x-grid.
It is evaluated with the exact Fourier transform of the Gaussian kernel, so the
result is the transform of the trigonometric interpolant of ``u``; the sum over
``x`` is then exact by Parseval and the only quadrature error is the rectangle
rule in ``xi`` plus the certified tail outside ``[-Xi, Xi]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .spectral import Grid


class WavePacketConfigError(ValueError):
    pass


def normalization(dim: int = 1) -> float:
    return 2.0 ** (-dim / 2) * np.pi ** (-3 * dim / 4)


@dataclass(frozen=True)
class WavePacketConfig:
    eps: float
    xi_extent: float
    xi_points: int
    tail_tol: float = 1e-10

    def __post_init__(self):
        if not self.eps > 0:
            raise WavePacketConfigError(f"eps must be positive, got {self.eps}")
        if not self.xi_extent > 0 or self.xi_points < 2:
            raise WavePacketConfigError("momentum grid needs a positive extent and >= 2 points")

    @property
    def c_n(self) -> float:
        return normalization(1)

    @property
    def dxi(self) -> float:
        return 2 * self.xi_extent / self.xi_points

    @property
    def xi(self) -> np.ndarray:
        return -self.xi_extent + self.dxi * np.arange(self.xi_points)

    def refine(self, factor: int = 2) -> "WavePacketConfig":
        return WavePacketConfig(self.eps, self.xi_extent, self.xi_points * factor, self.tail_tol)

    @classmethod
    def auto(cls, grid: Grid, u: np.ndarray, eps: float, v: np.ndarray | None = None,
             spacing: float = 0.5, tail_tol: float = 1e-10) -> "WavePacketConfig":
        """Momentum grid sized from ``u``'s spectrum and ``v``.

        Extent ``max(4 max|v|, eps k_u + 8 sqrt(eps))`` where ``k_u`` bounds the
        frequencies carrying ``u``'s mass; spacing ``spacing * sqrt(eps)``.
        ``spacing = 1`` is the coarse reference level (rectangle-rule defect near
        ``2 exp(-pi^2)``); the default halves it, which is beyond double precision.
        """
        power = np.abs(grid.fft(u)) ** 2
        live = power > 1e-20 * power.max() if power.max() > 0 else np.zeros_like(power, bool)
        k_u = float(np.max(np.abs(grid.xi1d[live]))) if live.any() else 0.0
        extent = eps * k_u + 8.0 * np.sqrt(eps)
        if v is not None:
            extent = max(extent, 4.0 * float(np.max(np.abs(v))))
        dxi = spacing * np.sqrt(eps)
        points = int(np.ceil(2 * extent / dxi))
        points += points % 2
        return cls(eps, extent, points, tail_tol)


@dataclass(frozen=True)
class PhaseSpaceField:
    x_grid: Grid
    cfg: WavePacketConfig
    values: np.ndarray  # shape (xi_points, N)

    @property
    def xi(self) -> np.ndarray:
        return self.cfg.xi

    def norm(self) -> float:
        return phase_space_norm(self.x_grid, self.cfg, self.values)


def phase_space_norm(grid: Grid, cfg: WavePacketConfig, values: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * grid.dx * cfg.dxi))


def tail_fraction(grid: Grid, u: np.ndarray, cfg: WavePacketConfig) -> float:
    """Fraction of ``||W u||^2`` lying outside ``|xi| <= Xi``.

    The xi-marginal of ``|W u|^2`` is the spectrum of ``u`` (at ``eps k``)
    smeared by a Gaussian of variance ``eps/2``, so the tail is a sum of erfc terms.
    """
    power = np.abs(grid.fft(u)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    centre = cfg.eps * grid.xi1d
    scale = np.sqrt(cfg.eps)  # sqrt(2 * eps/2)
    hi = 0.5 * special.erfc((cfg.xi_extent - centre) / scale)
    lo = 0.5 * special.erfc((cfg.xi_extent + centre) / scale)
    return float(np.sum(power * (hi + lo)) / total)


def wp_transform(grid: Grid, u: np.ndarray, cfg: WavePacketConfig, check_tail: bool = True) -> PhaseSpaceField:
    if grid.dim != 1:
        raise WavePacketConfigError("the wave-packet transform is implemented for dim = 1")
    u = np.asarray(grid.check(u), dtype=complex)
    if check_tail:
        frac = tail_fraction(grid, u, cfg)
        if frac > cfg.tail_tol:
            raise WavePacketConfigError(
                f"momentum extent {cfg.xi_extent:.3g} leaves tail fraction {frac:.2e} > {cfg.tail_tol:.0e}")
    eps = cfg.eps
    U = np.fft.fft(u)
    k = grid.xi1d
    # exact kernel transform: sqrt(2 pi eps) exp(-eps (k - xi/eps)^2 / 2)
    mult = np.sqrt(2 * np.pi * eps) * np.exp(-0.5 * eps * (k[None, :] - cfg.xi[:, None] / eps) ** 2)
    values = cfg.c_n * eps ** (-0.75) * np.fft.ifft(mult * U[None, :], axis=1)
    return PhaseSpaceField(grid, cfg, values)


def isometry_defect(grid: Grid, u: np.ndarray, cfg: WavePacketConfig) -> float:
    nu = grid.l2_norm(u)
    return abs(wp_transform(grid, u, cfg).norm() - nu) / nu


@dataclass(frozen=True)
class CommutatorReport:
    eps: float
    s: float
    residuals: tuple[float, float, float]
    envelopes: tuple[float, float, float]

    @property
    def constants(self) -> tuple[float, float, float]:
        return tuple(r / e if e > 0 else 0.0 for r, e in zip(self.residuals, self.envelopes))


def lipschitz_constant(grid: Grid, v: np.ndarray) -> float:
    return float(np.max(np.abs(grid.gradient(np.asarray(v, dtype=float))[0])))


def commutator_residuals(grid: Grid, u: np.ndarray, v: np.ndarray, s: float,
                         cfg: WavePacketConfig) -> CommutatorReport:
    """The three commutator defects of ``W`` against rough symbols.

    1. ``|v(x)|^s W u - W(|v|^s u)``
    2. ``|xi|^s W u - W(|eps D|^s u)``
    3. ``(i xi - i v(x)) W u - W((eps grad - i v) u)``

    Envelopes are ``eps^(s/2) ||grad v||^s ||u||``, ``eps^(s/2) ||u||`` and
    ``eps^(1/2) (1 + ||grad v||) ||u||``, so ``constants`` are the measured K.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=float)
    eps = cfg.eps
    Wu = wp_transform(grid, u, cfg).values
    xi = cfg.xi[:, None]
    vs = np.abs(v) ** s
    norm = lambda f: phase_space_norm(grid, cfg, f)  # noqa: E731

    if s == 0:
        r1 = r2 = 0.0
    else:
        r1 = norm(vs[None, :] * Wu - wp_transform(grid, vs * u, cfg, check_tail=False).values)
        r2 = norm(np.abs(xi) ** s * Wu - wp_transform(grid, grid.frac_deriv(u, s, eps), cfg, check_tail=False).values)
    cov = grid.gradient(u, eps)[0] - 1j * v * u
    r3 = norm(1j * (xi - v[None, :]) * Wu - wp_transform(grid, cov, cfg, check_tail=False).values)

    nu = grid.l2_norm(u)
    lip = lipschitz_constant(grid, v)
    env = (eps ** (s / 2) * lip**s * nu, eps ** (s / 2) * nu, eps**0.5 * (1 + lip) * nu)
    return CommutatorReport(eps, s, (r1, r2, r3), env)


def elementary_inequality_check(x, y, s: float) -> bool:
    """``|x|^s <= |y|^s + |x - y|^s`` for every row pair (vectors along the last axis)."""
    return bool(np.all(elementary_violations(x, y, s) == 0))


def elementary_violations(x, y, s: float, rtol: float = 1e-12) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    nx = np.linalg.norm(x, axis=-1)
    ny = np.linalg.norm(y, axis=-1)
    nd = np.linalg.norm(x - y, axis=-1)
    lhs = nx**s
    rhs = ny**s + nd**s
    return (lhs > rhs * (1 + rtol)).astype(int)


@dataclass(frozen=True)
class MicrolocalReport:
    lhs: float  # || |v|^k u_eps ||
    frac_term: float  # || |eps D|^k u_eps ||
    covariant_term: float  # ||(eps grad - i v) u||^k ||u||^(1-k)
    remainder_envelope: float  # eps^(k/2) (1 + ||grad v||) ||u||
    target: float  # || |v|^k a ||
    holder_bridge: float  # || |v|^(2k) ||_{L^(1+1/sigma)} || rho_eps - rho ||_{L^(sigma+1)}
    weight_branch: str

    @property
    def measured_K(self) -> float:
        """Smallest K making the lower-bound inequality hold (0 when it holds without remainder)."""
        gap = self.lhs - self.frac_term - self.covariant_term
        return max(gap, 0.0) / self.remainder_envelope if self.remainder_envelope > 0 else 0.0


def microlocal_lower_bound(grid: Grid, u_eps: np.ndarray, v, a: np.ndarray, k: float,
                           eps: float, sigma: int) -> MicrolocalReport:
    if not 0.0 < k <= 1.0:
        raise ValueError(f"k must lie in (0, 1], got {k}")
    u_eps = np.asarray(u_eps, dtype=complex)
    speed = np.sqrt(sum(np.abs(c) ** 2 for c in v))
    lhs = grid.l2_norm(speed**k * u_eps)
    frac = grid.sobolev_seminorm(u_eps, k, eps)
    grads = grid.gradient(u_eps, eps)
    cov = np.sqrt(sum(grid.l2_norm(gj - 1j * vj * u_eps) ** 2 for gj, vj in zip(grads, v)))
    nu = grid.l2_norm(u_eps)
    cov_term = cov**k * nu ** (1 - k)
    lip = max(float(np.max(np.abs(c))) for vj in v for c in grid.gradient(np.asarray(vj, dtype=float)))
    env = eps ** (k / 2) * (1 + lip) * nu
    target = grid.l2_norm(speed**k * a)
    p = 1 + 1 / sigma
    q = sigma + 1
    lp = float(grid.integrate(speed ** (2 * k * p))) ** (1 / p)
    lq = float(grid.integrate(np.abs(np.abs(u_eps) ** 2 - np.abs(a) ** 2) ** q)) ** (1 / q)
    branch = "sobolev" if k >= sigma / (sigma + 1) else "weighted"
    return MicrolocalReport(lhs, frac, cov_term, env, target, lp * lq, branch)
