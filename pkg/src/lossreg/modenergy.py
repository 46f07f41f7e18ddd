"""Modulated energy of an NLS solution relative to the limit WKB state.

    K(t) = (1/2) || (eps grad - i v) u_eps ||^2
    P(t) = int F(rho_eps) - F(rho) - (rho_eps - rho) f(rho)
    H(t) = K + P

``P`` is a Bregman remainder of the convex primitive ``F``; it is evaluated in
its integral (Taylor) form so nothing cancels when ``rho_eps`` is close to ``rho``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .nonlinearity import NonlinearityFns, taylor_remainder
from .spectral import Grid


@dataclass(frozen=True)
class HydroFields:
    rho: np.ndarray
    J: list[np.ndarray]


@dataclass(frozen=True)
class EnergyReport:
    t: float
    H: float
    K: float
    P: float
    lower_bound: float
    covariant_sq: float  # || (eps grad - i v) u ||^2
    density_term: float  # int (rho_eps - rho)^2 (rho_eps^(s-1) + rho^(s-1))

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def error_quantity(self) -> float:
        return self.covariant_sq + self.density_term


def hydro(grid: Grid, u: np.ndarray, eps: float) -> HydroFields:
    """Density ``|u|^2`` and current ``Im(eps conj(u) grad u)``."""
    u = np.asarray(grid.check(u), dtype=complex)
    grads = grid.gradient(u, eps)
    return HydroFields(np.abs(u) ** 2, [np.imag(np.conj(u) * gj) for gj in grads])


def convexity_constant(sigma: int) -> float:
    """Constant ``c`` with ``F-remainder >= c (rho'-rho)^2 (rho'^(s-1) + rho^(s-1))``.

    From the Taylor form and ``((1-t)a + t b)^(s-1) >= (1-t)^(s-1) a^(s-1) + t^(s-1) b^(s-1)``
    (valid for ``s >= 2``), the two Beta integrals give ``1/(s+1)`` and ``s/(s+1)``.
    At ``s = 1`` the weight is the constant 2 while the remainder is ``d^2/2``.
    """
    return 0.25 if sigma == 1 else 1.0 / (sigma + 1)


def covariant_derivative(grid: Grid, u: np.ndarray, v, eps: float) -> list[np.ndarray]:
    grads = grid.gradient(np.asarray(u, dtype=complex), eps)
    return [gj - 1j * vj * u for gj, vj in zip(grads, v)]


def modulated_energy(grid: Grid, u_eps: np.ndarray, v, a: np.ndarray, eps: float,
                     fns: NonlinearityFns, t: float = 0.0) -> EnergyReport:
    cov = covariant_derivative(grid, u_eps, v, eps)
    cov_sq = float(sum(grid.integrate(np.abs(c) ** 2) for c in cov))
    rho_e = np.abs(u_eps) ** 2
    rho = np.abs(a) ** 2
    P = float(grid.integrate(taylor_remainder(fns.d2F, rho_e, rho)))
    s = fns.sigma
    dens = float(grid.integrate((rho_e - rho) ** 2 * (rho_e ** (s - 1) + rho ** (s - 1))))
    K = 0.5 * cov_sq
    lb = K + convexity_constant(s) * dens
    return EnergyReport(t, K + P, K, P, lb, cov_sq, dens)


def bregman(fns: NonlinearityFns, which: str, rho_p, rho) -> np.ndarray:
    """``g(rho_p) - g(rho) - (rho_p - rho) g'(rho)`` for ``g`` = ``F`` or ``G``.

    Pure powers use the (exact) Gauss-Legendre Taylor form. For saturated
    functions ``G''`` changes sign at ``y = 1/delta``; adaptive quadrature of the
    Taylor form is used unless a well separated pair straddles that point, where
    the integral cancels and the closed-form difference (which does not) is used.
    """
    g, dg, d2g = (fns.F, fns.f, fns.d2F) if which == "F" else (fns.G, fns.dG, fns.d2G)
    rho_p = np.asarray(rho_p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if not fns.saturated:
        return taylor_remainder(d2g, rho_p, rho)
    rho_p, rho = np.broadcast_arrays(rho_p, rho)
    d = rho_p - rho
    y_star = 1.0 / fns.delta
    far = (np.abs(d) > 0.25 * np.maximum(rho_p, rho)) & (np.minimum(rho_p, rho) < y_star) \
        & (np.maximum(rho_p, rho) > y_star)
    out = np.empty(rho.shape)
    if far.any():
        a, b = rho_p[far], rho[far]
        out[far] = g(a) - g(b) - (a - b) * dg(b)
    if (~far).any():
        out[~far] = taylor_remainder(d2g, rho_p[~far], rho[~far], adaptive=True)
    return out


def remainder_comparison(fns: NonlinearityFns, rho_p, rho):
    """Bregman remainders of ``G`` and ``F`` between ``rho`` and ``rho_p`` and their ratio.

    Where both remainders vanish (``rho_p == rho``) the ratio is reported by
    continuity, i.e. as ``G''(rho)/F''(rho)`` (equal to ``sigma`` when ``delta = 0``).
    Arrays are accepted elementwise.
    """
    rho_p = np.asarray(rho_p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho_p < 0) or np.any(rho < 0):
        raise ValueError("densities must be >= 0")
    g_rem = bregman(fns, "G", rho_p, rho)
    f_rem = bregman(fns, "F", rho_p, rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(f_rem != 0, g_rem / np.where(f_rem != 0, f_rem, 1.0), np.nan)
    degenerate = ~np.isfinite(ratio)
    if np.any(degenerate):
        limit = _limit_ratio(fns, np.broadcast_to(rho, ratio.shape)[degenerate])
        ratio = np.array(ratio, dtype=float)
        ratio[degenerate] = limit
    if ratio.ndim == 0:
        return float(g_rem), float(f_rem), float(ratio)
    return g_rem, f_rem, ratio


def _limit_ratio(fns: NonlinearityFns, rho):
    if not fns.saturated:
        return np.full(np.shape(rho), float(fns.sigma))
    y = (fns.delta * np.asarray(rho)) ** fns.sigma
    # G''/F'' = 1 + y f''/f' = 1 + (s-1-(s+1) w)/(1+w), w = (delta y)^s
    return 1.0 + (fns.sigma - 1 - (fns.sigma + 1) * y) / (1 + y)


def h_profile(sigma: int):
    """``h(y) = y^s / (1 + y^s)`` with its exact first derivative."""
    def h(y):
        y = np.asarray(y, dtype=float)
        return y**sigma / (1 + y**sigma)

    def dh(y):
        y = np.asarray(y, dtype=float)
        return sigma * y ** (sigma - 1) / (1 + y**sigma) ** 2

    return h, dh


def h_identity_check(sigma: int, y, rel_step: float = 1e-5):
    """Residual of ``y h'' - h' (s-1-(s+1) y^s)/(1+y^s)``, ``h''`` by central differences of ``h'``.

    Returns ``(residual, y*h'', rhs)``; the difference step is relative to ``y`` so
    a log sweep stays well conditioned. At ``y = 0`` the left side is 0.
    """
    _, dh = h_profile(sigma)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y < 0):
        raise ValueError("y must be >= 0")
    step = rel_step * np.where(y > 0, y, 1.0)
    d2 = (dh(y + step) - dh(np.abs(y - step))) / (2 * step)
    lhs = np.where(y > 0, y * d2, 0.0)
    rhs = dh(y) * (sigma - 1 - (sigma + 1) * y**sigma) / (1 + y**sigma)
    return lhs - rhs, lhs, rhs


def continuity_residual(grid: Grid, u_prev: np.ndarray, u: np.ndarray, u_next: np.ndarray,
                        dt: float, eps: float) -> float:
    """``|| (rho(t+dt) - rho(t-dt)) / (2 dt) + div J(t) ||_{L^1}`` from three consecutive snapshots."""
    drho = (np.abs(u_next) ** 2 - np.abs(u_prev) ** 2) / (2 * dt)
    J = hydro(grid, u, eps).J
    return float(grid.integrate(np.abs(drho + grid.divergence(J))))


@dataclass
class SweepReport:
    """Per-eps time series of the modulated energy against one limit trajectory."""

    T: float
    sigma: int
    eps_list: list[float]
    series: dict  # eps -> list[EnergyReport]
    slope: float = float("nan")
    intercept: float = float("nan")
    mass_drift: dict = field(default_factory=dict)
    energy_drift: dict = field(default_factory=dict)

    def sup(self, eps: float, attr: str = "error_quantity") -> float:
        return max(getattr(r, attr) for r in self.series[eps])

    def rows(self):
        for eps in self.eps_list:
            for r in self.series[eps]:
                yield (eps, r.t, r.H, r.K, r.P, r.lower_bound, r.covariant_sq, r.density_term)


SWEEP_COLUMNS = ("eps", "t", "H", "K", "P", "lower_bound", "thm41_component1", "thm41_component2")


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log y`` against ``log x``."""
    p = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(p[0]), float(p[1])


def theorem_og_sweep(eps_list, T: float, sigma: int, a0, N: int = 4096, L: float = 16.0,
                     limit_N: int = 2048, samples: int = 21, dt_factor: float = 0.1,
                     delta: float = 0.0) -> SweepReport:
    """sup over ``[0, T]`` of the covariant-plus-density quantity for each eps, and its log-log slope.

    ``a0`` is a callable profile sampled on both grids. The limit system is solved
    once on the (cheaper, smoother) limit grid and interpolated spectrally.
    """
    from .limit import LimitSolver, resample
    from .nls import DivergenceError, NlsConfig, energy, mass, run

    fns = NonlinearityFns(sigma, delta)
    gl = Grid(1, limit_N, L)
    g = Grid(1, N, L)
    times = np.linspace(0.0, T, samples)
    traj = LimitSolver(gl, sigma).solve(a0(gl.x1d), times)
    limits = [([resample(gl, s.v[0], g)], resample(gl, s.a, g)) for s in traj.states]
    u0 = np.asarray(a0(g.x1d), dtype=complex)
    amp = max(float(np.max(np.abs(u0))), 1.0)
    series, mdrift, edrift = {}, {}, {}
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    for eps in eps_list:
        cfg = NlsConfig(eps=eps, sigma=sigma, delta=delta, dt=dt_factor * eps / amp ** (2 * sigma), t_final=T)
        try:
            states = run(cfg, g, u0, times)
        except DivergenceError as exc:
            raise DivergenceError(exc.t, f"eps={eps:g}: {exc}") from exc
        series[eps] = [modulated_energy(g, st.u, v, a, eps, fns, st.t) for st, (v, a) in zip(states, limits)]
        m0, e0 = mass(states[0]), energy(states[0])
        mdrift[eps] = max(abs(mass(s) / m0 - 1) for s in states)
        edrift[eps] = max(abs(energy(s) / e0 - 1) for s in states)
    rep = SweepReport(T, sigma, eps_list, series, mass_drift=mdrift, energy_drift=edrift)
    rep.slope, rep.intercept = fit_slope(eps_list, [rep.sup(e) for e in eps_list])
    return rep


def gronwall_constant(report: SweepReport, attr: str = "H", c_max: float = 1e3) -> float:
    """Smallest single ``C`` with ``H(t) <= (H(0) + C t eps^2) e^(C t)`` for every eps and t."""

    def ok(C):
        for eps in report.eps_list:
            s = report.series[eps]
            h0 = getattr(s[0], attr)
            for r in s:
                if getattr(r, attr) > (h0 + C * r.t * eps**2) * np.exp(C * r.t) * (1 + 1e-12):
                    return False
        return True

    if ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > c_max:
            return float("inf")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi
