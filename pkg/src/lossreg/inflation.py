"""Isotropic rescaling and the Sobolev norm-inflation experiment.

Data ``phi_h(x) = h^(s - n/2) a0(x/h)`` for the eps = 1 equation are rescaled to
the semiclassical problem with ``eps = h^(sigma (s_c - s))`` by

    u_eps(t, x) = h^(n/2 - s) psi_h(h^2 eps t, h x),

under which ``||psi_h(t)||_{H^m dot} = h^(s-m) ||u_eps(t / (h^2 eps))||_{H^m dot}``.
All production norms are computed in the ``u_eps`` frame and converted with
this identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .limit import LimitTrajectory
from .nls import NlsConfig, mass, run
from .spectral import Grid


class ScalingError(ValueError):
    """A scaling parameter violates a required inequality."""


class HorizonError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScalingParams:
    n: int
    sigma: int
    s: float
    h: float = 1.0
    log_damping: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ScalingError(f"dimension n must be >= 1, got {self.n}")
        if int(self.sigma) != self.sigma or self.sigma < 1:
            raise ScalingError(f"sigma must be an integer >= 1, got {self.sigma}")
        if not self.s_c > 0:
            raise ScalingError(f"s_c = n/2 - 1/sigma = {self.s_c:.6g} violates s_c > 0")
        if not 0 < self.s < self.s_c:
            raise ScalingError(f"s = {self.s:.6g} violates 0 < s < s_c = {self.s_c:.6g}")
        if not 0 < self.h <= 1:
            raise ScalingError(f"h = {self.h:.6g} violates 0 < h <= 1")
        if self.log_damping and self.h >= 1:
            raise ScalingError("log damping |log h|^-1 needs h < 1")

    @property
    def s_c(self) -> float:
        return critical_exponent(self.n, self.sigma)

    @property
    def s_sob(self) -> float:
        return 0.5 * self.n * self.sigma / (self.sigma + 1)

    @property
    def eps(self) -> float:
        return self.h ** (self.sigma * (self.s_c - self.s))

    @property
    def gain(self) -> float:
        """``1 + sigma (s_c - s)``: the loss rate per derivative."""
        return 1 + self.sigma * (self.s_c - self.s)

    @property
    def damping(self) -> float:
        return 1.0 / abs(math.log(self.h)) if self.log_damping else 1.0

    def with_h(self, h: float) -> "ScalingParams":
        return ScalingParams(self.n, self.sigma, self.s, h, self.log_damping)


def critical_exponent(n: int, sigma: int) -> float:
    return n / 2 - 1 / sigma


def predict_exponent(p: ScalingParams, k: float) -> tuple[float, float]:
    """``(threshold, exponent)`` with threshold ``s / gain`` and exponent ``s - k gain``."""
    return p.s / p.gain, p.s - k * p.gain


def admissible_h(max_level: int = 12) -> list[float]:
    return [2.0**-j for j in range(max_level + 1)]


def _check_h(h: float) -> int:
    j = -math.log2(h)
    if abs(j - round(j)) > 1e-12 or round(j) < 0:
        raise ScalingError(f"h = {h!r} is not grid compatible; admissible values are 2^-j, "
                           f"e.g. {admissible_h(6)}")
    return int(round(j))


def psi_grid(p: ScalingParams, unit_grid: Grid) -> Grid:
    """Grid on which ``x/h`` lands on the unit grid's lattice (box shrunk by ``h``)."""
    _check_h(p.h)
    return Grid(unit_grid.dim, unit_grid.N, unit_grid.L * p.h)


def make_datum(p: ScalingParams, unit_grid: Grid, a0: np.ndarray) -> tuple[Grid, np.ndarray]:
    """``phi_h`` sampled on :func:`psi_grid`; node ``i`` carries ``h^(s - n/2) a0(x_i)``."""
    if unit_grid.dim != p.n:
        raise ScalingError(f"grid dimension {unit_grid.dim} does not match n = {p.n}")
    g = psi_grid(p, unit_grid)
    return g, p.damping * p.h ** (p.s - p.n / 2) * np.asarray(unit_grid.check(a0))


def sobolev_norm(grid: Grid, f: np.ndarray, s: float) -> float:
    """Inhomogeneous ``H^s`` norm ``||(1 + |xi|^2)^(s/2) f_hat||``."""
    F = grid.fft(f)
    total = np.sum((1 + grid.xi_sq) ** s * np.abs(F) ** 2)
    return float(np.sqrt(grid.cell_volume * total / grid.N**grid.dim))


def semiclassical_datum(p: ScalingParams, a0: np.ndarray) -> np.ndarray:
    """Initial datum of the ``u_eps`` problem: ``a0`` (times the log damping if enabled)."""
    return p.damping * np.asarray(a0)


def psi_to_u(p: ScalingParams, psi: np.ndarray) -> np.ndarray:
    """Pull back samples from the psi grid (box ``hL``) to the u grid (box ``L``)."""
    return p.h ** (p.n / 2 - p.s) * np.asarray(psi)


def frame_map_check(p: ScalingParams, unit_grid: Grid, a0: np.ndarray, t: float,
                    dt: float, steps: int | None = None) -> float:
    """Evolve both frames and compare the pulled-back psi with u at ``u``-time ``t``.

    ``dt`` is the u-frame step; the psi frame uses ``h^2 eps dt``. Returns the
    relative L2 discrepancy at time ``t`` (0 when ``t == 0``).
    """
    if t < 0 or dt <= 0:
        raise ScalingError("frame map check needs t >= 0 and dt > 0")
    n_steps = steps if steps is not None else int(round(t / dt))
    if abs(n_steps * dt - t) > 1e-12 * max(1.0, t):
        raise ScalingError(f"time misalignment: t = {t} is not a multiple of dt = {dt}")
    eps = p.eps
    gu = unit_grid
    gpsi, phi = make_datum(p, unit_grid, a0)
    u0 = semiclassical_datum(p, a0)
    if n_steps == 0:
        return float(gu.l2_norm(psi_to_u(p, phi) - u0) / gu.l2_norm(u0))
    tpsi = p.h**2 * eps * t
    u = run(NlsConfig(eps=eps, sigma=p.sigma, dt=dt, t_final=t), gu, u0, [t])[0].u
    psi = run(NlsConfig(eps=1.0, sigma=p.sigma, dt=p.h**2 * eps * dt, t_final=tpsi), gpsi, phi, [tpsi])[0].u
    return float(gu.l2_norm(psi_to_u(p, psi) - u) / gu.l2_norm(u))


def find_tau(traj: LimitTrajectory, k_list=(0.5, 1.0), fraction: float = 0.25) -> float:
    """First retained time at which every ``I_k(t) = int |v|^(2k) |a|^2`` reaches
    ``fraction`` of its maximum over the trajectory."""
    g = traj.grid
    curves = np.array([[decolle_integral(g, s, k) for s in traj.states] for k in k_list])
    peaks = curves.max(axis=1, keepdims=True)
    if np.any(peaks <= 0):
        raise HorizonError("I_k vanishes on the whole trajectory; increase T_valid or the amplitude")
    ok = np.all(curves >= fraction * peaks, axis=0)
    if not ok.any():
        raise HorizonError("no retained time reaches the requested fraction; increase T_valid or amplitude")
    return float(traj.states[int(np.argmax(ok))].t)


def decolle_integral(grid: Grid, state, k: float) -> float:
    speed = state.speed()
    w = speed ** (2 * k) if k > 0 else np.ones_like(speed)
    return float(grid.integrate(w * np.abs(state.a) ** 2))


@dataclass
class InflationRow:
    h: float
    eps: float
    k: float
    norm: float  # ||psi_h(t_h)||_{H^k dot}
    eps_norm: float  # || |eps D|^k u_eps(tau) ||
    t_h: float
    predicted_exp: float
    datum_norm: float  # ||phi_h||_{H^s}
    local_slope: float = float("nan")


@dataclass
class InflationReport:
    params: ScalingParams
    tau: float
    rows: list[InflationRow]
    fits: dict = field(default_factory=dict)
    mass_drift: dict = field(default_factory=dict)  # h -> relative mass change over [0, tau]

    def by_k(self, k: float) -> list[InflationRow]:
        return sorted((r for r in self.rows if r.k == k), key=lambda r: -r.h)

    def fitted_exponent(self, k: float) -> float:
        rows = self.by_k(k)
        return float(np.polyfit(np.log([r.h for r in rows]), np.log([r.norm for r in rows]), 1)[0])


def run_inflation(base: ScalingParams, h_list, k_list, tau: float, unit_grid: Grid, a0: np.ndarray,
                  dt_factor: float = 0.1) -> InflationReport:
    """For each ``h``: solve the u-frame problem to ``tau`` and convert norms to the psi frame."""
    a0 = np.asarray(a0)
    rows = []
    drift = {}
    for h in sorted(h_list, reverse=True):
        p = base.with_h(h)
        _check_h(h)
        eps = p.eps
        u0 = semiclassical_datum(p, a0)
        dt = dt_factor * eps / max(float(np.max(np.abs(u0))) ** (2 * p.sigma), 1e-300)
        start, end = run(NlsConfig(eps=eps, sigma=p.sigma, dt=dt, t_final=tau), unit_grid, u0, [0.0, tau])
        drift[h] = abs(mass(end) / mass(start) - 1)
        u = end.u
        gpsi, phi = make_datum(p, unit_grid, a0)
        datum = sobolev_norm(gpsi, phi, p.s)
        for k in k_list:
            q = unit_grid.homogeneous_norm(u, k, eps)
            norm = h ** (p.s - k) * eps ** (-k) * q
            rows.append(InflationRow(h, eps, k, norm, q, tau * h**2 * eps,
                                     predict_exponent(p, k)[1], datum))
    report = InflationReport(base, tau, rows, mass_drift=drift)
    for k in k_list:
        ordered = report.by_k(k)
        for prev, cur in zip(ordered, ordered[1:]):
            cur.local_slope = math.log(cur.norm / prev.norm) / math.log(cur.h / prev.h)
        report.fits[k] = {"fitted": report.fitted_exponent(k) if len(ordered) > 1 else float("nan"),
                          "predicted": predict_exponent(base, k)[1],
                          "threshold": predict_exponent(base, k)[0]}
    return report
