"""Limit WKB system in symmetric-hyperbolic variables.

Unknowns ``v = grad(phi)`` and ``u = a**sigma`` solve

    v_t + v . grad v + grad |u|^2 = 0,        v(0) = 0
    u_t + v . grad u + (sigma/2) u div v = 0, u(0) = a0**sigma

and, with ``v`` known, the amplitude and phase follow from

    a_t + v . grad a + (1/2) a div v = 0,     a(0) = a0
    phi_t = -|v|^2 / 2 - |u|^2,               phi(0) = 0.

All four are advanced together with classical RK4; spatial derivatives are
spectral and products are filtered with the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid


class HorizonError(RuntimeError):
    """The smoothness monitor tripped before the requested time."""


class CFLError(ValueError):
    pass


@dataclass
class LimitState:
    t: float
    v: list[np.ndarray] = field(repr=False)
    u: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.a) ** 2

    def speed(self) -> np.ndarray:
        return np.sqrt(sum(np.abs(c) ** 2 for c in self.v))


@dataclass
class LimitTrajectory:
    grid: Grid
    sigma: int
    states: list[LimitState]
    T_valid: float
    monitor: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def at(self, t: float, tol: float = 1e-12) -> LimitState:
        for s in self.states:
            if abs(s.t - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no retained state at t={t}")


def initial_state(grid: Grid, a0: np.ndarray, sigma: int) -> LimitState:
    a0 = np.array(grid.check(a0))
    zero = np.zeros(grid.shape)
    return LimitState(0.0, [zero.copy() for _ in range(grid.dim)], a0**sigma, a0.copy(), zero.copy())


class LimitSolver:
    def __init__(self, grid: Grid, sigma: int, dealias: bool = True, cfl: float = 0.5):
        if int(sigma) != sigma or sigma < 1:
            raise ValueError(f"sigma must be an integer >= 1, got {sigma}")
        self.grid = grid
        self.sigma = int(sigma)
        self.cfl = cfl
        self._mask = grid.dealias_mask() if dealias else None

    def _filter(self, f):
        if self._mask is None:
            return f
        out = self.grid.ifft(self._mask * self.grid.fft(f))
        return out.real if np.isrealobj(f) else out

    def rhs(self, state: LimitState):
        """Time derivatives ``(v_t, u_t, a_t, phi_t)`` at ``state``."""
        g, sig = self.grid, self.sigma
        v, u, a = state.v, state.u, state.a
        div_v = g.divergence(v)
        u_sq = np.abs(u) ** 2
        grad_u_sq = g.gradient(self._filter(u_sq))
        dv = []
        for j in range(g.dim):
            grad_vj = g.gradient(v[j])
            adv = sum(v[i] * grad_vj[i] for i in range(g.dim))
            dv.append(-self._filter(adv) - grad_u_sq[j])
        grad_u = g.gradient(u)
        du = -self._filter(sum(vi * gi for vi, gi in zip(v, grad_u)) + 0.5 * sig * u * div_v)
        grad_a = g.gradient(a)
        da = -self._filter(sum(vi * gi for vi, gi in zip(v, grad_a)) + 0.5 * a * div_v)
        dphi = -self._filter(0.5 * sum(np.abs(c) ** 2 for c in v) + u_sq)
        return dv, du, da, dphi

    def max_dt(self, state: LimitState) -> float:
        speed = float(np.max(state.speed())) + 2.0 * float(np.max(np.abs(state.u)))
        return self.cfl * self.grid.dx / max(speed, 1e-300)

    def advance(self, state: LimitState, dt: float) -> LimitState:
        if dt > self.max_dt(state) * (1 + 1e-12):
            raise CFLError(f"dt={dt:.3g} exceeds the advective limit {self.max_dt(state):.3g}")

        def combine(base, incr, c):
            dv, du, da, dphi = incr
            return LimitState(base.t, [bv + c * x for bv, x in zip(base.v, dv)],
                              base.u + c * du, base.a + c * da, base.phi + c * dphi)

        k1 = self.rhs(state)
        k2 = self.rhs(combine(state, k1, 0.5 * dt))
        k3 = self.rhs(combine(state, k2, 0.5 * dt))
        k4 = self.rhs(combine(state, k3, dt))
        w = dt / 6.0

        def mix(i):
            if i == 0:
                return [state.v[j] + w * (k1[0][j] + 2 * k2[0][j] + 2 * k3[0][j] + k4[0][j])
                        for j in range(self.grid.dim)]
            base = (None, state.u, state.a, state.phi)[i]
            return base + w * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])

        return LimitState(state.t + dt, mix(0), mix(1), mix(2), mix(3))

    def monitor(self, state: LimitState) -> float:
        return smoothness_monitor(self.grid, state)

    def solve(self, a0: np.ndarray, sample_times, t_max: float | None = None,
              monitor_factor: float = 5.0, dt: float | None = None,
              strict: bool = True) -> LimitTrajectory:
        """Integrate to each sample time, stopping when the monitor trips.

        ``T_valid`` is the last time before ``monitor > monitor_factor * monitor(0)``
        (or ``t_max``). With ``strict``, a sample beyond ``T_valid`` raises
        :class:`HorizonError`; otherwise the trajectory is truncated there.
        """
        times = sorted(float(t) for t in sample_times)
        t_max = times[-1] if t_max is None else t_max
        state = initial_state(self.grid, a0, self.sigma)
        m0 = self.monitor(state)
        bound = monitor_factor * m0 if m0 > 0 else np.inf
        states, mons = [], []
        T_valid = t_max
        for target in times:
            tripped = False
            while state.t < target - 1e-14:
                h = min(dt or np.inf, 0.9 * self.max_dt(state), target - state.t)
                nxt = self.advance(state, h)
                if self.monitor(nxt) > bound:
                    T_valid = state.t
                    tripped = True
                    break
                state = nxt
            if tripped:
                if strict:
                    raise HorizonError(f"smoothness monitor exceeded {bound:.3g} at t={T_valid:.4g} "
                                       f"before sample t={target:.4g}")
                break
            state.t = target
            states.append(state)
            mons.append(self.monitor(state))
        return LimitTrajectory(self.grid, self.sigma, states, T_valid, mons)


def smoothness_monitor(grid: Grid, state: LimitState) -> float:
    """``max_j ||grad v_j||_inf + ||grad u||_inf``."""
    gv = max(float(np.max(np.abs(c))) for comp in state.v for c in grid.gradient(comp))
    gu = max(float(np.max(np.abs(c))) for c in grid.gradient(state.u))
    return gv + gu


def find_T_valid(grid: Grid, a0: np.ndarray, sigma: int, t_max: float = 5.0,
                 monitor_factor: float = 5.0, probe_dt: float = 0.01) -> float:
    solver = LimitSolver(grid, sigma)
    times = np.arange(probe_dt, t_max + 0.5 * probe_dt, probe_dt)
    traj = solver.solve(a0, times, t_max=t_max, monitor_factor=monitor_factor, strict=False)
    return traj.T_valid


def muk_consistency(traj: LimitTrajectory) -> float:
    """``max_t ||u - a^sigma|| / ||u||`` over retained states."""
    g, worst = traj.grid, 0.0
    for s in traj.states:
        nu = g.l2_norm(s.u)
        if nu == 0:
            continue
        worst = max(worst, g.l2_norm(s.u - s.a**traj.sigma) / nu)
    return worst


def phase_gradient_defect(traj: LimitTrajectory) -> float:
    """``max_t ||grad(phi) - v|| / max(||v||, tiny)``: phi and v are integrated independently."""
    g, worst = traj.grid, 0.0
    for s in traj.states:
        gp = g.gradient(s.phi)
        num = np.sqrt(sum(g.l2_norm(p - c) ** 2 for p, c in zip(gp, s.v)))
        den = np.sqrt(sum(g.l2_norm(c) ** 2 for c in s.v))
        if den > 0:
            worst = max(worst, num / den)
    return worst


def limit_energy(grid: Grid, state: LimitState, sigma: int) -> float:
    """``(1/2) int |v|^2 |a|^2 + (1/(sigma+1)) int |a|^(2 sigma + 2)``."""
    rho = state.rho
    kin = 0.5 * grid.integrate(sum(np.abs(c) ** 2 for c in state.v) * rho)
    pot = grid.integrate(rho ** (sigma + 1)) / (sigma + 1)
    return float(kin + pot)


def curl_defect(grid: Grid, state: LimitState) -> float:
    if grid.dim == 1:
        return 0.0
    gx = grid.gradient(state.v[1])[0]
    gy = grid.gradient(state.v[0])[1]
    return grid.l2_norm(gx - gy)


def resample(grid: Grid, f: np.ndarray, target: Grid) -> np.ndarray:
    """Trigonometric interpolation of ``f`` onto ``target`` (same box, finer or equal N)."""
    if target.L != grid.L or target.dim != grid.dim:
        raise ValueError("resample needs the same box and dimension")
    if target.N < grid.N:
        raise ValueError("resample only refines")
    if target.N == grid.N:
        return np.array(f, copy=True)
    F = np.fft.fftshift(grid.fft(f))
    pad = (target.N - grid.N) // 2
    F = np.pad(F, [(pad, pad)] * grid.dim)
    if grid.dim == 1:
        # split the old Nyquist mode between +/- frequencies
        F[pad] *= 0.5
        F[pad + grid.N] = F[pad]
    out = np.fft.ifftn(np.fft.ifftshift(F)) * (target.N / grid.N) ** grid.dim
    return out.real if np.isrealobj(f) else out
