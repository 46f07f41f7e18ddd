"""Experiment drivers shared by the command line, scripts and acceptance tests.

Each driver takes a resolved :class:`~lossreg.config.RunConfig` and returns an
:class:`Outcome`: a labelled table, a JSON-ready summary, named assertions and
optional field dumps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import inflation as infl
from .config import RunConfig
from .limit import (LimitSolver, limit_energy, muk_consistency, phase_gradient_defect, resample,
                    smoothness_monitor)
from .modenergy import SWEEP_COLUMNS, fit_slope, gronwall_constant, theorem_og_sweep
from .nls import NlsConfig, energy, kinetic_energy, mass, run
from .spectral import Grid
from .wavepacket import (WavePacketConfig, commutator_residuals, elementary_violations,
                         isometry_defect, wp_transform)


@dataclass
class Check:
    name: str
    value: float
    lo: float = -math.inf
    hi: float = math.inf

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.lo <= self.value <= self.hi)

    def as_dict(self) -> dict:
        def bound(b):
            return None if math.isinf(b) else b
        return {"name": self.name, "value": self.value, "lo": bound(self.lo), "hi": bound(self.hi),
                "passed": self.passed}

    def line(self) -> str:
        rng = f"[{self.lo:g}, {self.hi:g}]"
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.6g} in {rng}"


@dataclass
class Outcome:
    header: tuple
    rows: list
    summary: dict
    checks: list[Check]
    fields: dict = field(default_factory=dict)  # name -> (grid, values)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


ROUNDOFF = 1e-15  # floor for defects that hit double precision


def gaussian(amplitude: float = 1.0):
    def a0(*xs):
        return amplitude * np.exp(-sum(x**2 for x in xs))
    return a0


def profile_on(grid: Grid, amplitude: float = 1.0) -> np.ndarray:
    return gaussian(amplitude)(*grid.coords)


class _Clock:
    def __init__(self):
        self.times = {}

    def __call__(self, name):
        clock = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                clock.times[name] = time.perf_counter() - self.t0

        return _Stage()


def _amp_dt(cfg: RunConfig, eps: float, amp: float) -> float:
    return cfg.dt_factor * eps / max(amp, 1.0) ** (2 * cfg.sigma)


def solve_nls(cfg: RunConfig) -> Outcome:
    clock = _Clock()
    g = Grid(cfg.n, cfg.N, cfg.L)
    u0 = profile_on(g, cfg.amplitude)
    nls = NlsConfig(eps=cfg.eps, sigma=cfg.sigma, delta=cfg.delta, potential=cfg.potential,
                    dt=_amp_dt(cfg, cfg.eps, cfg.amplitude), t_final=cfg.T, linear=cfg.linear)
    times = np.linspace(0.0, cfg.T, cfg.samples)
    with clock("nls"):
        states = run(nls, g, u0, times)
    m0, e0 = mass(states[0]), energy(states[0])
    rows = [(s.t, mass(s), energy(s), kinetic_energy(s), float(np.max(np.abs(s.u)))) for s in states]
    mdrift = max(abs(r[1] / m0 - 1) for r in rows)
    edrift = max(abs(r[2] / e0 - 1) for r in rows)
    summary = {"eps": cfg.eps, "dt": nls.dt, "mass_drift": mdrift, "energy_drift": edrift}
    checks = [Check("mass_drift", mdrift, hi=1e-10)]
    if cfg.energy_order_check:
        with clock("energy_order"):
            ratio = energy_drift_ratio(g, u0, nls)
        summary["energy_halving_factor"] = ratio
        checks.append(Check("energy_halving_factor", ratio, 3.5, 4.5))
    return Outcome(("t", "mass", "energy", "kinetic", "max_abs_u"), rows, summary, checks,
                   {"u_final": (g, states[-1].u)}, clock.times)


def energy_drift_ratio(grid: Grid, u0: np.ndarray, nls: NlsConfig) -> float:
    """Energy drift at ``dt`` divided by the drift at ``dt/2`` (4 for a second-order scheme)."""
    def drift(dt):
        c = NlsConfig(eps=nls.eps, sigma=nls.sigma, delta=nls.delta, potential=nls.potential,
                      dt=dt, t_final=nls.t_final, linear=nls.linear)
        st = run(c, grid, u0, [0.0, nls.t_final])
        return abs(energy(st[1]) - energy(st[0]))
    return drift(nls.dt) / drift(nls.dt / 2)


def solve_limit(cfg: RunConfig) -> Outcome:
    clock = _Clock()
    g = Grid(cfg.n, cfg.limit_N, cfg.L)
    a0 = profile_on(g, cfg.amplitude)
    times = np.linspace(0.0, cfg.T, cfg.samples)
    with clock("limit"):
        traj = LimitSolver(g, cfg.sigma).solve(a0, times, t_max=cfg.T_max, strict=False)
    rows = []
    m0 = g.integrate(np.abs(a0) ** 2)
    for s in traj.states:
        rows.append((s.t, smoothness_monitor(g, s), float(g.integrate(s.rho)), limit_energy(g, s, cfg.sigma),
                     g.l2_norm(s.u - s.a**cfg.sigma) / max(g.l2_norm(s.u), 1e-300)))
    muk = muk_consistency(traj)
    phig = phase_gradient_defect(traj)
    mass_drift = max(abs(r[2] / m0 - 1) for r in rows)
    e0 = rows[0][3]
    summary = {"T_valid": traj.T_valid, "reached": traj.states[-1].t, "muk": muk, "phase_gradient": phig,
               "mass_drift": mass_drift, "energy_drift": max(abs(r[3] / e0 - 1) for r in rows)}
    checks = [Check("muk_consistency", muk, hi=1e-6), Check("grad_phi_vs_v", phig, hi=1e-8),
              Check("reached_T", traj.states[-1].t, lo=cfg.T * (1 - 1e-12))]
    last = traj.states[-1]
    fields = {"a": (g, last.a), "u": (g, last.u), "phi": (g, last.phi)}
    fields.update({f"v{j}": (g, c) for j, c in enumerate(last.v)})
    return Outcome(("t", "monitor", "mass", "limit_energy", "muk"), rows, summary, checks, fields, clock.times)


def modenergy_sweep(cfg: RunConfig) -> Outcome:
    clock = _Clock()
    with clock("sweep"):
        rep = theorem_og_sweep(cfg.eps_list, cfg.T, cfg.sigma, gaussian(cfg.amplitude), N=cfg.N, L=cfg.L,
                               limit_N=cfg.limit_N, samples=cfg.samples, dt_factor=cfg.dt_factor,
                               delta=cfg.delta)
    sups = {e: rep.sup(e) for e in rep.eps_list}
    summary = {"slope": rep.slope, "intercept": rep.intercept, "eps_range": [min(rep.eps_list), max(rep.eps_list)],
               "T": cfg.T, "sup": {repr(e): v for e, v in sups.items()},
               "sup_over_eps2": {repr(e): v / e**2 for e, v in sups.items()},
               "gronwall_C": gronwall_constant(rep), "mass_drift": rep.mass_drift, "energy_drift": rep.energy_drift}
    worst_gap = max(r.lower_bound - r.H for s in rep.series.values() for r in s)
    checks = [Check("modenergy_slope", rep.slope, 1.7, 2.3),
              Check("mass_drift", max(rep.mass_drift.values()), hi=1e-10),
              Check("lower_bound_minus_H", worst_gap, hi=1e-12)]
    return Outcome(SWEEP_COLUMNS, list(rep.rows()), summary, checks, {}, clock.times)


def wavepacket_check(cfg: RunConfig) -> Outcome:
    clock = _Clock()
    if cfg.n != 1:
        raise ValueError("wavepacket-check runs in dimension n = 1")
    g = Grid(1, cfg.N, cfg.L)
    x = g.x1d
    u = cfg.amplitude * np.exp(-x**2) * (1 + 0.3j * np.sin(2 * x))
    v = x * np.exp(-x**2 / 4)
    s = cfg.s_commutator
    eps_iso = min(cfg.eps_list)
    with clock("isometry"):
        ref = WavePacketConfig.auto(g, u, eps_iso, spacing=1.0)
        d_ref = isometry_defect(g, u, ref)
        d_fine = isometry_defect(g, u, ref.refine())
    rows = []
    with clock("commutators"):
        for eps in cfg.eps_list:
            r = commutator_residuals(g, u, v, s, WavePacketConfig.auto(g, u, eps, v=v))
            rows.append((eps, s, *r.residuals, *r.envelopes, *r.constants))
    epss = [r[0] for r in rows]
    slopes = [fit_slope(epss, [r[2 + i] for r in rows])[0] for i in range(3)]
    rng = np.random.default_rng(cfg.seed)
    viol = 0
    with clock("elementary"):
        for sv in (0.25, 0.5, 0.75):
            xs = rng.standard_normal((cfg.n_random, 3)) * rng.lognormal(0, 2, (cfg.n_random, 1))
            ys = rng.standard_normal((cfg.n_random, 3)) * rng.lognormal(0, 2, (cfg.n_random, 1))
            viol += int(elementary_violations(xs, ys, sv).sum())
    summary = {"isometry_defect_ref": d_ref, "isometry_defect_refined": d_fine,
               "isometry_improvement": d_ref / max(d_fine, ROUNDOFF), "slopes": slopes,
               "max_constant": max(max(r[8:11]) for r in rows), "elementary_violations": viol, "seed": cfg.seed}
    checks = [Check("isometry_defect_ref", d_ref, hi=1e-3),
              Check("isometry_improvement", d_ref / max(d_fine, ROUNDOFF), lo=4.0),
              Check("last1_slope", slopes[0], s / 2 - 0.15, s / 2 + 0.15),
              Check("last2_slope", slopes[1], s / 2 - 0.15, s / 2 + 0.15),
              Check("last3_slope", slopes[2], 0.35, 0.65),
              Check("elementary_violations", viol, hi=0)]
    W = wp_transform(g, u, WavePacketConfig.auto(g, u, max(cfg.eps_list), v=v))
    header = ("eps", "s", "residual1", "residual2", "residual3", "envelope1", "envelope2", "envelope3",
              "K1", "K2", "K3")
    return Outcome(header, rows, summary, checks, {"wp_transform": W}, clock.times)


def oscillator_norm(g: Grid, eps: float, t: float, a0: np.ndarray, dt_cap: float = 0.01):
    """Linear harmonic run to ``t``: returns ``(u, ||eps grad u||, relative mass drift)``."""
    s0, st = run(NlsConfig(eps=eps, potential="harmonic", linear=True, dt=min(dt_cap, eps / 10), t_final=t),
                 g, a0, [0.0, t])
    return st.u, g.sobolev_seminorm(st.u, 1.0, eps), abs(mass(st) / mass(s0) - 1)


def oscillator_wkb(g: Grid, t: float, a0_fn, eps: float) -> np.ndarray:
    """``a_l exp(i phi_l / eps)`` with ``a_l = cos(t)^(-n/2) a0(x / cos t)``, ``phi_l = -|x|^2 tan(t) / 2``."""
    c = math.cos(t)
    x = g.coords
    amp = c ** (-g.dim / 2) * a0_fn(*[xi / c for xi in x])
    return amp * np.exp(-0.5j * g.r_sq * math.tan(t) / eps)


def oscillator_check(cfg: RunConfig) -> Outcome:
    clock = _Clock()
    g = Grid(cfg.n, cfg.N, cfg.L)
    a0_fn = gaussian(cfg.amplitude)
    a0 = a0_fn(*g.coords)
    xa0 = math.sqrt(float(g.integrate(g.r_sq * np.abs(a0) ** 2)))
    t = cfg.T
    rows = []
    drift = 0.0
    with clock("oscillator"):
        for eps in cfg.eps_list:
            u, m, md = oscillator_norm(g, eps, t, a0)
            drift = max(drift, md)
            pred = math.sin(t) * xa0
            wkb = oscillator_wkb(g, t, a0_fn, eps)
            werr = math.sqrt(sum(g.l2_norm(c) ** 2 for c in g.gradient(u - wkb, eps)))
            rows.append((eps, t, m, pred, abs(m - pred), werr))
    epss = [r[0] for r in rows]
    slope = fit_slope(epss, [r[4] for r in rows])[0]
    wslope = fit_slope(epss, [r[5] for r in rows])[0]
    summary = {"x_a0_norm": xa0, "norm_error_slope": slope, "wkb_error_slope": wslope, "t": t,
               "mass_drift": drift}
    checks = [Check("norm_error_slope", slope, 0.7, 1.3), Check("wkb_gradient_error_slope", wslope, 0.7, 1.3),
              Check("mass_drift", drift, hi=1e-10)]
    header = ("eps", "t", "measured", "sin_t_x_a0", "norm_error", "wkb_gradient_error")
    return Outcome(header, rows, summary, checks, {}, clock.times)


def limit_reference(cfg: RunConfig, amplitude: float, t_end: float, samples: int):
    g = Grid(1, cfg.limit_N, cfg.L)
    times = np.linspace(0.0, t_end, samples)
    traj = LimitSolver(g, cfg.sigma).solve(profile_on(g, amplitude), times, strict=False)
    return g, traj


def oscillation_floor(cfg: RunConfig, tau: float | None = None) -> dict:
    """Norms ``|| |eps D|^k u_eps(tau) ||`` and kinetic energies at ``tau`` for the eps sweep,
    with the limit floors ``|| |v|^k a ||`` and ``|| v a ||^2 / 2``."""
    amp = cfg.floor_amplitude
    gl, traj = limit_reference(cfg, amp, cfg.tau_horizon / amp ** cfg.sigma, cfg.tau_samples)
    if tau is None:
        tau = infl.find_tau(traj, cfg.floor_k_list, cfg.tau_fraction)
    ls = traj.at(tau)
    speed = ls.speed()
    floors = {k: gl.l2_norm(speed**k * ls.a) for k in cfg.floor_k_list}
    k_limit = 0.5 * gl.l2_norm(speed * ls.a) ** 2
    g = Grid(1, cfg.floor_N, cfg.L)
    u0 = profile_on(g, amp)
    out = {"tau": tau, "floors": floors, "limit_kinetic": k_limit, "eps": [],
           "norms": {k: [] for k in cfg.floor_k_list},
           "K0": [], "Ktau": [], "mass_drift": []}
    for eps in sorted(cfg.eps_list, reverse=True):
        st = run(NlsConfig(eps=eps, sigma=cfg.sigma, dt=_amp_dt(cfg, eps, amp), t_final=tau), g, u0, [0.0, tau])
        out["eps"].append(eps)
        for k in cfg.floor_k_list:
            out["norms"][k].append(g.sobolev_seminorm(st[1].u, k, eps))
        out["K0"].append(kinetic_energy(st[0]))
        out["Ktau"].append(kinetic_energy(st[1]))
        out["mass_drift"].append(abs(mass(st[1]) / mass(st[0]) - 1))
    return out


def floor_checks(fl: dict) -> list[Check]:
    checks = []
    for k, vals in fl["norms"].items():
        if k == 0:
            continue
        a, b = vals[-2], vals[-1]
        checks.append(Check(f"floor_k{k:g}_last_two_rel_gap", abs(a - b) / max(a, b), hi=0.20))
        checks.append(Check(f"floor_k{k:g}_vs_limit_rel_gap", abs(b - fl["floors"][k]) / fl["floors"][k], hi=0.25))
    checks.append(Check("kinetic_ratio", fl["Ktau"][-1] / fl["K0"][-1], lo=100))
    checks.append(Check("kinetic_vs_limit_rel_gap", abs(fl["Ktau"][-1] - fl["limit_kinetic"]) / fl["limit_kinetic"],
                        hi=0.10))
    return checks


def inflation_run(cfg: RunConfig) -> Outcome:
    clock = _Clock()
    if cfg.n != 1:
        raise ValueError("the inflation experiment runs in dimension n = 1")
    base = infl.ScalingParams(cfg.n, cfg.sigma, cfg.s, 1.0, cfg.log_damping)
    g = Grid(1, cfg.N, cfg.L)
    a0 = profile_on(g, cfg.amplitude)
    with clock("tau"):
        _, traj = limit_reference(cfg, cfg.amplitude, cfg.tau_horizon / cfg.amplitude**cfg.sigma, cfg.tau_samples)
        pos = tuple(k for k in cfg.k_list if k > 0) or (0.5, 1.0)
        tau = float(cfg.tau) if cfg.tau != "auto" else infl.find_tau(traj, pos, cfg.tau_fraction)
    with clock("inflation"):
        rep = infl.run_inflation(base, cfg.h_list, cfg.k_list, tau, g, a0, cfg.dt_factor)
    rows = [(r.h, r.eps, r.k, r.norm, r.predicted_exp, r.local_slope) for r in rep.rows]
    sensitivity = {}
    if cfg.tau_sensitivity:
        with clock("tau_sensitivity"):
            for f in (0.5, 2.0):
                alt = infl.run_inflation(base, cfg.h_list, cfg.k_list, tau * f, g, a0, cfg.dt_factor)
                sensitivity[repr(f)] = {repr(k): alt.fits[k]["fitted"] for k in cfg.k_list}
    drift = max(rep.mass_drift.values())
    summary = {"tau": tau, "T_valid": traj.T_valid, "s_c": base.s_c, "gain": base.gain,
               "fits": {repr(k): v for k, v in rep.fits.items()}, "tau_sensitivity": sensitivity}
    checks = []
    for k in cfg.k_list:
        fit = rep.fits[k]
        tol = 0.02 if k == 0 else 0.15
        checks.append(Check(f"exponent_k{k:g}", fit["fitted"] - fit["predicted"], -tol, tol))
    if cfg.floor_stage:
        with clock("floor"):
            fl = oscillation_floor(cfg)
        summary["floor"] = {"tau": fl["tau"], "floors": {repr(k): v for k, v in fl["floors"].items()},
                            "eps": fl["eps"], "norms": {repr(k): v for k, v in fl["norms"].items()},
                            "kinetic_ratio": fl["Ktau"][-1] / fl["K0"][-1], "limit_kinetic": fl["limit_kinetic"],
                            "kinetic_tau": fl["Ktau"][-1]}
        checks.extend(floor_checks(fl))
        drift = max(drift, max(fl["mass_drift"]))
    summary["mass_drift"] = drift
    checks.append(Check("mass_drift", drift, hi=1e-10))
    header = ("h", "eps", "k", "norm", "predicted_exp", "local_slope")
    return Outcome(header, rows, summary, checks, {}, clock.times)


EXPERIMENTS = {
    "solve-nls": solve_nls,
    "solve-limit": solve_limit,
    "modenergy-sweep": modenergy_sweep,
    "wavepacket-check": wavepacket_check,
    "oscillator-check": oscillator_check,
    "inflation": inflation_run,
}


def run_experiment(cfg: RunConfig) -> Outcome:
    return EXPERIMENTS[cfg.experiment](cfg)


def resampled_limit(gl: Grid, state, g: Grid):
    return [resample(gl, c, g) for c in state.v], resample(gl, state.a, g)
