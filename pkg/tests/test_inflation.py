from fractions import Fraction

import numpy as np
import pytest

from lossreg.inflation import (HorizonError, ScalingError, ScalingParams, admissible_h, critical_exponent,
                               decolle_integral, find_tau, frame_map_check, make_datum, predict_exponent,
                               psi_to_u, run_inflation, semiclassical_datum, sobolev_norm)
from lossreg.limit import LimitSolver
from lossreg.nls import NlsConfig, run
from lossreg.spectral import Grid

G = Grid(1, 1024, 16.0)
A0 = np.exp(-G.x1d**2)


@pytest.mark.parametrize("n,sigma,s,msg", [(1, 2, 0.1, "s_c > 0"), (1, 1, 0.1, "s_c > 0"),
                                           (1, 3, 0.2, "0 < s < s_c"), (1, 3, 0.0, "0 < s < s_c")])
def test_scaling_constraints_named(n, sigma, s, msg):
    with pytest.raises(ScalingError, match=msg.replace("(", r"\(")):
        ScalingParams(n, sigma, s)


def test_scaling_other_constraints():
    with pytest.raises(ScalingError, match="h"):
        ScalingParams(1, 3, 0.1, 1.5)
    with pytest.raises(ScalingError, match="log"):
        ScalingParams(1, 3, 0.1, 1.0, log_damping=True)
    with pytest.raises(ScalingError):
        ScalingParams(1, 0, 0.1)


def test_derived_quantities():
    assert critical_exponent(3, 1) == 0.5
    p = ScalingParams(1, 3, 0.1, 0.5)
    assert p.s_c == pytest.approx(1 / 6)
    assert p.eps == pytest.approx(0.5**0.2)
    assert p.s_sob == pytest.approx(3 / 8)
    assert ScalingParams(1, 3, 0.1, 2.0**-20).eps < ScalingParams(1, 3, 0.1, 0.5).eps < 1


def test_predict_exponent_reference_value():
    _, e = predict_exponent(ScalingParams(1, 3, 0.1), 0.5)
    assert e == pytest.approx(-0.5, abs=1e-14)
    # independent exact-arithmetic path
    s, k, sig = Fraction(1, 10), Fraction(1, 2), 3
    sc = Fraction(1, 2) - Fraction(1, sig)
    assert s - k * (1 + sig * (sc - s)) == Fraction(-1, 2)


@pytest.mark.parametrize("n,sigma", [(3, 3), (4, 2), (5, 2), (6, 1)])
def test_threshold_at_sobolev_exponent_is_one(n, sigma):
    s_sob = 0.5 * n * sigma / (sigma + 1)
    p = ScalingParams(n, sigma, s_sob)
    threshold, _ = predict_exponent(p, 1.0)
    assert threshold == pytest.approx(1.0, abs=1e-14)


def test_exponent_sign_matches_threshold():
    p = ScalingParams(1, 3, 0.1)
    thr, _ = predict_exponent(p, 0)
    for k in np.linspace(0, 1, 21):
        assert (predict_exponent(p, k)[1] < 0) == (k > thr)


def test_make_datum_identity_and_scaling():
    g1, phi1 = make_datum(ScalingParams(1, 3, 0.1, 1.0), G, A0)
    assert g1 == G and np.array_equal(phi1, A0)
    for h in (0.5, 0.125):
        p = ScalingParams(1, 3, 0.1, h)
        gh, phi = make_datum(p, G, A0)
        for m in (0.0, 0.1, 0.5, 1.0):
            assert gh.homogeneous_norm(phi, m) == pytest.approx(h ** (p.s - m) * G.homogeneous_norm(A0, m), rel=1e-12)
        assert gh.homogeneous_norm(phi, p.s) == pytest.approx(G.homogeneous_norm(A0, p.s), rel=1e-12)


def test_make_datum_rejects_incompatible_h():
    with pytest.raises(ScalingError, match="admissible"):
        make_datum(ScalingParams(1, 3, 0.1, 0.3), G, A0)
    with pytest.raises(ScalingError):
        make_datum(ScalingParams(1, 3, 0.1, 0.5), Grid(2, 16, 4.0), np.zeros((16, 16)))
    assert admissible_h(3) == [1.0, 0.5, 0.25, 0.125]


def test_log_damping_drives_datum_to_zero():
    norms = []
    for j in range(1, 8):
        p = ScalingParams(1, 3, 0.1, 2.0**-j, log_damping=True)
        gh, phi = make_datum(p, G, A0)
        norms.append(sobolev_norm(gh, phi, p.s))
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_frame_map():
    p = ScalingParams(1, 3, 0.1, 0.5)
    assert frame_map_check(p, G, A0, 0.0, 0.01) < 1e-15
    assert frame_map_check(p, G, A0, 0.01, 0.01) < 1e-6
    assert frame_map_check(p, G, A0, 0.05, 0.01) < 1e-12
    with pytest.raises(ScalingError, match="misalignment"):
        frame_map_check(p, G, A0, 0.015, 0.01)


def test_norm_ledger_on_matched_snapshots():
    p = ScalingParams(1, 3, 0.1, 0.25)
    eps, t = p.eps, 0.05
    gpsi, phi = make_datum(p, G, A0)
    u = run(NlsConfig(eps=eps, dt=0.005, t_final=t), G, semiclassical_datum(p, A0), [t])[0].u
    tp = p.h**2 * eps * t
    psi = run(NlsConfig(eps=1.0, dt=p.h**2 * eps * 0.005, t_final=tp), gpsi, phi, [tp])[0].u
    assert np.max(np.abs(psi_to_u(p, psi) - u)) < 1e-12
    for m in (0.0, 0.5, 1.0):
        assert gpsi.homogeneous_norm(psi, m) == pytest.approx(p.h ** (p.s - m) * G.homogeneous_norm(u, m), rel=1e-12)


@pytest.fixture(scope="module")
def reference_traj():
    gl = Grid(1, 2048, 16.0)
    return LimitSolver(gl, 3).solve(np.exp(-gl.x1d**2), np.linspace(0, 0.33, 67))


def test_find_tau_golden(reference_traj):
    assert find_tau(reference_traj, (0.5, 1.0)) == pytest.approx(0.12, rel=0.05)
    assert all(decolle_integral(reference_traj.grid, reference_traj.states[0], k) == 0 for k in (0.25, 1.0))
    assert decolle_integral(reference_traj.grid, reference_traj.states[0], 0.0) > 0


def test_decolle_small_time_law():
    gl = Grid(1, 2048, 16.0)
    al = np.exp(-gl.x1d**2)
    st = LimitSolver(gl, 3).solve(al, [0.05]).states[-1]
    lead = np.abs(gl.gradient(al**6)[0])
    for k in (0.25, 0.5, 1.0):
        pred = 0.05 ** (2 * k) * gl.integrate(lead ** (2 * k) * al**2)
        assert decolle_integral(gl, st, k) / pred == pytest.approx(1.0, abs=0.10)


def test_find_tau_no_qualifying_time(reference_traj):
    short = LimitSolver(reference_traj.grid, 3).solve(np.exp(-reference_traj.grid.x1d ** 2), [0.0])
    with pytest.raises(HorizonError):
        find_tau(short, (0.5,))


def test_run_inflation_control_row_and_monotonicity():
    base = ScalingParams(1, 3, 0.1)
    g = Grid(1, 512, 16.0)
    rep = run_inflation(base, [0.5, 0.25, 0.125], [0.0, 0.5, 1.0], 0.015, g, 2 * np.exp(-g.x1d**2))
    assert rep.fits[0.0]["fitted"] == pytest.approx(0.1, abs=1e-10)
    f = [rep.fits[k]["fitted"] for k in (0.0, 0.5, 1.0)]
    assert f[0] > f[1] > f[2]
    k0 = rep.by_k(0.0)
    mass_ratio = [r.norm / (r.h**0.1) for r in k0]
    assert np.allclose(mass_ratio, mass_ratio[0], rtol=1e-10)
    assert all(r.t_h == pytest.approx(0.015 * r.h**2 * r.eps) for r in rep.rows)
    assert np.isnan(rep.by_k(0.5)[0].local_slope) and np.isfinite(rep.by_k(0.5)[1].local_slope)
