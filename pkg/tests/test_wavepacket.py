import numpy as np
import pytest

from lossreg.spectral import Grid
from lossreg.wavepacket import (WavePacketConfig, WavePacketConfigError, commutator_residuals,
                                elementary_inequality_check, elementary_violations, isometry_defect,
                                microlocal_lower_bound, normalization, phase_space_norm, tail_fraction,
                                wp_transform)

G = Grid(1, 2048, 16.0)
X = G.x1d
U = np.exp(-X**2) * (1 + 0.3j * np.sin(2 * X))
V = X * np.exp(-X**2 / 4)


def test_normalization_constant():
    assert normalization(1) == pytest.approx(2**-0.5 * np.pi**-0.75)
    assert normalization(2) == pytest.approx(0.5 * np.pi**-1.5)


def test_zero_maps_to_zero():
    cfg = WavePacketConfig(0.1, 3.0, 64)
    assert np.all(wp_transform(G, np.zeros(G.N), cfg).values == 0)


@pytest.mark.parametrize("eps", [2.0**-4, 2.0**-7])
def test_isometry_reference_and_refined(eps):
    ref = WavePacketConfig.auto(G, U, eps, spacing=1.0)
    d0 = isometry_defect(G, U, ref)
    d1 = isometry_defect(G, U, ref.refine())
    assert d0 < 1e-3
    assert d1 < 1e-14 or d0 / d1 >= 4


def test_gaussian_closed_form():
    eps = 0.05
    u = np.exp(-X**2 / (2 * eps))
    cfg = WavePacketConfig(eps, 2.0, 64)
    W = wp_transform(G, u, cfg).values
    xi = cfg.xi[:, None]
    exact = (normalization(1) * eps**-0.75 * np.sqrt(np.pi * eps)
             * np.exp(-X[None, :] ** 2 / (4 * eps) - xi**2 / (4 * eps) + 1j * X[None, :] * xi / (2 * eps)))
    assert np.max(np.abs(W - exact)) < 1e-12


def test_linearity(rng):
    cfg = WavePacketConfig.auto(G, U, 0.03, v=V)
    w = np.exp(-(X - 1) ** 2) * np.exp(2j * X)
    al, be = 0.3 - 1.2j, 2.1
    lhs = wp_transform(G, al * U + be * w, cfg, check_tail=False).values
    rhs = al * wp_transform(G, U, cfg, check_tail=False).values + be * wp_transform(G, w, cfg, check_tail=False).values
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_tail_certification():
    narrow = WavePacketConfig(0.05, 0.3, 32)
    assert tail_fraction(G, U, narrow) > 1e-10
    with pytest.raises(WavePacketConfigError):
        wp_transform(G, U, narrow)
    wide = WavePacketConfig.auto(G, U, 0.05)
    assert tail_fraction(G, U, wide) < wide.tail_tol
    with pytest.raises(WavePacketConfigError):
        WavePacketConfig(0.0, 1.0, 10)
    with pytest.raises(WavePacketConfigError):
        wp_transform(Grid(2, 16, 4.0), np.zeros((16, 16)), wide)


def test_commutator_trivial_cases():
    cfg = WavePacketConfig.auto(G, U, 0.05, v=V)
    r = commutator_residuals(G, U, np.zeros_like(X), 0.5, cfg)
    assert r.residuals[0] == 0.0
    r0 = commutator_residuals(G, U, V, 0.0, cfg)
    assert r0.residuals[0] == 0.0 and r0.residuals[1] == 0.0
    with pytest.raises(ValueError):
        commutator_residuals(G, U, V, 1.5, cfg)


def test_commutator_constants_bounded():
    for eps in (2.0**-4, 2.0**-7):
        cfg = WavePacketConfig.auto(G, U, eps, v=V)
        for s in (0.25, 0.5, 1.0):
            r = commutator_residuals(G, U, V, s, cfg)
            assert max(r.constants) < 10


def test_elementary_inequality_cases(rng):
    x = rng.standard_normal((100, 3))
    for s in (0.0, 0.25, 1.0):
        assert elementary_inequality_check(x, x, s)
        assert elementary_inequality_check(x, np.zeros_like(x), s)
    assert elementary_violations(np.array([[2.0]]), np.array([[0.0]]), 1.0).sum() == 0
    with pytest.raises(ValueError):
        elementary_violations(x, x, 1.2)


def test_microlocal_vacuum_velocity():
    r = microlocal_lower_bound(G, U, [np.zeros_like(X)], U, 0.5, 0.05, 3)
    assert r.lhs == 0.0 and r.measured_K == 0.0 and r.target == 0.0


def test_microlocal_exact_wkb_gap_decays():
    g = Grid(1, 4096, 16.0)
    x = g.x1d
    a = np.exp(-x**2)
    phi = 0.5 * np.sin(2 * np.pi * x / 8)
    v = g.gradient(phi)
    for k in (0.5, 1.0):
        gaps = []
        for eps in 2.0 ** -np.arange(4, 9):
            r = microlocal_lower_bound(g, a * np.exp(1j * phi / eps), v, a, k, eps, 3)
            gaps.append(abs(r.target - r.frac_term))
            cov = (eps * g.homogeneous_norm(a, 1)) ** k * g.l2_norm(a) ** (1 - k)
            assert r.covariant_term == pytest.approx(cov, rel=1e-8)
            assert r.measured_K <= 10
        assert np.all(np.diff(np.log(gaps)) < 0)
    assert r.weight_branch == "sobolev"
    assert microlocal_lower_bound(g, a, v, a, 0.5, 0.1, 3).weight_branch == "weighted"


def test_commutator_constant_on_random_triples():
    rng = np.random.default_rng(5)
    for _ in range(3):
        c = rng.normal(size=4)
        u = np.exp(-(X - c[0]) ** 2) * (1 + 0.5j * np.sin(c[1] * X))
        v = [c[2] * X * np.exp(-X**2 / 4) + c[3] * np.tanh(X)]
        for k in (0.25, 0.5, 1.0):
            for eps in (2.0**-4, 2.0**-6, 2.0**-8):
                assert microlocal_lower_bound(G, u, v, u, k, eps, 3).measured_K <= 10


def test_phase_space_norm_matches_field():
    cfg = WavePacketConfig.auto(G, U, 0.05)
    W = wp_transform(G, U, cfg)
    assert W.norm() == phase_space_norm(G, cfg, W.values)
    assert W.xi.shape == (cfg.xi_points,)
