import numpy as np
import pytest
from scipy import integrate

from lossreg.spectral import Field, Grid, GridMismatchError

from conftest import band_limited


def test_grid_invariants():
    g = Grid(1, 64, 10.0)
    assert g.dx * g.N == pytest.approx(10.0, rel=0, abs=1e-15)
    assert g.x1d[0] == -5.0
    assert np.max(np.abs(g.xi1d)) == pytest.approx(np.pi * 64 / 10.0)
    assert np.allclose(g.xi1d, 2 * np.pi * np.fft.fftfreq(64, g.dx))
    assert g.xi_max == pytest.approx(np.pi * 64 / 10)


@pytest.mark.parametrize("N,L", [(63, 1.0), (48, 1.0), (0, 1.0), (64, 0.0), (64, -2.0)])
def test_grid_rejects_bad_parameters(N, L):
    with pytest.raises(ValueError):
        Grid(1, N, L)


def test_check_rejects_mismatched_shape():
    with pytest.raises(GridMismatchError):
        Grid(1, 64, 1.0).check(np.zeros(32))


def test_field_validates():
    g = Grid(1, 16, 1.0)
    Field(g, np.zeros(16, complex))
    with pytest.raises(GridMismatchError):
        Field(g, np.zeros(8))
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        Field(g, bad)


def test_gradient_plane_wave():
    g = Grid(1, 128, 2 * np.pi)
    f = np.exp(5j * g.x1d)
    (d,) = g.gradient(f, 0.1)
    assert np.allclose(d, 0.5j * f, atol=1e-12)


def test_gradient_zero_and_gaussian(grid1d):
    x = grid1d.x1d
    assert np.all(grid1d.gradient(np.zeros_like(x))[0] == 0)
    (d,) = grid1d.gradient(np.exp(-x**2 / 2))
    assert np.isrealobj(d)
    assert np.max(np.abs(d + x * np.exp(-x**2 / 2))) < 1e-12


def test_gradient_2d_curl_free(rng):
    g = Grid(2, 64, 12.0)
    X, Y = g.coords
    phi = np.exp(-X**2 - 0.5 * Y**2) * np.cos(X + Y)
    gx, gy = g.gradient(phi)
    curl = g.gradient(gy)[0] - g.gradient(gx)[1]
    assert np.max(np.abs(curl)) < 1e-10


def test_frac_deriv_plane_wave_and_identity(grid1d):
    g = Grid(1, 128, 2 * np.pi)
    f = np.exp(5j * g.x1d)
    assert np.allclose(g.frac_deriv(f, 0.5, 0.1), np.sqrt(0.5) * f, atol=1e-12)
    h = np.exp(-grid1d.x1d**2) * (1 + 1j)
    out = grid1d.frac_deriv(h, 0.0, 0.3)
    assert np.array_equal(out, h) and out is not h


def _lattice_oracle(L, x, k):
    """``(1/L) sum_xi |xi|^k fhat(xi) e^(i x xi)`` with the exact transform of ``exp(-x^2/2)``."""
    m = np.arange(-2000, 2001)
    xi = 2 * np.pi * m / L
    fhat = np.sqrt(2 * np.pi) * np.exp(-xi**2 / 2)
    return np.array([np.sum(np.abs(xi) ** k * fhat * np.cos(xi * xv)) / L for xv in x])


def test_frac_deriv_matches_multiplier_sum():
    g = Grid(1, 256, 24.0)
    out = g.frac_deriv(np.exp(-g.x1d**2 / 2), 0.5, 1.0)
    idx = np.array([0, 37, 128, 140, 200])
    assert np.max(np.abs(out[idx] - _lattice_oracle(24.0, g.x1d[idx], 0.5))) < 1e-12


def test_frac_deriv_approaches_whole_line_integral():
    # the |xi|^(1/2) kink makes the torus error algebraic in L: about L^(-3/2)
    val, _ = integrate.quad(lambda k: np.sqrt(k) * np.exp(-k**2 / 2), 0, 40)
    ref = 2 * val / np.sqrt(2 * np.pi)
    errs = []
    for L in (16.0, 32.0, 64.0):
        g = Grid(1, int(L * 16), L)
        out = g.frac_deriv(np.exp(-g.x1d**2 / 2), 0.5, 1.0)
        errs.append(abs(out[g.N // 2].real - ref))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((rates > 1.3) & (rates < 1.7))


@pytest.mark.parametrize("k", [-0.1, 1.5])
def test_frac_deriv_domain(k, grid1d):
    with pytest.raises(ValueError):
        grid1d.frac_deriv(np.ones(grid1d.N), k, 1.0)
    with pytest.raises(ValueError):
        grid1d.sobolev_seminorm(np.ones(grid1d.N), k, 1.0)


def test_sobolev_seminorm_values(grid1d):
    x = grid1d.x1d
    assert grid1d.sobolev_seminorm(np.zeros(grid1d.N), 0.5, 1.0) == 0.0
    ref = (np.sqrt(np.pi) / 2) ** 0.5
    assert grid1d.sobolev_seminorm(np.exp(-x**2 / 2), 1.0, 1.0) == pytest.approx(ref, rel=1e-12)
    assert ref == pytest.approx(0.94139, abs=1e-5)
    f = np.exp(-x**2) * (1 + 0.5j * x)
    assert grid1d.sobolev_seminorm(f, 0.0, 1.0) == pytest.approx(grid1d.l2_norm(f), rel=1e-13)
    assert grid1d.sobolev_seminorm(f, 0.7, 0.2) == pytest.approx(grid1d.l2_norm(grid1d.frac_deriv(f, 0.7, 0.2)),
                                                                 rel=1e-12)


def test_homogeneous_norm_zero_mode_excluded():
    g = Grid(1, 64, 10.0)
    assert g.homogeneous_norm(np.ones(64), 0.5) == 0.0
    assert g.homogeneous_norm(np.ones(64), 0.0) == pytest.approx(np.sqrt(10.0))


def test_integrate_examples():
    g = Grid(1, 256, 10.0)
    assert g.integrate(np.ones(256)) == pytest.approx(10.0, rel=1e-15)
    G = Grid(1, 512, 20.0)
    assert G.integrate(np.exp(-2 * G.x1d**2)) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-14)
    odd = G.x1d * np.exp(-G.x1d**2)
    assert abs(G.integrate(odd)) < 1e-15


def test_plancherel_and_homogeneity(rng):
    for g in (Grid(1, 256, 7.0), Grid(2, 32, 5.0)):
        f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        lhs = g.integrate(np.abs(f) ** 2)
        rhs = np.sum(np.abs(g.fft(f)) ** 2) * g.cell_volume / g.N**g.dim
        assert abs(lhs - rhs) / lhs < 1e-12
        a = g.frac_deriv(f, 0.6, 0.3)
        b = g.frac_deriv(f, 0.6, 0.6)
        assert np.allclose(b, 2**0.6 * a, rtol=1e-13, atol=1e-13)


def test_interpolation_inequality_k2(rng):
    g = Grid(1, 256, 2 * np.pi)
    for _ in range(20):
        f = band_limited(g, rng, 20)
        h1 = g.homogeneous_norm(f, 1)
        bound = g.l2_norm(f) ** 0.5 * g.homogeneous_norm(f, 2) ** 0.5
        assert h1 <= bound * (1 + 1e-12)


def test_refine_and_dealias():
    g = Grid(1, 64, 3.0)
    r = g.refine()
    assert r.N == 128 and r.L == 3.0
    m = g.dealias_mask()
    assert m.dtype == bool and m.sum() < 64 and m[0]
