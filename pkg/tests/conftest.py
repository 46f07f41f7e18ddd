import numpy as np
import pytest

from lossreg.spectral import Grid


@pytest.fixture
def grid1d():
    return Grid(1, 512, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def band_limited(grid: Grid, rng, modes: int = 16) -> np.ndarray:
    """Random complex field with energy only in the lowest ``modes`` frequencies per axis."""
    F = np.zeros(grid.shape, dtype=complex)
    sl = tuple(slice(0, modes) for _ in range(grid.dim))
    F[sl] = rng.standard_normal(F[sl].shape) + 1j * rng.standard_normal(F[sl].shape)
    return grid.ifft(F)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
