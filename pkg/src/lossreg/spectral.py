"""Periodic grids and FFT calculus.

Everything downstream works on plain numpy arrays sampled on a :class:`Grid`;
the grid owns the frequency arrays and the Fourier multipliers built from them.
Arrays are laid out with ``indexing="ij"`` so that axis ``j`` is coordinate ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridMismatchError(ValueError):
    """Raised when an array does not live on the grid it is used with."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L/2, L/2)^dim`` with ``N`` points per axis."""

    dim: int
    N: int
    L: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 2, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @cached_property
    def x1d(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @cached_property
    def xi1d(self) -> np.ndarray:
        """Dual frequencies in FFT ordering, ``(2 pi / L) * {-N/2, ..., N/2 - 1}``."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.dx)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x1d] * self.dim), indexing="ij"))

    @cached_property
    def freqs(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.xi1d] * self.dim), indexing="ij"))

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(sum(k**2 for k in self.freqs))

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return sum(k**2 for k in self.freqs)

    @cached_property
    def r_sq(self) -> np.ndarray:
        return sum(c**2 for c in self.coords)

    @cached_property
    def _deriv_symbols(self) -> tuple[np.ndarray, ...]:
        # Nyquist mode dropped so real input gives real derivatives.
        k = self.xi1d.copy()
        k[self.N // 2] = 0.0
        axes = np.meshgrid(*([k] * self.dim), indexing="ij")
        return tuple(1j * a for a in axes)

    @property
    def xi_max(self) -> float:
        return np.pi * self.N / self.L

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise GridMismatchError(f"array of shape {f.shape} is not on grid {self.shape}")
        return f

    def fft(self, f):
        return np.fft.fftn(self.check(f))

    def ifft(self, F):
        return np.fft.ifftn(F)

    def dealias_mask(self, fraction: float = 2.0 / 3.0) -> np.ndarray:
        cut = fraction * self.xi_max
        mask = np.ones(self.shape, dtype=bool)
        for k in self.freqs:
            mask &= np.abs(k) < cut
        return mask

    # calculus ---------------------------------------------------------

    def gradient(self, f, eps: float = 1.0) -> list[np.ndarray]:
        """``eps * grad f`` spectrally; components are real when ``f`` is real."""
        if eps < 0:
            raise ValueError(f"eps must be >= 0, got {eps}")
        F = self.fft(f)
        out = [eps * self.ifft(s * F) for s in self._deriv_symbols]
        if np.isrealobj(f):
            out = [c.real for c in out]
        return out

    def divergence(self, components) -> np.ndarray:
        if len(components) != self.dim:
            raise GridMismatchError(f"expected {self.dim} components, got {len(components)}")
        total = sum(s * self.fft(c) for s, c in zip(self._deriv_symbols, components))
        out = self.ifft(total)
        return out.real if all(np.isrealobj(c) for c in components) else out

    def laplacian(self, f) -> np.ndarray:
        out = self.ifft(-self.xi_sq * self.fft(f))
        return out.real if np.isrealobj(f) else out

    def frac_deriv(self, f, k: float, eps: float) -> np.ndarray:
        """Apply the Fourier multiplier ``|eps xi|^k`` with ``k`` in ``[0, 1]``."""
        _check_order(k)
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if k == 0:
            return np.array(self.check(f), copy=True)
        return self.ifft(np.abs(eps * self.xi_abs) ** k * self.fft(f))

    def homogeneous_norm(self, f, m: float, eps: float = 1.0) -> float:
        """``|| |eps D|^m f ||_{L^2}`` for any ``m >= 0`` via Plancherel (zero mode dropped for m > 0)."""
        if m < 0:
            raise ValueError(f"m must be >= 0, got {m}")
        F = self.fft(f)
        if m == 0:
            weight = 1.0
        else:
            weight = (eps * self.xi_abs) ** (2 * m)
        total = np.sum(weight * np.abs(F) ** 2)
        return float(np.sqrt(self.cell_volume * total / self.N**self.dim))

    def sobolev_seminorm(self, f, k: float, eps: float) -> float:
        _check_order(k)
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        return self.homogeneous_norm(f, k, eps)

    def integrate(self, g):
        s = np.sum(self.check(g)) * self.cell_volume
        return s.real if np.isrealobj(g) else s

    def l2_norm(self, f) -> float:
        return float(np.sqrt(self.cell_volume * np.sum(np.abs(self.check(f)) ** 2)))

    def refine(self, factor: int = 2) -> Grid:
        return Grid(self.dim, self.N * factor, self.L)


def _check_order(k: float) -> None:
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"derivative order k must lie in [0, 1], got {k}")


@dataclass(frozen=True)
class Field:
    """A complex sample array tied to its grid; the unit used for dumps."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.grid.check(self.values)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite samples")
