"""Grids and Fourier transforms on the rescaled torus T_lambda = R / (2 pi lambda Z).

Conventions (frequencies xi live on the lattice Z / lambda)::

    fhat(xi) = 1/sqrt(2 pi) * int_0^{2 pi lambda} f(x) exp(-i x xi) dx
    f(x)     = 1/(sqrt(2 pi) lambda) * sum_xi fhat(xi) exp(i x xi)

so that ||f||_{L^2(T_lambda)}^2 = (1/lambda) * sum_xi |fhat(xi)|^2.

Spectra are stored in monotone order k = -n/2, ..., n/2 - 1 (xi = k / lambda).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform collocation grid on T_lambda with ``n_points`` samples."""

    lam: float
    n_points: int

    def __post_init__(self):
        if not self.lam >= 1.0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        n = self.n_points
        if int(n) != n or n < 8:
            raise ValueError(f"n_points must be an integer >= 8, got {n}")
        if n % 2:
            raise ValueError(f"n_points must be even, got {n}")
        if n & (n - 1):
            raise ValueError(f"n_points must be a power of two, got {n}")

    @property
    def length(self) -> float:
        return 2.0 * math.pi * self.lam

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    @property
    def indices(self) -> np.ndarray:
        """Integer mode indices k in monotone order."""
        return np.arange(-(self.n_points // 2), self.n_points // 2)

    @property
    def modes(self) -> np.ndarray:
        """Frequencies xi = k / lambda in monotone order."""
        return self.indices / self.lam

    @property
    def nyquist(self) -> float:
        return self.n_points / (2.0 * self.lam)

    def field_from_values(self, values) -> "Field":
        values = np.asarray(values, dtype=complex)
        return Field(self, values, forward_transform(self, values))

    def field_from_spectrum(self, spectrum) -> "Field":
        spectrum = np.asarray(spectrum, dtype=complex)
        return Field(self, inverse_transform(self, spectrum), spectrum)

    def zeros(self) -> "Field":
        z = np.zeros(self.n_points, dtype=complex)
        return Field(self, z, z.copy())


def make_grid(lam: float, n_points: int) -> TorusGrid:
    return TorusGrid(float(lam), int(n_points))


def _check_length(grid: TorusGrid, arr: np.ndarray, what: str):
    if arr.shape != (grid.n_points,):
        raise ValueError(f"{what} has shape {arr.shape}, grid expects ({grid.n_points},)")


def forward_transform(grid: TorusGrid, values) -> np.ndarray:
    """Quadrature realization of fhat(xi); exact for band-limited f."""
    values = np.asarray(values, dtype=complex)
    _check_length(grid, values, "values")
    return np.fft.fftshift(np.fft.fft(values)) * (grid.dx / SQRT_2PI)


def inverse_transform(grid: TorusGrid, spectrum) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=complex)
    _check_length(grid, spectrum, "spectrum")
    scale = grid.n_points / (SQRT_2PI * grid.lam)
    return np.fft.ifft(np.fft.ifftshift(spectrum)) * scale


@dataclass(frozen=True, eq=False)
class Field:
    """Complex function on a TorusGrid, held as paired samples and spectrum.

    Build through :meth:`TorusGrid.field_from_values` or
    :meth:`TorusGrid.field_from_spectrum` so both sides stay consistent.
    """

    grid: TorusGrid
    values: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_length(self.grid, self.values, "values")
        _check_length(self.grid, self.spectrum, "spectrum")
        self.values.flags.writeable = False
        self.spectrum.flags.writeable = False

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c, self.spectrum * c)

    __rmul__ = __mul__

    def conj(self) -> "Field":
        return self.grid.field_from_values(np.conj(self.values))

    def bandwidth(self, rtol: float = 1e-13) -> float:
        """Largest |xi| carrying coefficient mass above ``rtol`` of the peak."""
        mag = np.abs(self.spectrum)
        peak = mag.max()
        if peak == 0.0:
            return 0.0
        return float(np.abs(self.grid.modes[mag > rtol * peak]).max())


def l2_norm(f: Field) -> float:
    return math.sqrt(np.sum(np.abs(f.spectrum) ** 2) / f.grid.lam)


def l2_norm_physical(f: Field) -> float:
    return math.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2))


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral derivative; the unpaired Nyquist mode is dropped for odd orders."""
    symbol = (1j * f.grid.modes) ** order
    if order % 2:
        symbol[0] = 0.0
    return f.grid.field_from_spectrum(symbol * f.spectrum)


# --- CSV serialization -----------------------------------------------------

def write_field_csv(f: Field, path) -> None:
    """Write a field as two blocks: samples (x, re, im) then spectrum (xi, re, im)."""
    path = Path(path)
    g = f.grid
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# lambda", repr(g.lam)])
        w.writerow(["# n_points", g.n_points])
        w.writerow(["x", "re_value", "im_value"])
        for x, v in zip(g.x, f.values):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
        w.writerow(["xi", "re_coeff", "im_coeff"])
        for xi, c in zip(g.modes, f.spectrum):
            w.writerow([repr(float(xi)), repr(float(c.real)), repr(float(c.imag))])


def read_field_csv(path) -> Field:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    lam = float(rows[0][1])
    n = int(rows[1][1])
    grid = make_grid(lam, n)
    vals = np.array([complex(float(r[1]), float(r[2])) for r in rows[3:3 + n]])
    spec = np.array([complex(float(r[1]), float(r[2])) for r in rows[4 + n:4 + 2 * n]])
    return Field(grid, vals, spec)
