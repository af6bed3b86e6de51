"""Pseudo-spectral integrating-factor RK4 solver for the derivative NLS

    i q_t + q_xx + i (|q|^2 q)_x = 0,   i.e.   q_t = i q_xx - (|q|^2 q)_x,

on T_lambda, plus the classical invariants and the scaling map.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .fourier import SQRT_2PI, Field, TorusGrid, derivative, make_grid, write_field_csv

log = logging.getLogger(__name__)


class SolverInstabilityError(RuntimeError):
    """Raised when the state stops being finite."""

    def __init__(self, t: float, step: int):
        super().__init__(f"blow-up/instability: non-finite state at t={t:.6g} (step {step})")
        self.t = t
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    dealias_fraction: float = 2.0 / 3.0
    snapshot_stride: int = 1
    cubic: bool = True

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        if self.cubic and self.dealias_fraction > 2.0 / 3.0 + 1e-15:
            raise ValueError("dealias_fraction must be <= 2/3 for the cubic nonlinearity")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def validate_for(self, grid: TorusGrid):
        if self.dt > grid.dx ** 2 * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds the stability guard dx^2={grid.dx ** 2:.3g}")
        if abs(self.n_steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be an integer multiple of dt")


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list
    config: SolverConfig
    mass_drift: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def export(self, out_dir, extra: dict | None = None) -> Path:
        """Write one CSV per snapshot and a manifest.json; return the manifest path."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for i, snap in enumerate(self.snapshots):
            name = f"snapshot_{i:05d}.csv"
            write_field_csv(snap, out / name)
            files.append(name)
        g = self.snapshots[0].grid
        manifest = {
            "times": [float(t) for t in self.times],
            "files": files,
            "grid": {"lambda": g.lam, "n_points": g.n_points},
            "config": asdict(self.config),
            "mass_drift": self.mass_drift,
            **self.diagnostics,
            **(extra or {}),
        }
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2))
        return path


class DNLSStepper:
    """IF-RK4 stepper working on FFT-ordered spectra in the 1/sqrt(2 pi) normalization.

    The linear flow exp(-i xi^2 t) is applied exactly; RK4 handles the
    interaction-picture nonlinearity.
    """

    def __init__(self, grid: TorusGrid, dt: float, dealias_fraction: float = 2.0 / 3.0,
                 cubic: bool = True):
        self.grid = grid
        self.dt = dt
        self.cubic = cubic
        n = grid.n_points
        k = np.fft.fftfreq(n, d=1.0 / n)
        self.xi = k / grid.lam
        self.ik = 1j * self.xi
        self.ik[n // 2] = 0.0
        self.mask = (np.abs(k) <= dealias_fraction * (n // 2)).astype(float)
        self.mask[n // 2] = 0.0
        self.half = np.exp(-0.5j * self.xi ** 2 * dt)
        self.full = self.half ** 2
        self._to_phys = n / (SQRT_2PI * grid.lam)
        self._to_spec = grid.dx / SQRT_2PI

    def nonlinear(self, qh: np.ndarray) -> np.ndarray:
        """Spectrum of -(|q|^2 q)_x, dealiased."""
        if not self.cubic:
            return np.zeros_like(qh)
        q = np.fft.ifft(qh) * self._to_phys
        cube = np.fft.fft(np.abs(q) ** 2 * q) * self._to_spec
        return -self.ik * self.mask * cube

    def step(self, qh: np.ndarray) -> np.ndarray:
        dt, E, E2, N = self.dt, self.half, self.full, self.nonlinear
        k1 = dt * N(qh)
        k2 = dt * N(E * (qh + 0.5 * k1))
        k3 = dt * N(E * qh + 0.5 * k2)
        k4 = dt * N(E2 * qh + E * k3)
        return E2 * qh + (E2 * k1 + 2.0 * E * (k2 + k3) + k4) / 6.0

    def to_fft(self, f: Field) -> np.ndarray:
        return np.fft.ifftshift(f.spectrum)

    def to_field(self, qh: np.ndarray) -> Field:
        return self.grid.field_from_spectrum(np.fft.fftshift(qh))


def rhs_nonlinear(q: Field, dealias_fraction: float = 2.0 / 3.0) -> Field:
    """The term -(|q|^2 q)_x of q_t, formed pointwise, differentiated and dealiased."""
    st = DNLSStepper(q.grid, 1.0, dealias_fraction)
    return st.to_field(st.nonlinear(st.to_fft(q)))


def step(q: Field, dt: float, dealias_fraction: float = 2.0 / 3.0) -> Field:
    st = DNLSStepper(q.grid, dt, dealias_fraction)
    qh = st.step(st.to_fft(q))
    if not np.all(np.isfinite(qh)):
        raise SolverInstabilityError(dt, 1)
    return st.to_field(qh)


def evolve(q0: Field, cfg: SolverConfig, check_every: int = 100) -> Trajectory:
    cfg.validate_for(q0.grid)
    st = DNLSStepper(q0.grid, cfg.dt, cfg.dealias_fraction, cfg.cubic)
    qh = st.to_fft(q0)
    times, snaps = [0.0], [q0]
    mass0 = np.sum(np.abs(qh) ** 2)
    for i in range(1, cfg.n_steps + 1):
        qh = st.step(qh)
        if i % check_every == 0 or i % cfg.snapshot_stride == 0:
            if not np.all(np.isfinite(qh)):
                raise SolverInstabilityError(i * cfg.dt, i)
        if i % cfg.snapshot_stride == 0:
            times.append(i * cfg.dt)
            snaps.append(st.to_field(qh))
    masses = np.array([np.sum(np.abs(s.spectrum) ** 2) for s in snaps])
    drift = float(np.max(np.abs(masses - mass0)) / mass0) if mass0 > 0 else 0.0
    log.debug("evolve: %d steps, relative mass drift %.3g", cfg.n_steps, drift)
    return Trajectory(np.array(times), snaps, cfg, drift)


def conserved_quantities(q: Field) -> dict:
    """Mass, momentum and energy

        M = int |q|^2,   P = int j - |q|^4 / 2,
        E = int |q_x|^2 - 3/2 |q|^2 j + |q|^6 / 2,

    with current density j = Im(q conj(q_x)) = -Im(conj(q) q_x).  This is the
    sign under which P and E are invariants of q_t = i q_xx - (|q|^2 q)_x;
    with j = Im(conj(q) q_x) neither is conserved.  Spectral q_x, periodic
    trapezoid rule.
    """
    dx = q.grid.dx
    u = q.values
    ux = derivative(q).values
    dens = np.abs(u) ** 2
    im = np.imag(u * np.conj(ux))
    M = dx * np.sum(dens)
    P = dx * np.sum(im - 0.5 * dens ** 2)
    E = dx * np.sum(np.abs(ux) ** 2 - 1.5 * dens * im + 0.5 * dens ** 3)
    return {"M": float(M), "P": float(P), "E": float(E)}


def rescale(q: Field, lam: float, n_points: int | None = None) -> Field:
    """Scaling map q -> lam^{-1/2} q(x / lam) from T_1 to T_lam (at t = 0).

    On the Fourier side the coefficient at integer index k moves from
    xi = k to xi = k / lam and is multiplied by sqrt(lam).
    """
    if q.grid.lam != 1.0:
        raise ValueError("rescale expects a field on T_1")
    if n_points is None:
        n_points = q.grid.n_points * (1 << max(0, math.ceil(math.log2(lam))))
    target = make_grid(lam, n_points)
    k = q.grid.indices
    lost = np.abs(q.spectrum[(k < -(n_points // 2)) | (k >= n_points // 2)]) ** 2
    if lost.sum() > 1e-28 * max(np.sum(np.abs(q.spectrum) ** 2), 1e-300):
        raise ValueError(f"target grid with n_points={n_points} cannot resolve the rescaled spectrum")
    spec = np.zeros(n_points, dtype=complex)
    offset = n_points // 2 - q.grid.n_points // 2
    lo = max(0, -offset)
    hi = q.grid.n_points - max(0, -offset)
    spec[offset + lo: offset + hi] = q.spectrum[lo:hi] * math.sqrt(lam)
    return target.field_from_spectrum(spec)
