"""Dyadic norms on T_lambda: the Z^s_r norm built from the weight w, with
sharp-cutoff Besov and Sobolev norms to compare it against.

All sums are over the lattice Z / lambda with the normalized counting measure,
e.g. ``(1/lam) * sum_xi (1 + xi^2)^s |fhat(xi)|^2`` for H^s squared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fourier import Field, l2_norm
from .traces import alpha_term, circle_factor, leading_term_exact


@dataclass(frozen=True)
class NormParams:
    s: float
    r: float = 2.0
    dyadic_max: int | None = None
    start_exponent: int = 1

    def __post_init__(self):
        if not 0.0 < self.s < 0.5:
            raise ValueError(f"s must lie in (0, 1/2), got {self.s}")
        if not self.r >= 1.0:
            raise ValueError(f"r must lie in [1, inf], got {self.r}")
        if self.dyadic_max is not None:
            d = self.dyadic_max
            if d < 2 or d & (d - 1):
                raise ValueError(f"dyadic_max must be a power of two >= 2, got {d}")
        if self.start_exponent < 0:
            raise ValueError("start_exponent must be >= 0")

    def levels(self, f: Field | None = None) -> np.ndarray:
        """Dyadic N = 2^j, j = start_exponent .. log2(dyadic_max).

        Without an explicit ``dyadic_max`` the sum stops at the first power of
        two at or above the grid Nyquist frequency.
        """
        top = self.dyadic_max
        if top is None:
            if f is None:
                raise ValueError("dyadic_max is unset and no field given")
            top = max(2, 1 << math.ceil(math.log2(max(f.grid.nyquist, 1.0))))
        return 2.0 ** np.arange(self.start_exponent, int(math.log2(top)) + 1)


def weight_w(xi, N):
    """w(xi, N) = N^2 / (xi^2 + 4 N^2) - (N/2)^2 / (xi^2 + N^2)."""
    if np.any(np.asarray(N) <= 0):
        raise ValueError("N must be positive")
    xi2 = np.asarray(xi, dtype=float) ** 2
    return N ** 2 / (xi2 + 4 * N ** 2) - (N / 2) ** 2 / (xi2 + N ** 2)


def weight_w_factored(xi, N):
    xi2 = np.asarray(xi, dtype=float) ** 2
    return 3 * N ** 2 * xi2 / (4 * (xi2 + N ** 2) * (xi2 + 4 * N ** 2))


def _power(f: Field) -> np.ndarray:
    return np.abs(f.spectrum) ** 2 / f.grid.lam


def weighted_pairing(f: Field, N: float) -> float:
    """<f, w(-i d_x, N) f> as a Fourier sum."""
    return float(np.sum(weight_w_factored(f.grid.modes, N) * _power(f)))


def _lr_sum(weights: np.ndarray, blocks: np.ndarray, r: float) -> float:
    """(sum_N weights * blocks^r)^(1/r), sup over N for r = inf; blocks are L^2-sized."""
    if math.isinf(r):
        return float(np.max(weights * blocks)) if blocks.size else 0.0
    return float(np.sum((weights * blocks) ** r) ** (1.0 / r))


def z_norm(f: Field, p: NormParams) -> float:
    N = p.levels(f)
    pair = np.array([weighted_pairing(f, n) for n in N])
    return _lr_sum(N ** p.s, np.sqrt(pair), p.r)


def besov_shells(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """Dyadic levels N = 1, 2, 4, ... and shell norms ||P_N f||_2.

    P_1 keeps |xi| <= 1, P_N keeps N/2 < |xi| <= N for N >= 2.
    """
    xi = np.abs(f.grid.modes)
    top = max(1.0, xi.max())
    N = 2.0 ** np.arange(0, math.ceil(math.log2(top)) + 1)
    power = _power(f)
    shells = np.empty(N.size)
    for i, n in enumerate(N):
        sel = xi <= n if n == 1 else (xi > n / 2) & (xi <= n)
        shells[i] = math.sqrt(np.sum(power[sel]))
    return N, shells


def besov_norm(f: Field, p: NormParams) -> float:
    N, shells = besov_shells(f)
    return _lr_sum(N ** p.s, shells, p.r)


def sobolev_norm(f: Field, s: float) -> float:
    xi = f.grid.modes
    return math.sqrt(np.sum((1 + xi ** 2) ** s * _power(f)))


def z_block_from_alpha(f: Field, N: float, lam: float | None = None, via: str = "closed",
                       truncation_radius: float | None = None) -> float:
    """(1/2) [alpha_1(N) / C(lam, N) - alpha_1(N/2) / C(lam, N/2)].

    ``via="closed"`` evaluates alpha_1 from its Fourier closed form,
    ``via="trace"`` from the truncated operator trace.  ``lam`` only enters
    through the circle factor; ``math.inf`` gives the line version C = 1.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    lam = f.grid.lam if lam is None else lam
    if via == "closed":
        a = leading_term_exact(f, N)
        b = leading_term_exact(f, N / 2)
    elif via == "trace":
        a = alpha_term(f, N, 1, truncation_radius).real
        b = alpha_term(f, N / 2, 1, truncation_radius).real
    else:
        raise ValueError("via must be 'closed' or 'trace'")
    return 0.5 * (a / circle_factor(lam, N) - b / circle_factor(lam, N / 2))


@dataclass
class NormReport:
    s: float
    r: float
    lam: float
    values: dict
    per_block: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"s": self.s, "r": _jsonable_r(self.r), "lambda": self.lam,
                "values": self.values, "per_block": self.per_block}


def _jsonable_r(r):
    return "inf" if math.isinf(r) else r


def norm_report(f: Field, p: NormParams) -> NormReport:
    blocks = []
    for n in p.levels(f):
        if n >= 2:
            blocks.append({"N": float(n), "pairing": weighted_pairing(f, n),
                           "alpha_diff": z_block_from_alpha(f, n)})
    values = {"z": z_norm(f, p), "besov": besov_norm(f, p),
              "sobolev": sobolev_norm(f, p.s), "l2": l2_norm(f)}
    return NormReport(p.s, p.r, f.grid.lam, values, blocks)
