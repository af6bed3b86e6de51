"""Fourier-basis operator matrices and the perturbation determinant series.

Operators act on coefficient vectors in the orthonormal basis
e_xi(x) = exp(i x xi) / sqrt(2 pi lambda), xi in Z / lambda.  In that basis

    multiplication by q        M[xi, eta] = qhat(xi - eta) / (sqrt(2 pi) lambda)
    (d -+ kappa)^{-1}          diag 1 / (i xi -+ kappa)

and the series terms are built from

    T = (kappa - d)^{-1} q (kappa + d)^{-1} conj(q),
    alpha_l = c_l * tr(T^l),   c_l = -i^{l+1} kappa^l / l,

normalized so that alpha_1 is the positive closed form of
:func:`leading_term_exact`.  The determinant is alpha = Re sum_l alpha_l.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .fourier import SQRT_2PI, Field, derivative, make_grid


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix over the symmetric mode set {k / lam : |k| <= K}."""

    lam: float
    indices: np.ndarray = field(repr=False)
    entries: np.ndarray = field(repr=False)

    @property
    def modes(self) -> np.ndarray:
        return self.indices / self.lam

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(self.lam, self.indices, self.entries @ other.entries)

    def __add__(self, other):
        self._check_compatible(other)
        return OperatorMatrix(self.lam, self.indices, self.entries + other.entries)

    def __sub__(self, other):
        self._check_compatible(other)
        return OperatorMatrix(self.lam, self.indices, self.entries - other.entries)

    def __mul__(self, c):
        return OperatorMatrix(self.lam, self.indices, self.entries * c)

    __rmul__ = __mul__

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.lam, self.indices, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def _check_compatible(self, other):
        if other.lam != self.lam or other.indices.shape != self.indices.shape:
            raise ValueError("operator matrices live on different mode sets")


def mode_set(lam: float, radius: float) -> np.ndarray:
    """Integer indices k with |k / lam| <= radius."""
    K = int(math.floor(radius * lam + 1e-9))
    return np.arange(-K, K + 1)


def _coefficients(q: Field, offsets: np.ndarray) -> np.ndarray:
    """qhat at integer offsets, zero outside the grid's band."""
    k = q.grid.indices
    out = np.zeros(offsets.shape, dtype=complex)
    ok = (offsets >= k[0]) & (offsets <= k[-1])
    out[ok] = q.spectrum[offsets[ok] - k[0]]
    return out


def multiplication_matrix(q: Field, indices: np.ndarray) -> OperatorMatrix:
    """Fourier-side matrix of f -> q f on the mode set ``indices`` (consecutive integers)."""
    indices = np.asarray(indices)
    if indices.size and np.any(np.diff(indices) != 1):
        raise ValueError("mode set must be consecutive integer indices on Z / lambda")
    d = np.arange(indices.size)
    scale = 1.0 / (SQRT_2PI * q.grid.lam)
    col = _coefficients(q, d) * scale
    row = _coefficients(q, -d) * scale
    return OperatorMatrix(q.grid.lam, indices, toeplitz(col, row))


def resolvent_symbol(kappa: float, sign: str, power: float, xi: np.ndarray) -> np.ndarray:
    """Fourier symbol of (d - kappa)^{-1} / (d + kappa)^{-1} (power -1) or of
    (kappa - d)^{-1/2} / (kappa + d)^{-1/2} (power -1/2, principal branch).

    ``sign`` is the sign in front of kappa for power -1 and in front of d for
    power -1/2, matching how each family is written.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    s = 1.0 if sign == "+" else -1.0
    xi = np.asarray(xi, dtype=float)
    if power == -1:
        return 1.0 / (1j * xi + s * kappa)
    if power == -0.5:
        return (kappa + s * 1j * xi + 0j) ** -0.5
    raise ValueError("power must be -1 or -1/2")


def resolvent_matrix(kappa: float, sign: str, power: float, indices: np.ndarray,
                     lam: float) -> OperatorMatrix:
    indices = np.asarray(indices)
    sym = resolvent_symbol(kappa, sign, power, indices / lam)
    return OperatorMatrix(lam, indices, np.diag(sym))


def circle_factor(lam: float, kappa: float) -> float:
    """C(lam, kappa) = (1 + e^{-2 pi lam kappa}) / (1 - e^{-2 pi lam kappa}); 1 on the line."""
    if math.isinf(lam):
        return 1.0
    e = math.exp(-2.0 * math.pi * lam * kappa)
    return (1.0 + e) / (1.0 - e)


# --- the T operator and its traces --------------------------------------------

def _t_matrix(q: Field, kappa: float, indices: np.ndarray, pairing: str = "conj") -> np.ndarray:
    lam = q.grid.lam
    xi = indices / lam
    Mq = multiplication_matrix(q, indices).entries
    if pairing == "conj":
        Mq2 = Mq.conj().T
    elif pairing == "plain":
        Mq2 = Mq
    else:
        raise ValueError("pairing must be 'conj' or 'plain'")
    left = 1.0 / (kappa - 1j * xi)
    right = 1.0 / (kappa + 1j * xi)
    return (left[:, None] * Mq * right[None, :]) @ Mq2


def _diagonal_tail(q: Field, kappa: float, K: int) -> complex:
    """Asymptotic sum of the diagonal of T over |k| > K.

    With u_m the basis coefficients of q,
    T[xi, xi] = sum_m |u_m|^2 / ((kappa - i xi)(kappa + i xi - i m)); pairing
    +-xi and expanding in 1/xi leaves 1/(kappa^2 + xi^2) + (m^2 + i m kappa)/xi^4
    per unit |u_m|^2.  Lattice sums use the midpoint rule.
    """
    lam = q.grid.lam
    a = lam * kappa
    w = np.abs(q.spectrum) ** 2 / (2.0 * math.pi * lam ** 2)
    m = q.grid.modes
    lead = 2.0 * lam ** 2 * (0.5 * math.pi - math.atan((K + 0.5) / a)) / a
    quart = 2.0 * lam ** 4 / (3.0 * (K + 0.5) ** 3)
    return complex(np.sum(w) * lead + np.sum(w * (m ** 2 + 1j * m * kappa)) * quart)


def _raw_traces(q: Field, kappa: float, l_max: int, radius: float,
                pairing: str = "conj") -> tuple[np.ndarray, np.ndarray]:
    """tr(T^l), l = 1..l_max, over the inner block |xi| <= radius.

    The matrices live on a mode set padded by l_max * bandwidth so the inner
    diagonal entries are exact; only the tail |xi| > radius is missing.
    Returns (raw traces, traces with the l = 1 tail estimate added).
    """
    lam = q.grid.lam
    band = q.bandwidth()
    inner = mode_set(lam, radius)
    outer = mode_set(lam, radius + l_max * band + 1.0 / lam)
    T = _t_matrix(q, kappa, outer, pairing)
    sel = np.isin(outer, inner)
    traces = np.empty(l_max, dtype=complex)
    P = T
    for l in range(1, l_max + 1):
        if l > 1:
            P = P @ T
        traces[l - 1] = np.trace(P[np.ix_(sel, sel)])
    corrected = traces.copy()
    if pairing == "conj":
        corrected[0] += _diagonal_tail(q, kappa, int(inner[-1]))
    return traces, corrected


def series_coefficient(l: int, kappa: float) -> complex:
    return -(1j ** (l + 1)) * kappa ** l / l


def _check_truncation(q: Field, l: int, radius: float):
    # The working mode set is padded by l * bandwidth; the inner block must
    # still cover the band of q itself.
    band = q.bandwidth()
    if l < 1 or radius < band:
        raise ValueError(
            f"truncation radius {radius} too small for order {l} and bandwidth {band}")


def default_radius(q: Field, l_max: int) -> float:
    return max(64.0 / q.grid.lam, 8.0 * l_max * q.bandwidth())


def alpha_term(q: Field, kappa: float, l: int, truncation_radius: float | None = None,
               pairing: str = "conj", tail_correction: bool = True) -> complex:
    """The l-th series term c_l tr(T^l) (complex; the determinant takes real parts).

    For l = 1 the slowly decaying diagonal tail beyond the truncation radius
    is added from its leading asymptotics unless ``tail_correction`` is off.
    """
    if l < 1:
        raise ValueError("l must be a positive integer")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if truncation_radius is None:
        truncation_radius = default_radius(q, l)
    _check_truncation(q, l, truncation_radius)
    raw, corr = _raw_traces(q, kappa, l, truncation_radius, pairing)
    tr = corr[l - 1] if tail_correction else raw[l - 1]
    return series_coefficient(l, kappa) * tr


@dataclass
class TraceSeries:
    kappa: float
    terms: np.ndarray
    partial_sums_real: np.ndarray
    ratio_estimate: float
    converged: bool
    tail_bound: float
    truncation_radius: float
    truncation_sensitivity: float = float("nan")

    @property
    def alpha(self) -> float:
        return float(self.partial_sums_real[-1]) if len(self.partial_sums_real) else 0.0

    @property
    def alpha_complex(self) -> complex:
        return complex(np.sum(self.terms))

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "terms": [{"l": i + 1, "re": float(t.real), "im": float(t.imag)}
                      for i, t in enumerate(self.terms)],
            "alpha": self.alpha,
            "ratio_estimate": self.ratio_estimate,
            "tail_bound": self.tail_bound,
            "truncation_radius": self.truncation_radius,
            "truncation_sensitivity": self.truncation_sensitivity,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def geometric_ratio(terms: np.ndarray) -> float:
    """Largest successive ratio |a_{l+1}| / |a_l| over the last three pairs."""
    mags = np.abs(np.asarray(terms))
    if mags.size < 2 or mags[0] == 0.0:
        return 0.0
    pairs = [(mags[i + 1], mags[i]) for i in range(max(0, mags.size - 4), mags.size - 1)]
    ratios = [a / b if b > 0 else (math.inf if a > 0 else 0.0) for a, b in pairs]
    return float(max(ratios))


def alpha_series(q: Field, kappa: float, tol: float = 1e-14, l_max: int = 8,
                 truncation_radius: float | None = None, tail_tol: float = 1e-6,
                 sensitivity: bool = False) -> TraceSeries:
    """Evaluate the series until the geometric tail estimate drops below
    ``tol`` (relative to |alpha_1|) or ``l_max`` terms are used.

    ``converged`` needs ratio < 1 and a tail estimate within ``tail_tol``
    relative to |alpha_1|; leaving the small-data regime shows up as
    ``converged=False``, not as an exception.
    """
    if l_max < 3:
        raise ValueError("l_max must be at least 3")
    if truncation_radius is None:
        truncation_radius = default_radius(q, l_max)
    _check_truncation(q, l_max, truncation_radius)
    if not np.any(q.spectrum):
        z = np.zeros(1, dtype=complex)
        return TraceSeries(kappa, z, np.zeros(1), 0.0, True, 0.0, truncation_radius, 0.0)
    _, tr = _raw_traces(q, kappa, l_max, truncation_radius)
    terms = np.array([series_coefficient(l, kappa) * tr[l - 1] for l in range(1, l_max + 1)])
    scale = abs(terms[0])
    used = l_max
    for L in range(3, l_max + 1):
        r = geometric_ratio(terms[:L])
        if r < 1 and abs(terms[L - 1]) / (1 - r) <= tol * scale:
            used = L
            break
    terms = terms[:used]
    ratio = geometric_ratio(terms)
    tail = abs(terms[-1]) / (1.0 - ratio) if ratio < 1 else math.inf
    converged = bool(ratio < 1 and tail <= tail_tol * scale)
    sens = float("nan")
    if sensitivity:
        half = alpha_series(q, kappa, tol, l_max,
                            max(truncation_radius / 2, q.bandwidth()), tail_tol)
        sens = abs(half.alpha - float(np.sum(terms).real))
    return TraceSeries(kappa, terms, np.cumsum(terms.real), ratio, converged, tail,
                       truncation_radius, sens)


# --- closed forms ---------------------------------------------------------------

def leading_term_exact(q: Field, kappa: float, lam: float | None = None) -> float:
    """Closed-form alpha_1:  C(lam, kappa) * (1/lam) sum_xi 2 kappa^2 |qhat|^2 / (4 kappa^2 + xi^2).

    ``lam=math.inf`` drops the circle factor (line limit).
    """
    grid_lam = q.grid.lam
    lam = grid_lam if lam is None else lam
    if kappa < 1 or lam < 1:
        raise ValueError("closed form requires kappa >= 1 and lambda >= 1")
    xi = q.grid.modes
    s = np.sum(2 * kappa ** 2 * np.abs(q.spectrum) ** 2 / (4 * kappa ** 2 + xi ** 2)) / grid_lam
    return float(circle_factor(lam, kappa) * s)


@dataclass(frozen=True)
class HSNorm:
    symbol_sum: float
    frobenius_sq: float

    @property
    def ratio(self) -> float:
        return self.frobenius_sq / self.symbol_sum if self.symbol_sum else float("nan")


def half_sandwich(q: Field, kappa: float, indices: np.ndarray, conj: bool = False,
                  scaled: bool = False) -> OperatorMatrix:
    """(kappa - d)^{-1/2} q (kappa + d)^{-1/2}, or with ``conj`` the mirrored
    (kappa + d)^{-1/2} conj(q) (kappa - d)^{-1/2}; times sqrt(kappa) if ``scaled``."""
    lam = q.grid.lam
    xi = indices / lam
    M = multiplication_matrix(q, indices).entries
    a = resolvent_symbol(kappa, "-", -0.5, xi)
    b = resolvent_symbol(kappa, "+", -0.5, xi)
    if conj:
        a, b, M = b, a, M.conj().T
    out = a[:, None] * M * b[None, :]
    if scaled:
        out = out * math.sqrt(kappa)
    return OperatorMatrix(lam, indices, out)


def hs_norm_sq(q: Field, kappa: float, lam: float | None = None,
               truncation_radius: float | None = None) -> HSNorm:
    """Symbol sum (1/lam) sum log(4 + xi^2/kappa^2) |qhat|^2 / sqrt(4 kappa^2 + xi^2)
    together with the squared Frobenius norm of the truncated half-resolvent sandwich."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    lam = q.grid.lam if lam is None else lam
    xi = q.grid.modes
    s = np.sum(np.log(4 + xi ** 2 / kappa ** 2) * np.abs(q.spectrum) ** 2
               / np.sqrt(4 * kappa ** 2 + xi ** 2)) / lam
    if truncation_radius is None:
        truncation_radius = default_radius(q, 4)
    A = half_sandwich(q, kappa, mode_set(q.grid.lam, truncation_radius)).entries
    return HSNorm(float(s), float(np.sum(np.abs(A) ** 2)))


def schatten_norm(A, p: float) -> float:
    """l^p norm of the singular values (operator norm for p = inf)."""
    if p < 1:
        raise ValueError(f"Schatten index must be >= 1, got {p}")
    M = A.entries if isinstance(A, OperatorMatrix) else np.asarray(A)
    s = np.linalg.svd(M, compute_uv=False)
    if math.isinf(p):
        return float(s.max()) if s.size else 0.0
    return float(np.sum(s ** p) ** (1.0 / p))


# --- operator identities used in the conservation argument --------------------------

def _product_field(q: Field, kind: str) -> Field:
    """|q|^2 q or |q|^2 conj(q), computed alias-free on a refined grid."""
    n = q.grid.n_points
    fine = make_grid(q.grid.lam, 4 * n)
    spec = np.zeros(4 * n, dtype=complex)
    spec[3 * n // 2: 5 * n // 2] = q.spectrum
    f = fine.field_from_spectrum(spec)
    u = f.values
    vals = np.abs(u) ** 2 * (u if kind == "q" else np.conj(u))
    return fine.field_from_values(vals)


def verify_operator_identities(q: Field, kappa: float,
                               truncation_radius: float | None = None) -> dict:
    """Max entry-wise discrepancy of the four operator identities

        (|q|^2 q)_x      = (d - k) G - G (d + k) + 2k G,            G = |q|^2 q
        (|q|^2 qbar)_x   = (d + k) H - H (d - k) - 2k H,            H = |q|^2 qbar
        q_xx             = Q (d^2 - 2k d - k^2) + (d^2 + 2k d - k^2) Q + 2 (k - d) Q (k + d)
        qbar_xx          = (d^2 - 2k d - k^2) Qb + Qb (d^2 + 2k d - k^2) + 2 (k + d) Qb (k - d)

    on the interior block of a truncated mode set (boundary rows/columns dropped).
    """
    if truncation_radius is None:
        truncation_radius = max(16.0 / q.grid.lam, 4.0 * q.bandwidth())
    lam = q.grid.lam
    idx = mode_set(lam, truncation_radius)
    xi = idx / lam
    Dd = np.diag(1j * xi)
    Id = np.eye(idx.size)
    k = kappa

    G = _product_field(q, "q")
    H = _product_field(q, "qbar")
    qb = q.conj()
    mat = lambda f: multiplication_matrix(f, idx).entries  # noqa: E731

    MG, MH, MQ, MQb = mat(G), mat(H), mat(q), mat(qb)
    D2 = Dd @ Dd
    checks = {
        "cubic_q": (mat(derivative(G)),
                    (Dd - k * Id) @ MG - MG @ (Dd + k * Id) + 2 * k * MG),
        "cubic_qbar": (mat(derivative(H)),
                       (Dd + k * Id) @ MH - MH @ (Dd - k * Id) - 2 * k * MH),
        "qxx": (mat(derivative(q, 2)),
                MQ @ (D2 - 2 * k * Dd - k ** 2 * Id) + (D2 + 2 * k * Dd - k ** 2 * Id) @ MQ
                + 2 * (k * Id - Dd) @ MQ @ (k * Id + Dd)),
        "qbar_xx": (mat(derivative(qb, 2)),
                    (D2 - 2 * k * Dd - k ** 2 * Id) @ MQb + MQb @ (D2 + 2 * k * Dd - k ** 2 * Id)
                    + 2 * (k * Id + Dd) @ MQb @ (k * Id - Dd)),
    }
    margin = 1
    inner = slice(margin, idx.size - margin)
    out = {}
    for name, (lhs, rhs) in checks.items():
        diff = np.abs(lhs - rhs)[inner, inner]
        scale = max(np.abs(lhs).max(), 1e-300)
        out[name] = {"abs": float(diff.max()), "rel": float(diff.max() / scale)}
    out["max_abs"] = max(v["abs"] for v in out.values())
    return out
