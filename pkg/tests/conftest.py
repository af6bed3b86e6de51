import math

import numpy as np
import pytest

from dnls_lab import make_grid, weight_w


def band_limited(grid, rng, bandwidth, l2=None):
    """Random complex field with modes |xi| <= bandwidth; optionally scaled to L^2 norm ``l2``."""
    sel = np.abs(grid.modes) <= bandwidth
    spec = np.zeros(grid.n_points, dtype=complex)
    spec[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    f = grid.field_from_spectrum(spec)
    if l2 is not None:
        from dnls_lab import l2_norm
        f = f * (l2 / l2_norm(f))
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid64():
    return make_grid(1, 64)


def shell_sup_w(a, b, N):
    """sup of w(., N) over a <= |xi| <= b (w increases in xi^2 up to 2 N^2)."""
    peak = math.sqrt(2) * N
    if a <= peak <= b:
        return 1 / 12
    return max(weight_w(a, N), weight_w(b, N))


def schur_constant(s, levels_z, levels_b):
    """Schur-test bound C in ||Z blocks||_r <= C ||Besov blocks||_r, valid for every r.

    Block N of Z is at most sum_M (N / M)^s sqrt(sup_{shell M} w(., N)) times
    Besov block M; C is the larger of the row and column sums of that kernel.
    """
    K = np.zeros((len(levels_z), len(levels_b)))
    for i, N in enumerate(levels_z):
        for j, M in enumerate(levels_b):
            a, b = (0.0, 1.0) if M == 1 else (M / 2, M)
            K[i, j] = (N / M) ** s * math.sqrt(shell_sup_w(a, b, N))
    return max(K.sum(axis=0).max(), K.sum(axis=1).max())


# One summary line per acceptance criterion, printed after the test run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
