"""High-gain Green functions of a multimode parametric amplifier.

Kernels are held as quadrature-weighted matrices so operator composition is
a plain matrix product: with ``M = F * sqrt(dws * dwi)`` the signal-side
transfer functions are

    h2s = sum_n G^(2n+1)/(2n+1)! (M M^H)^n M
    h1s = I + sum_(n>=1) G^(2n)/(2n)! (M M^H)^n

and the idler side uses ``M^T M^*`` in place of ``M M^H``. The identity part
of h1 is never materialized on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Diagnostic, DomainError, UndefinedMetricError
from .grid import JsfGrid, SpectralGrid
from .metrics import FilterSpec
from .schmidt import SchmidtDecomposition

DEFAULT_ORDER = 40
CONVERGENCE_TOL = 1e-9


@dataclass(frozen=True)
class GreenFunctions:
    """Weighted high-gain kernels on a spectral grid.

    ``h1s_smooth`` and ``h1i_smooth`` exclude the identity; the full h1
    operators are ``I + h1*_smooth``. ``truncation_order`` is the number of
    series terms summed, or None for the closed form.
    """

    gain: float
    grid: SpectralGrid
    h1s_smooth: np.ndarray
    h2s: np.ndarray
    h1i_smooth: np.ndarray
    h2i: np.ndarray
    truncation_order: int | None = None
    diagnostics: tuple = field(default=())

    identity_flag = True

    def kernel(self, name: str) -> np.ndarray:
        """Kernel as a function of frequency (quadrature weights removed)."""
        g = self.grid
        if name == "h2s":
            return self.h2s / math.sqrt(g.cell_area)
        if name == "h2i":
            return self.h2i / math.sqrt(g.cell_area)
        if name == "h1s":
            return self.h1s_smooth / g.d_omega_s
        if name == "h1i":
            return self.h1i_smooth / g.d_omega_i
        raise DomainError(f"unknown kernel {name!r}")


class _Kahan:
    """Compensated running sum of equally shaped arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape, dtype=complex)
        self.comp = np.zeros(shape, dtype=complex)

    def add(self, term: np.ndarray):
        y = term - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t


def _weighted_normalized(jsf: JsfGrid) -> np.ndarray:
    if not jsf.normalized:
        raise DomainError("high-gain kernels need a normalized JSF")
    return jsf.weighted()


def _series(gram: np.ndarray, seed: np.ndarray, gain: float, order: int, odd: bool):
    """Sum ``order`` factorial-scaled terms, starting from ``seed``.

    For the odd series the n-th term is G^(2n+1)/(2n+1)! gram^n seed; for the
    even series it is G^(2n)/(2n)! gram^(n-1) seed with n starting at 1.
    Returns the sum and the relative norm of the first omitted term.
    """
    acc = _Kahan(seed.shape)
    term = seed * (gain if odd else gain**2 / 2)
    for n in range(order):
        acc.add(term)
        if odd:
            denom = (2 * n + 2) * (2 * n + 3)
        else:
            denom = (2 * n + 3) * (2 * n + 4)
        term = gain**2 * (gram @ term) / denom
    total_norm = np.linalg.norm(acc.total)
    rel = float(np.linalg.norm(term) / total_norm) if total_norm > 0 else 0.0
    return acc.total, rel


def green_series(jsf: JsfGrid, gain: float, order: int = DEFAULT_ORDER) -> GreenFunctions:
    """Green functions from the truncated power series in the gain.

    Parameters
    ----------
    jsf : JsfGrid
        Normalized JSF.
    gain : float
        Dimensionless gain G >= 0.
    order : int
        Number of series terms kept for each kernel.
    """
    if order < 1:
        raise DomainError("order must be at least 1")
    if gain < 0:
        raise DomainError("gain must be non-negative")
    m = _weighted_normalized(jsf)
    p_s = m @ m.conj().T
    p_i = m.T @ m.conj()
    h2s, rel_2 = _series(p_s, m, gain, order, odd=True)
    h1s, rel_1s = _series(p_s, p_s, gain, order, odd=False)
    h1i, rel_1i = _series(p_i, p_i, gain, order, odd=False)
    worst = max(rel_2, rel_1s, rel_1i)
    diags = []
    if worst > CONVERGENCE_TOL:
        diags.append(Diagnostic(
            "convergence", f"next series term is {worst:.3g} of the partial sum; raise the order",
            {"relative_next_term": worst, "order": order, "gain": gain}))
    return GreenFunctions(gain, jsf.grid, h1s, h2s, h1i, h2s.T.copy(), order, tuple(diags))


def series_tail(jsf: JsfGrid, gain: float, order: int = DEFAULT_ORDER) -> float:
    """Relative norm of the first omitted h2s term."""
    m = _weighted_normalized(jsf)
    return _series(m @ m.conj().T, m, gain, order, odd=True)[1]


def green_closed_form(dec: SchmidtDecomposition, grid: SpectralGrid, gain: float) -> GreenFunctions:
    """Green functions from the Schmidt modes: sinh and cosh of G r_k.

    ``dec`` must retain every mode with a nonzero coefficient, so decompose
    with ``rank="full"``.
    """
    rank = dec.truncation_rank
    if np.any(dec.coefficients[rank:] > 1e-14):
        raise DomainError("closed form needs the full-rank decomposition")
    r = dec.coefficients[:rank]
    u = dec.signal_modes * math.sqrt(grid.d_omega_s)
    v = dec.idler_modes * math.sqrt(grid.d_omega_i)
    sh, ch = np.sinh(gain * r), np.cosh(gain * r) - 1.0
    h2s = (u * sh) @ v.T
    h1s = (u * ch) @ u.conj().T
    h1i = (v * ch) @ v.conj().T
    return GreenFunctions(gain, grid, h1s, h2s, h1i, h2s.T.copy(), None, ())


def commutator_residual(gf: GreenFunctions, side: str = "signal") -> float:
    """Frobenius norm of h1 h1^H - h2 h2^H - I with h1 = I + smooth part."""
    h1, h2 = (gf.h1s_smooth, gf.h2s) if side == "signal" else (gf.h1i_smooth, gf.h2i)
    # (I + S)(I + S)^H - I = S + S^H + S S^H
    res = h1 + h1.conj().T + h1 @ h1.conj().T - h2 @ h2.conj().T
    return float(np.linalg.norm(res))


def relative_difference(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def highgain_mode_indices(gf: GreenFunctions, filt: FilterSpec) -> np.ndarray:
    """Normalized singular values of the filtered h2s, descending, unit sum of squares."""
    g = gf.grid
    f_s = filt.transmission(g.omega_s_axis, "signal")
    f_i = filt.transmission(g.omega_i_axis, "idler")
    ks, ki = f_s != 0, f_i != 0
    block = gf.h2s[np.ix_(ks, ki)] * f_s[ks, None] * f_i[None, ki]
    if block.size == 0:
        raise UndefinedMetricError("filters transmit nothing")
    s = np.linalg.svd(block, compute_uv=False)
    total = math.sqrt(float(np.sum(s**2)))
    if not total > 0:
        raise UndefinedMetricError("filtered h2s has zero mass")
    return s / total


def h2s_as_jsf(gf: GreenFunctions) -> JsfGrid:
    """The signal-side h2 kernel as a normalized JSF grid."""
    return JsfGrid(gf.grid, gf.kernel("h2s"), False, gf.diagnostics).normalize()
