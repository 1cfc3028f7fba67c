"""Schmidt (singular-mode) decomposition of a sampled JSF."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import JsfGrid

DEFAULT_TAIL = 1e-6


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Schmidt coefficients and sampled mode functions.

    ``coefficients`` always holds the full descending vector r_k with
    sum r_k^2 = 1, so K and purity are exact regardless of truncation.
    ``signal_modes[:, k]`` and ``idler_modes[:, k]`` are orthonormal under
    the grid quadrature and only the first ``truncation_rank`` are kept.
    """

    coefficients: np.ndarray
    signal_modes: np.ndarray
    idler_modes: np.ndarray
    omega_s_axis: np.ndarray
    omega_i_axis: np.ndarray
    truncation_rank: int

    @property
    def K(self) -> float:
        return 1.0 / float(np.sum(self.coefficients**4))

    @property
    def purity(self) -> float:
        return float(np.sum(self.coefficients**4))

    def reconstruct(self) -> np.ndarray:
        """Sum_k r_k psi_k(omega_s) phi_k(omega_i) over the retained modes."""
        r = self.coefficients[: self.truncation_rank]
        return (self.signal_modes * r) @ self.idler_modes.T

    def summary(self) -> dict:
        return {
            "r_k": [float(x) for x in self.coefficients[: self.truncation_rank]],
            "K": self.K,
            "g2": g2_from_modes(self),
            "purity": self.purity,
        }


def _gauge(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each mode pair so the signal mode's largest sample is real positive."""
    idx = np.argmax(np.abs(u), axis=0)
    peak = u[idx, np.arange(u.shape[1])]
    phase = np.where(np.abs(peak) > 0, peak / np.where(np.abs(peak) > 0, np.abs(peak), 1), 1)
    return u * phase.conj(), vt * phase[:, None]


def singular_values(values: np.ndarray) -> np.ndarray:
    return np.linalg.svd(values, compute_uv=False)


def schmidt_decompose(jsf: JsfGrid, rank: int | str | None = None,
                      tail: float = DEFAULT_TAIL) -> SchmidtDecomposition:
    """Decompose a JSF into Schmidt modes.

    Parameters
    ----------
    jsf : JsfGrid
        Sampled JSF; it need not be normalized, coefficients are rescaled.
    rank : int, "full" or None
        Number of mode pairs to keep. None keeps modes until the cumulative
        weight sum r_k^2 reaches ``1 - tail``.
    """
    m = jsf.weighted()
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    total = float(np.sum(s**2))
    if not total > 0:
        raise DomainError("cannot decompose an all-zero JSF")
    r = s / math.sqrt(total)
    if rank is None:
        cum = np.cumsum(r**2)
        keep = int(np.searchsorted(cum, 1.0 - tail) + 1)
    elif rank == "full":
        keep = r.size
    else:
        keep = int(rank)
        if keep < 1:
            raise DomainError("rank must be at least 1")
    keep = min(keep, r.size)
    u, vt = _gauge(u[:, :keep], vt[:keep])
    g = jsf.grid
    psi = u / math.sqrt(g.d_omega_s)
    phi = vt.T / math.sqrt(g.d_omega_i)
    # reconstruct() returns F / ||F||, which is F itself for a normalized input
    return SchmidtDecomposition(r, psi, phi, g.omega_s_axis, g.omega_i_axis, keep)


def g2_from_modes(dec: SchmidtDecomposition) -> float:
    """Unheralded auto-correlation 1 + sum r_k^4."""
    return 1.0 + dec.purity


def heralded_purity_unfiltered(dec: SchmidtDecomposition) -> float:
    """Purity of the heralded photon, sum r_k^4 = 1/K."""
    return dec.purity


def schmidt_number(values: np.ndarray) -> float:
    """K of a (weighted) array straight from its singular values."""
    s2 = singular_values(values) ** 2
    s2 = s2 / s2.sum()
    return 1.0 / float(np.sum(s2**2))
