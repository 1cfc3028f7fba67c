"""Rectangular (omega_s, omega_i) sampling grids and sampled JSF containers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Diagnostic, DomainError
from .units import C

MIN_POINTS = 16


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform angular-frequency axes for signal (rows) and idler (columns)."""

    omega_s_axis: np.ndarray
    omega_i_axis: np.ndarray

    def __post_init__(self):
        for name in ("omega_s_axis", "omega_i_axis"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or axis.size < MIN_POINTS:
                raise DomainError(f"{name} needs at least {MIN_POINTS} samples")
            step = np.diff(axis)
            if np.any(step <= 0):
                raise DomainError(f"{name} must be strictly increasing")
            if np.ptp(step) > 1e-9 * abs(step.mean()):
                raise DomainError(f"{name} must be uniformly spaced")
            axis.setflags(write=False)
            object.__setattr__(self, name, axis)

    @classmethod
    def from_omega_bounds(cls, s_lo, s_hi, i_lo, i_hi, n_s: int, n_i: int | None = None):
        n_i = n_s if n_i is None else n_i
        return cls(np.linspace(s_lo, s_hi, n_s), np.linspace(i_lo, i_hi, n_i))

    @classmethod
    def from_wavelength_window(cls, lambda_lo: float, lambda_hi: float, n: int,
                               idler_window: tuple[float, float] | None = None,
                               n_i: int | None = None):
        """Grid uniform in frequency spanning a wavelength window (m) on both axes."""
        if not 0 < lambda_lo < lambda_hi:
            raise DomainError("wavelength window must satisfy 0 < lo < hi")
        w_lo, w_hi = 2 * math.pi * C / lambda_hi, 2 * math.pi * C / lambda_lo
        if idler_window is None:
            i_lo, i_hi = w_lo, w_hi
        else:
            i_lo, i_hi = 2 * math.pi * C / idler_window[1], 2 * math.pi * C / idler_window[0]
        return cls.from_omega_bounds(w_lo, w_hi, i_lo, i_hi, n, n_i)

    @classmethod
    def centered(cls, omega0: float, half_span: float, n: int):
        """Square grid of ``n`` points per axis over ``omega0 +- half_span``."""
        return cls.from_omega_bounds(omega0 - half_span, omega0 + half_span,
                                     omega0 - half_span, omega0 + half_span, n)

    @property
    def n_s(self) -> int:
        return self.omega_s_axis.size

    @property
    def n_i(self) -> int:
        return self.omega_i_axis.size

    @property
    def d_omega_s(self) -> float:
        return float((self.omega_s_axis[-1] - self.omega_s_axis[0]) / (self.n_s - 1))

    @property
    def d_omega_i(self) -> float:
        return float((self.omega_i_axis[-1] - self.omega_i_axis[0]) / (self.n_i - 1))

    @property
    def cell_area(self) -> float:
        return self.d_omega_s * self.d_omega_i

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable (n_s, 1) and (1, n_i) views of the axes."""
        return self.omega_s_axis[:, None], self.omega_i_axis[None, :]

    def refined(self, factor: int = 2) -> "SpectralGrid":
        """Same bounds with ``factor`` times the sample count per axis."""
        return SpectralGrid.from_omega_bounds(
            self.omega_s_axis[0], self.omega_s_axis[-1],
            self.omega_i_axis[0], self.omega_i_axis[-1],
            self.n_s * factor, self.n_i * factor,
        )


def pairwise_sum(values: np.ndarray) -> float:
    """Sum with numpy's pairwise tree over a flattened contiguous copy.

    Using one fixed layout keeps the result independent of how the array was
    produced.
    """
    return float(np.sum(np.ascontiguousarray(values).ravel()))


@dataclass(frozen=True)
class JsfGrid:
    """Complex JSF samples indexed ``values[s, i]``."""

    grid: SpectralGrid
    values: np.ndarray
    normalized: bool = False
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_s, self.grid.n_i):
            raise DomainError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.n_s}, {self.grid.n_i})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def norm2(self) -> float:
        """Quadrature of |F|^2 over the grid."""
        return pairwise_sum(np.abs(self.values) ** 2) * self.grid.cell_area

    def weighted(self) -> np.ndarray:
        """Values with the midpoint quadrature weight sqrt(dws*dwi) folded in."""
        return self.values * math.sqrt(self.grid.cell_area)

    def normalize(self) -> "JsfGrid":
        mass = self.norm2
        if not mass > 0:
            raise DomainError("cannot normalize an all-zero JSF")
        return JsfGrid(self.grid, self.values / math.sqrt(mass), True, self.diagnostics)

    def with_diagnostics(self, *extra: Diagnostic) -> "JsfGrid":
        return JsfGrid(self.grid, self.values, self.normalized, self.diagnostics + tuple(extra))
