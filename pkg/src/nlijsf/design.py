"""Closed-form design calculators for interferometer layouts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import SMALL_DETUNING, DispersiveMediumSpec, PumpSpec
from .errors import DomainError
from .grid import JsfGrid
from .jsf import IslandWindow


@dataclass(frozen=True)
class DesignQuery:
    m: int
    n_stages: int
    pump: PumpSpec
    dm: DispersiveMediumSpec

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("island index m must be >= 1")
        if self.n_stages < 2:
            raise DomainError("stage count must be >= 2")


def _k2_dm(dm: DispersiveMediumSpec, pump: PumpSpec) -> float:
    if dm.kind != SMALL_DETUNING:
        raise DomainError("needs the small-detuning medium model")
    k2 = dm.k2_at(pump.lambda_p0)
    if k2 == 0:
        raise DomainError("medium dispersion is zero")
    return k2


def round_island_ldm(q: DesignQuery) -> float:
    """Medium length (m) that makes island m round for an N-stage layout.

    L_DM = 1 / [m (N-1) pi k2_DM sigma_p^2]; for unequal binomial stages
    N-1 counts the interference orders sharing the stripe width.
    """
    k2 = _k2_dm(q.dm, q.pump)
    return 1.0 / (q.m * (q.n_stages - 1) * math.pi * k2 * q.pump.sigma_p**2)


def stripe_width(m: int, dm: DispersiveMediumSpec, pump: PumpSpec) -> float:
    """Gaussian width sigma_int (rad/s) of interference stripe m across the anti-diagonal.

    Near the m-th maximum, cos(theta) ~ exp(-x^2 / (2 sigma_int^2)) with x
    the detuning offset measured as (omega_s - omega_i) change, and
    sigma_int^2 = 2 / (m pi L_DM k2_DM).
    """
    if m < 1:
        raise DomainError("island index m must be >= 1")
    k2 = _k2_dm(dm, pump)
    if not dm.length > 0:
        raise DomainError("medium length must be positive")
    return math.sqrt(2.0 / (m * math.pi * dm.length * k2))


@dataclass(frozen=True)
class EllipticalVerdict:
    """Outcome of the factorable-island condition for a linear-walk-off medium."""

    feasible: bool
    sigma_p2: float
    message: str

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "sigma_p2": self.sigma_p2, "message": self.message}


def elliptical_condition(tau_s: float, tau_i: float, length_dm: float) -> EllipticalVerdict:
    """Pump width that removes the signal-idler cross term of an island.

    The required value is sigma_p^2 = -2 / (tau_s tau_i L_DM^2); it is only
    positive when tau_s and tau_i have opposite signs, i.e. the pump group
    velocity lies between those of signal and idler. Same-sign walk-off
    needs a birefringent medium.
    """
    prod = tau_s * tau_i
    if prod == 0 or length_dm == 0:
        raise DomainError("walk-off product and medium length must be nonzero")
    sigma_p2 = -2.0 / (prod * length_dm**2)
    if prod > 0:
        return EllipticalVerdict(False, sigma_p2,
                                 "tau_s and tau_i share a sign; an isotropic medium cannot "
                                 "satisfy the condition, a birefringent medium is needed")
    return EllipticalVerdict(True, sigma_p2, "feasible")


def island_log_quadratic(tau_s: float, tau_i: float, length_dm: float, sigma_p2: float):
    """Coefficients (c_ss, c_ii, c_si) of the local Gaussian exponent of an island.

    The exponent is c_ss x^2 + c_ii y^2 + c_si x y with x, y the signal and
    idler offsets from the island centre.
    """
    a = length_dm**2 / 8.0
    b = 1.0 / (4.0 * sigma_p2)
    return (-b - a * tau_s**2, -b - a * tau_i**2, -2 * b - 2 * a * tau_s * tau_i)


def binomial_lengths(n_stages: int, first_length: float) -> tuple[float, ...]:
    """Stage lengths L_n = L_1 C(N-1, n-1)."""
    if n_stages < 2:
        raise DomainError("stage count must be >= 2")
    if not first_length > 0:
        raise DomainError("first length must be positive")
    return tuple(first_length * math.comb(n_stages - 1, k) for k in range(n_stages))


def island_principal_widths(jsf: JsfGrid, window: IslandWindow) -> tuple[float, float]:
    """Principal-axis standard deviations (rad/s) of |F|^2 inside an island window.

    Returned as (major, minor).
    """
    ws, wi = jsf.grid.omega_s_axis, jsf.grid.omega_i_axis
    rs = (ws >= window.valley_s[0]) & (ws <= window.valley_s[1])
    ri = (wi >= window.valley_i[0]) & (wi <= window.valley_i[1])
    a = np.abs(jsf.values[np.ix_(rs, ri)]) ** 2
    if a.size == 0 or not a.sum() > 0:
        raise DomainError("island window holds no samples")
    x, y = np.meshgrid(ws[rs], wi[ri], indexing="ij")
    w = a / a.sum()
    mx, my = (w * x).sum(), (w * y).sum()
    cxx = (w * (x - mx) ** 2).sum()
    cyy = (w * (y - my) ** 2).sum()
    cxy = (w * (x - mx) * (y - my)).sum()
    evals = np.linalg.eigvalsh(np.array([[cxx, cxy], [cxy, cyy]]))
    return float(math.sqrt(evals[1])), float(math.sqrt(max(evals[0], 0.0)))


def island_roundness(jsf: JsfGrid, window: IslandWindow) -> float:
    """Ratio minor/major of the island principal widths; 1 means round."""
    major, minor = island_principal_widths(jsf, window)
    return minor / major
