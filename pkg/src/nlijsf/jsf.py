"""Construction of sampled joint spectral functions.

Signal frequencies index rows and idler frequencies index columns. The signal
photon is the red (long-wavelength) partner, so island ``m`` of an NLI sits at
``omega_s < omega_p0 < omega_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import minimize

from .dispersion import (
    SMALL_DETUNING,
    DispersiveMediumSpec,
    FiberSpec,
    PumpSpec,
    delta_k_dsf,
    delta_phi_dm,
)
from .errors import ConfigError, Diagnostic, DomainError, OutOfWindowError
from .grid import JsfGrid, SpectralGrid, pairwise_sum
from .units import wavelength_from_omega

SINGULAR_THRESHOLD = 1e-8
BOUNDARY_MASS_LIMIT = 1e-4
# largest |dk L_n / 2| tolerated by the sinc-free uneven-stage formula
PHASE_MATCH_LIMIT = 0.5


@dataclass(frozen=True)
class SimpleJsfParams:
    """Linearized phase-matching model.

    ``a_ratio`` and ``b_ratio`` give the slopes A and B as multiples of the
    pump width sigma_p, so the phase-matching argument is
    ``Omega_s / A + Omega_i / B``.
    """

    a_ratio: float
    b_ratio: float
    chirp: float = 0.0

    def __post_init__(self):
        if self.a_ratio == 0 or self.b_ratio == 0:
            raise DomainError("A and B must be nonzero")


@dataclass(frozen=True)
class NliDesign:
    """Ordered stage layout of an N-stage nonlinear interferometer.

    Attributes
    ----------
    stage_lengths : tuple of float
        Nonlinear fiber lengths L_1..L_N (m).
    dm : DispersiveMediumSpec or None
        Medium placed between every adjacent pair of stages. Must be None
        when there is a single stage.
    include_sinc : bool
        Keep the single-stage factor sinc(dk L/2) exp(j dk L/2) of the
        equal-length formula.
    include_dk_in_theta : bool
        Add dk L/2 to the interference phase theta of the equal-length formula.
        When False, theta is the medium phase alone.
    uneven_mode : {"approx", "exact"}
        For unequal lengths, "approx" uses the sinc-free weighted sum
        K(theta) with theta = delta_phi/2, valid near phase matching;
        "exact" sums the per-stage sinc and propagation phases.
    """

    stage_lengths: tuple
    dm: Optional[DispersiveMediumSpec] = None
    include_sinc: bool = True
    include_dk_in_theta: bool = True
    uneven_mode: str = "approx"

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.stage_lengths)
        object.__setattr__(self, "stage_lengths", lengths)
        if len(lengths) < 1:
            raise ConfigError("at least one stage is required", "nli.stage_lengths")
        if any(not x > 0 for x in lengths):
            raise ConfigError("stage lengths must be positive", "nli.stage_lengths")
        if len(lengths) == 1 and self.dm is not None:
            raise ConfigError("a single-stage design cannot carry a dispersive medium", "dm")
        if len(lengths) > 1 and self.dm is None:
            raise ConfigError("multi-stage designs need a dispersive medium", "dm")
        if self.uneven_mode not in ("approx", "exact"):
            raise ConfigError("must be 'approx' or 'exact'", "nli.uneven_mode")

    @property
    def n_stages(self) -> int:
        return len(self.stage_lengths)

    @property
    def is_even(self) -> bool:
        return len(set(self.stage_lengths)) == 1


def sinc(x):
    """Unnormalized sinc, sin(x)/x, with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SINGULAR_THRESHOLD
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x**2 / 6.0, np.sin(safe) / safe)


def interference_h(theta, n_stages: int):
    """Equal-length N-stage factor sin(N theta)/sin(theta) exp(j (N-1) theta)."""
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)
    near = np.abs(s) < SINGULAR_THRESHOLD
    ratio = np.where(
        near,
        n_stages * np.cos(n_stages * theta) / np.where(near, np.cos(theta), 1.0),
        np.sin(n_stages * theta) / np.where(near, 1.0, s),
    )
    return ratio * np.exp(1j * (n_stages - 1) * theta)


def interference_k(theta, lengths: Sequence[float]):
    """Length-weighted factor sum_n L_n exp(2j (n-1) theta)."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape, dtype=complex)
    for n, length in enumerate(lengths):
        out += length * np.exp(2j * n * theta)
    return out


def pump_envelope(Omega_sum, pump: PumpSpec, chirp: float | None = None):
    """Pump factor exp[-(Omega_s+Omega_i)^2 (1 + j C_p) / (4 sigma_p^2)]."""
    cp = pump.chirp if chirp is None else chirp
    return np.exp(-(Omega_sum**2) * (1 + 1j * cp) / (4 * pump.sigma_p**2))


def _boundary_diagnostic(values: np.ndarray, cell_area: float) -> list[Diagnostic]:
    a = np.abs(values) ** 2 * cell_area
    total = pairwise_sum(a)
    edge = a[0, :].sum() + a[-1, :].sum() + a[1:-1, 0].sum() + a[1:-1, -1].sum()
    frac = float(edge / total) if total > 0 else 0.0
    if frac > BOUNDARY_MASS_LIMIT:
        msg = f"{frac:.3g} of the JSF mass sits on the grid boundary; widen the window"
        return [Diagnostic("truncation", msg, {"boundary_fraction": frac})]
    return []


def _finish(grid: SpectralGrid, values: np.ndarray, diags: list[Diagnostic]) -> JsfGrid:
    diags = diags + _boundary_diagnostic(values, grid.cell_area)
    return JsfGrid(grid, values, False, tuple(diags)).normalize()


def build_single_fiber_jsf(grid: SpectralGrid, pump: PumpSpec, *,
                           params: SimpleJsfParams | None = None,
                           fiber: FiberSpec | None = None) -> JsfGrid:
    """Normalized JSF of a single nonlinear fiber.

    Supply either ``params`` (linearized phase matching) or ``fiber``
    (phase mismatch from the fiber dispersion model).
    """
    if (params is None) == (fiber is None):
        raise ConfigError("supply exactly one of params or fiber")
    ws, wi = grid.mesh()
    Os, Oi = ws - pump.omega_p0, wi - pump.omega_p0
    if params is not None:
        sig = pump.sigma_p
        x = Os / (params.a_ratio * sig) + Oi / (params.b_ratio * sig)
        envelope = pump_envelope(Os + Oi, pump, params.chirp)
    else:
        x = delta_k_dsf(Os, Oi, pump, fiber) * fiber.length / 2
        envelope = pump_envelope(Os + Oi, pump)
    values = envelope * sinc(x) * np.exp(1j * x)
    return _finish(grid, values, [])


def nli_phases(grid: SpectralGrid, pump: PumpSpec, fiber: FiberSpec,
               dm: DispersiveMediumSpec | None):
    """Fiber mismatch dk (1/m) and medium phase (rad) sampled on the grid."""
    ws, wi = grid.mesh()
    dk = delta_k_dsf(ws - pump.omega_p0, wi - pump.omega_p0, pump, fiber)
    dphi = np.zeros_like(dk) if dm is None else np.broadcast_to(
        delta_phi_dm(ws, wi, pump, dm), dk.shape)
    return dk, dphi


def build_nli_jsf(design: NliDesign, pump: PumpSpec, fiber: FiberSpec,
                  grid: SpectralGrid) -> JsfGrid:
    """Normalized JSF at the output of an N-stage interferometer.

    ``fiber.length`` is ignored; the stage lengths come from ``design``.
    """
    ws, wi = grid.mesh()
    envelope = pump_envelope((ws - pump.omega_p0) + (wi - pump.omega_p0), pump)
    dk, dphi = nli_phases(grid, pump, fiber, design.dm)
    lengths = design.stage_lengths
    n = design.n_stages
    diags: list[Diagnostic] = []

    if design.is_even:
        x = dk * lengths[0] / 2
        theta = dphi / 2 + (x if design.include_dk_in_theta else 0.0)
        factor = interference_h(theta, n)
        if design.include_sinc:
            factor = factor * sinc(x) * np.exp(1j * x)
    elif design.uneven_mode == "exact":
        factor = np.zeros(dk.shape, dtype=complex)
        z = 0.0
        for idx, length in enumerate(lengths):
            x = dk * length / 2
            factor += length * sinc(x) * np.exp(1j * (dk * z + x + idx * dphi))
            z += length
    else:
        factor = interference_k(dphi / 2, lengths)
        significant = np.abs(envelope) ** 2 > 1e-3
        worst = float(np.max(np.abs(dk * max(lengths) / 2)[np.broadcast_to(significant, dk.shape)],
                             initial=0.0))
        if worst > PHASE_MATCH_LIMIT:
            msg = (f"|dk L_n/2| reaches {worst:.3g} inside the pump band; "
                   "the sinc-free uneven formula may be inaccurate (use uneven_mode='exact')")
            diags.append(Diagnostic("phase-matching", msg, {"max_half_mismatch": worst}))
    return _finish(grid, envelope * factor, diags)


def interference_intensity(grid: SpectralGrid, pump: PumpSpec, dm: DispersiveMediumSpec,
                           n_stages: int = 2) -> np.ndarray:
    """|H(theta)|^2 / N^2 with theta = delta_phi/2, the bare interference pattern."""
    ws, wi = grid.mesh()
    theta = np.broadcast_to(delta_phi_dm(ws, wi, pump, dm) / 2, (grid.n_s, grid.n_i))
    return np.abs(interference_h(theta, n_stages)) ** 2 / n_stages**2


def marginal_intensity(jsf: JsfGrid, axis: str = "signal") -> tuple[np.ndarray, np.ndarray]:
    """Single-photon spectrum: integral of |F|^2 over the partner frequency.

    Returns ``(omega_axis, density)`` where density integrates to 1 for a
    normalized JSF.
    """
    a = np.abs(jsf.values) ** 2
    if axis == "signal":
        return jsf.grid.omega_s_axis, a.sum(axis=1) * jsf.grid.d_omega_i
    if axis == "idler":
        return jsf.grid.omega_i_axis, a.sum(axis=0) * jsf.grid.d_omega_s
    raise DomainError("axis must be 'signal' or 'idler'")


@dataclass(frozen=True)
class IslandWindow:
    """Location of island ``m`` in the (omega_s, omega_i) plane.

    ``valley_s`` and ``valley_i`` give the signal and idler frequency
    intervals bounded by the neighbouring zeros of the two-stage factor.
    """

    m: int
    center_s: float
    center_i: float
    analytic_s: float
    analytic_i: float
    valley_s: tuple[float, float]
    valley_i: tuple[float, float]

    @property
    def center_s_nm(self) -> float:
        return wavelength_from_omega(self.center_s) * 1e9

    @property
    def center_i_nm(self) -> float:
        return wavelength_from_omega(self.center_i) * 1e9

    @property
    def analytic_s_nm(self) -> float:
        return wavelength_from_omega(self.analytic_s) * 1e9

    @property
    def analytic_i_nm(self) -> float:
        return wavelength_from_omega(self.analytic_i) * 1e9


def island_detuning(m: float, pump: PumpSpec, dm: DispersiveMediumSpec) -> float:
    """Signal-idler separation (rad/s) at which the medium phase equals 2 m pi."""
    if dm.kind != SMALL_DETUNING:
        raise DomainError("island positions are defined for the small-detuning model")
    if m < 0:
        raise DomainError("island index must be non-negative")
    k2 = dm.k2_at(pump.lambda_p0)
    if not k2 * dm.length > 0:
        raise DomainError("medium dispersion and length must be positive")
    return math.sqrt(8 * m * math.pi / (k2 * dm.length))


def island_window(jsf: JsfGrid, m: int, dm: DispersiveMediumSpec, pump: PumpSpec,
                  refine: bool = True) -> IslandWindow:
    """Analytic and grid-refined centre of island ``m`` plus its valley bounds."""
    w0 = pump.omega_p0
    delta = island_detuning(m, pump, dm)
    k2l = dm.k2_at(pump.lambda_p0) * dm.length
    lo = math.sqrt(max(0.0, 4 * (2 * m - 1) * math.pi / k2l))
    hi = math.sqrt(4 * (2 * m + 1) * math.pi / k2l)
    valley_s = (w0 - hi / 2, w0 - lo / 2)
    valley_i = (w0 + lo / 2, w0 + hi / 2)
    ax_s, ax_i = jsf.grid.omega_s_axis, jsf.grid.omega_i_axis
    cs, ci = w0 - delta / 2, w0 + delta / 2
    if not (ax_s[0] <= cs <= ax_s[-1] and ax_i[0] <= ci <= ax_i[-1]):
        raise OutOfWindowError(f"island m={m} lies outside the sampled grid")
    if not refine:
        return IslandWindow(m, cs, ci, cs, ci, valley_s, valley_i)

    a = np.abs(jsf.values) ** 2
    rs = (ax_s >= max(valley_s[0], ax_s[0])) & (ax_s <= min(valley_s[1], ax_s[-1]))
    ri = (ax_i >= max(valley_i[0], ax_i[0])) & (ax_i <= min(valley_i[1], ax_i[-1]))
    if rs.sum() < 4 or ri.sum() < 4:
        return IslandWindow(m, cs, ci, cs, ci, valley_s, valley_i)
    sub = a[np.ix_(rs, ri)]
    p, q = np.unravel_index(int(np.argmax(sub)), sub.shape)
    xs, xi = ax_s[rs], ax_i[ri]
    ps = slice(max(p - 4, 0), min(p + 5, xs.size))
    qs = slice(max(q - 4, 0), min(q + 5, xi.size))
    if xs[ps].size < 4 or xi[qs].size < 4:
        return IslandWindow(m, float(xs[p]), float(xi[q]), cs, ci, valley_s, valley_i)
    scale_s, scale_i = jsf.grid.d_omega_s, jsf.grid.d_omega_i
    spline = RectBivariateSpline((xs[ps] - xs[p]) / scale_s, (xi[qs] - xi[q]) / scale_i,
                                 sub[ps, qs] / sub[p, q])
    res = minimize(lambda v: -spline.ev(v[0], v[1]), x0=[0.0, 0.0],
                   bounds=[(-1.0, 1.0), (-1.0, 1.0)], method="L-BFGS-B")
    return IslandWindow(m, float(xs[p] + res.x[0] * scale_s), float(xi[q] + res.x[1] * scale_i),
                        cs, ci, valley_s, valley_i)
