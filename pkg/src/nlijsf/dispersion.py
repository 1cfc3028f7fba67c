"""Phase mismatch of the nonlinear fiber and phase shifts of the dispersive medium.

Frequencies passed as ``Omega_*`` are offsets from a reference carrier
(rad/s); frequencies passed as ``omega_*`` are absolute angular frequencies.
The pump amplitude spectrum is taken as ``exp(-Omega**2 / (2 sigma_p**2))`` so
its intensity FWHM in angular frequency is ``2 sigma_p sqrt(ln 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError, InterpolationRangeError
from .units import C, omega_from_wavelength

SMALL_DETUNING = "small-detuning-quadratic"
LARGE_DETUNING = "large-detuning-linear"
SELLMEIER = "sellmeier-glass"
TABULATED = "tabulated"
ARBITRARY_PHASE = "arbitrary-phase"
DM_KINDS = (SMALL_DETUNING, LARGE_DETUNING, SELLMEIER, TABULATED, ARBITRARY_PHASE)

# Fused silica, three-term Sellmeier (Malitson 1965), wavelength in micrometres.
SILICA_B = (0.6961663, 0.4079426, 0.8974794)
SILICA_C_UM = (0.0684043, 0.1162414, 9.896161)


def sigma_from_fwhm(fwhm_lambda: float, lambda_p0: float) -> float:
    """Pump amplitude width sigma_p (rad/s) from the intensity FWHM in wavelength.

    Parameters
    ----------
    fwhm_lambda : float
        Full width at half maximum of the pump intensity spectrum (m).
    lambda_p0 : float
        Pump central wavelength (m).
    """
    if not (fwhm_lambda > 0 and lambda_p0 > 0):
        raise DomainError("pump width and wavelength must be positive")
    return math.pi * C * fwhm_lambda / (lambda_p0**2 * math.sqrt(math.log(2.0)))


@dataclass(frozen=True)
class PumpSpec:
    """Pulsed Gaussian pump.

    Attributes
    ----------
    lambda_p0 : float
        Central wavelength (m).
    fwhm_lambda : float
        Intensity-spectrum FWHM (m).
    chirp : float
        Dimensionless linear chirp C_p.
    """

    lambda_p0: float
    fwhm_lambda: float
    chirp: float = 0.0

    def __post_init__(self):
        if not self.lambda_p0 > 0:
            raise DomainError("lambda_p0 must be positive")
        if not self.fwhm_lambda > 0:
            raise DomainError("fwhm_lambda must be positive")
        if not math.isfinite(self.chirp):
            raise DomainError("chirp must be finite")

    @property
    def sigma_p(self) -> float:
        return sigma_from_fwhm(self.fwhm_lambda, self.lambda_p0)

    @property
    def omega_p0(self) -> float:
        return omega_from_wavelength(self.lambda_p0)


@dataclass(frozen=True)
class FiberSpec:
    """Nonlinear fiber described by its zero-dispersion wavelength and slope.

    Attributes
    ----------
    length : float
        Fiber length L (m).
    lambda_zero : float
        Zero-GVD wavelength (m).
    d_slope : float
        Dispersion slope at ``lambda_zero`` (s/m^3).
    gamma_pp : float
        Nonlinear phase term gamma * P_p (1/m).
    """

    length: float
    lambda_zero: float
    d_slope: float
    gamma_pp: float = 0.0

    def __post_init__(self):
        if not self.length >= 0:
            raise DomainError("fiber length must be non-negative")
        if not self.lambda_zero > 0:
            raise DomainError("lambda_zero must be positive")

    def with_length(self, length: float) -> "FiberSpec":
        return FiberSpec(length, self.lambda_zero, self.d_slope, self.gamma_pp)

    def k2(self, pump: PumpSpec) -> float:
        """Group-velocity dispersion at the pump (s^2/m)."""
        lam = pump.lambda_p0
        return lam**2 * self.d_slope * (lam - self.lambda_zero) / (2 * math.pi * C)

    def k3(self, pump: PumpSpec) -> float:
        """Third-order dispersion at the pump (s^3/m)."""
        lam = pump.lambda_p0
        return -(lam**4) * self.d_slope / (2 * math.pi * C) ** 2


def delta_k_dsf(Omega_s, Omega_i, pump: PumpSpec, fiber: FiberSpec):
    """Phase mismatch (1/m) of degenerate-pump four-wave mixing in the fiber.

    ``Omega_s`` and ``Omega_i`` are offsets from the pump carrier; they
    broadcast against each other.
    """
    Omega_s = np.asarray(Omega_s, dtype=float)
    Omega_i = np.asarray(Omega_i, dtype=float)
    diff2 = (Omega_s - Omega_i) ** 2
    total = Omega_s + Omega_i
    return (
        fiber.k2(pump) / 4 * diff2
        + fiber.k3(pump) / 8 * total * diff2
        - 2 * fiber.gamma_pp
    )


def silica_index(wavelength):
    """Refractive index of fused silica; wavelength in metres."""
    lam2 = (np.asarray(wavelength, dtype=float) * 1e6) ** 2
    n2 = 1.0
    for b, c in zip(SILICA_B, SILICA_C_UM):
        n2 = n2 + b * lam2 / (lam2 - c**2)
    return np.sqrt(n2)


def silica_group_index(wavelength):
    """Group index n - lambda dn/dlambda of fused silica."""
    lam_um = np.asarray(wavelength, dtype=float) * 1e6
    lam2 = lam_um**2
    n = silica_index(wavelength)
    # d(n^2)/d(lambda) in 1/um
    dn2 = 0.0
    for b, c in zip(SILICA_B, SILICA_C_UM):
        dn2 = dn2 - 2 * b * c**2 * lam_um / (lam2 - c**2) ** 2
    return n - lam_um * dn2 / (2 * n)


def silica_k(omega):
    """Wave number (1/m) of bulk fused silica at angular frequency omega."""
    omega = np.asarray(omega, dtype=float)
    return silica_index(2 * math.pi * C / omega) * omega / C


def tau_from_sellmeier(lambda_p0: float, lambda_s0: float, lambda_i0: float) -> tuple[float, float]:
    """First-order walk-off coefficients (s/m) of bulk silica.

    tau_x = k'(omega_p0) - k'(omega_x0), with k' = n_g / c.
    """
    kp = silica_group_index(lambda_p0) / C
    return (
        float(kp - silica_group_index(lambda_s0) / C),
        float(kp - silica_group_index(lambda_i0) / C),
    )


def stripe_orientation(tau_s: float, tau_i: float) -> float:
    """Orientation of the interference stripes in degrees, in (-90, 90]."""
    if tau_s == 0 and tau_i == 0:
        raise DomainError("tau_s and tau_i cannot both be zero")
    if tau_i == 0:
        return 90.0
    rho = -math.degrees(math.atan(tau_s / tau_i))
    return 90.0 if rho == -90.0 else rho


@dataclass(frozen=True)
class DispersiveMediumSpec:
    """Linear medium placed between nonlinear stages.

    Which fields must be set depends on ``kind``:

    ``small-detuning-quadratic``
        ``length``, ``d_smf`` (GVD coefficient D at the pump, s/m^2).
    ``large-detuning-linear``
        ``length``, ``tau_s``, ``tau_i`` (s/m), ``lambda_s0``, ``lambda_i0``
        (expansion centres, m); ``dk0`` optional.
    ``sellmeier-glass``
        ``length`` only; bulk fused silica.
    ``tabulated``
        ``length``, ``table_omega`` and ``table_k`` (wave number samples).
    ``arbitrary-phase``
        ``phase_omega`` and ``phase_values`` (phase samples in rad);
        ``length`` is ignored and should be 0.
    """

    kind: str
    length: float = 0.0
    d_smf: Optional[float] = None
    tau_s: Optional[float] = None
    tau_i: Optional[float] = None
    lambda_s0: Optional[float] = None
    lambda_i0: Optional[float] = None
    dk0: float = 0.0
    table_omega: Optional[tuple] = None
    table_k: Optional[tuple] = None
    phase_omega: Optional[tuple] = None
    phase_values: Optional[tuple] = None
    _spline: object = field(default=None, init=False, repr=False, compare=False)

    _REQUIRED = {
        SMALL_DETUNING: ("d_smf",),
        LARGE_DETUNING: ("tau_s", "tau_i", "lambda_s0", "lambda_i0"),
        SELLMEIER: (),
        TABULATED: ("table_omega", "table_k"),
        ARBITRARY_PHASE: ("phase_omega", "phase_values"),
    }
    _OPTIONAL = ("d_smf", "tau_s", "tau_i", "lambda_s0", "lambda_i0",
                 "table_omega", "table_k", "phase_omega", "phase_values")

    def __post_init__(self):
        if self.kind not in DM_KINDS:
            raise ConfigError(f"unknown medium kind {self.kind!r}", "dm.kind")
        if not self.length >= 0:
            raise ConfigError("length must be non-negative", "dm.length")
        required = self._REQUIRED[self.kind]
        for name in self._OPTIONAL:
            value = getattr(self, name)
            if name in required and value is None:
                raise ConfigError(f"required for kind {self.kind!r}", f"dm.{name}")
            if name not in required and value is not None:
                raise ConfigError(f"not used by kind {self.kind!r}", f"dm.{name}")
        if self.kind == LARGE_DETUNING and self.tau_s == 0 and self.tau_i == 0:
            raise ConfigError("tau_s and tau_i cannot both be zero", "dm.tau_s")
        for xs, ys, key in (("table_omega", "table_k", "dm.table_k"),
                            ("phase_omega", "phase_values", "dm.phase_values")):
            if self.kind in (TABULATED, ARBITRARY_PHASE) and getattr(self, xs) is not None:
                x = np.asarray(getattr(self, xs), dtype=float)
                y = np.asarray(getattr(self, ys), dtype=float)
                if x.ndim != 1 or x.shape != y.shape or x.size < 4:
                    raise ConfigError("samples must be 1-D, equal length, at least 4", key)
                if np.any(np.diff(x) <= 0):
                    raise ConfigError("sample frequencies must be strictly increasing", key)
                object.__setattr__(self, "table_omega" if xs == "table_omega" else "phase_omega", tuple(x))
                object.__setattr__(self, ys, tuple(y))
                object.__setattr__(self, "_spline", CubicSpline(x, y))

    def k2_at(self, lambda_p0: float) -> float:
        """GVD k'' (s^2/m) of the small-detuning medium at ``lambda_p0``."""
        if self.kind != SMALL_DETUNING:
            raise DomainError("k2 is defined for the small-detuning model only")
        return lambda_p0**2 * self.d_smf / (2 * math.pi * C)

    def _sampled(self, omega):
        omega = np.asarray(omega, dtype=float)
        xs = self.table_omega if self.kind == TABULATED else self.phase_omega
        lo, hi = xs[0], xs[-1]
        if omega.size and (omega.min() < lo or omega.max() > hi):
            raise InterpolationRangeError(
                f"samples cover [{lo:.6g}, {hi:.6g}] rad/s, requested "
                f"[{omega.min():.6g}, {omega.max():.6g}] rad/s"
            )
        return self._spline(omega)


def delta_phi_dm(omega_s, omega_i, pump: PumpSpec, dm: DispersiveMediumSpec):
    """Phase shift (rad) imprinted by the dispersive medium on a pair.

    ``omega_s`` and ``omega_i`` are absolute angular frequencies that
    broadcast against each other. For the sampled kinds the pump frequency is
    taken as ``(omega_s + omega_i) / 2``.
    """
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    if dm.kind == SMALL_DETUNING:
        lam = pump.lambda_p0
        return lam**2 * dm.d_smf * dm.length * (omega_s - omega_i) ** 2 / (8 * math.pi * C)
    if dm.kind == LARGE_DETUNING:
        Omega_s = omega_s - omega_from_wavelength(dm.lambda_s0)
        Omega_i = omega_i - omega_from_wavelength(dm.lambda_i0)
        return dm.length * (dm.dk0 + dm.tau_s * Omega_s + dm.tau_i * Omega_i)
    omega_p = (omega_s + omega_i) / 2
    if dm.kind == SELLMEIER:
        return dm.length * (2 * silica_k(omega_p) - silica_k(omega_s) - silica_k(omega_i))
    if dm.kind == TABULATED:
        return dm.length * (2 * dm._sampled(omega_p) - dm._sampled(omega_s) - dm._sampled(omega_i))
    return 2 * dm._sampled(omega_p) - dm._sampled(omega_s) - dm._sampled(omega_i)
