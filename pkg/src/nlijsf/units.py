"""Physical constants and engineering-unit conversions.

All internal quantities are SI (m, s, rad/s). Config files carry values such
as ``"17 ps/(km·nm)"``; :func:`parse_quantity` turns them into SI floats and
:func:`format_quantity` turns SI floats back into the same text.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import DomainError

#: Speed of light in vacuum, exact (m/s).
C = 299_792_458.0

#: Reference wavelength used for the wavelength/frequency bandwidth mapping of
#: telecom-band filters.
FILTER_REFERENCE_WAVELENGTH = 1550e-9

# unit string -> (dimension, factor to SI)
_UNITS: dict[str, tuple[str, float]] = {
    "m": ("length", 1.0),
    "km": ("length", 1e3),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "µm": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "pm": ("length", 1e-12),
    "s/m^2": ("gvd", 1.0),
    "ps/(km·nm)": ("gvd", 1e-6),
    "ps/(km*nm)": ("gvd", 1e-6),
    "ps/nm/km": ("gvd", 1e-6),
    "s/m^3": ("gvd_slope", 1.0),
    "ps/(km·nm²)": ("gvd_slope", 1e3),
    "ps/(km·nm^2)": ("gvd_slope", 1e3),
    "ps/(km*nm^2)": ("gvd_slope", 1e3),
    "ps/nm^2/km": ("gvd_slope", 1e3),
    "1/m": ("inverse_length", 1.0),
    "m⁻¹": ("inverse_length", 1.0),
    "m^-1": ("inverse_length", 1.0),
    "1/km": ("inverse_length", 1e-3),
    "km⁻¹": ("inverse_length", 1e-3),
    "km^-1": ("inverse_length", 1e-3),
    "s/m": ("walkoff", 1.0),
    "ps/m": ("walkoff", 1e-12),
    "fs/mm": ("walkoff", 1e-12),
    "ps/km": ("walkoff", 1e-15),
    "fs/m": ("walkoff", 1e-15),
    "rad/s": ("angular_frequency", 1.0),
    "Trad/s": ("angular_frequency", 1e12),
    "rad": ("phase", 1.0),
    "1": ("dimensionless", 1.0),
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY_RE = re.compile(rf"^\s*({_NUMBER})\s*(.*?)\s*$")


def unit_dimension(unit: str) -> str:
    try:
        return _UNITS[unit][0]
    except KeyError:
        raise DomainError(f"unknown unit {unit!r}") from None


def parse_quantity(text: str, default_unit: str | None = None) -> tuple[float, str]:
    """Parse ``"<number> <unit>"`` into ``(si_value, unit)``.

    A bare number is interpreted in ``default_unit``. The unit must have the
    same dimension as ``default_unit`` when both are given.
    """
    match = _QUANTITY_RE.match(text)
    if not match:
        raise DomainError(f"cannot parse quantity {text!r}")
    number, unit = match.groups()
    if not unit:
        if default_unit is None:
            raise DomainError(f"quantity {text!r} needs a unit")
        unit = default_unit
    dim = unit_dimension(unit)
    if default_unit is not None and dim != unit_dimension(default_unit):
        raise DomainError(f"unit {unit!r} is not a {unit_dimension(default_unit)} unit")
    return float(number) * _UNITS[unit][1], unit


def format_quantity(si_value: float, unit: str) -> str:
    """Render an SI value in ``unit`` so that parsing it back is exact."""
    factor = _UNITS[unit][1] if unit in _UNITS else None
    if factor is None:
        raise DomainError(f"unknown unit {unit!r}")
    value = si_value / factor
    # the division can land one ulp off; step to the neighbour that maps back
    for candidate in (value, math.nextafter(value, math.inf), math.nextafter(value, -math.inf)):
        if candidate * factor == si_value:
            value = candidate
            break
    return f"{value!r} {unit}"


def to_si(value: float, unit: str) -> float:
    return value * _UNITS[unit][1]


def from_si(value: float, unit: str) -> float:
    return value / _UNITS[unit][1]


def omega_from_wavelength(wavelength):
    """Angular frequency (rad/s) for a vacuum wavelength (m)."""
    return 2.0 * math.pi * C / np.asarray(wavelength, dtype=float) if np.ndim(wavelength) else 2.0 * math.pi * C / wavelength


def wavelength_from_omega(omega):
    """Vacuum wavelength (m) for an angular frequency (rad/s)."""
    return 2.0 * math.pi * C / np.asarray(omega, dtype=float) if np.ndim(omega) else 2.0 * math.pi * C / omega


def bandwidth_nm_to_sigma_f(dlambda_nm: float) -> float:
    """Filter bandwidth in nm to angular-frequency width, referenced to 1550 nm."""
    return 2.0 * math.pi * C * dlambda_nm * 1e-9 / FILTER_REFERENCE_WAVELENGTH**2


def sigma_f_to_bandwidth_nm(sigma_f: float) -> float:
    return sigma_f * FILTER_REFERENCE_WAVELENGTH**2 / (2.0 * math.pi * C) * 1e9
