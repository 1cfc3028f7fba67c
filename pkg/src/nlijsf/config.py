"""Scenario configuration files.

The format is flat ``key = value`` text. ``#`` starts a comment, keys are
dotted (``pump.lambda_p0``), lists are comma separated and physical values
carry units (``17 ps/(km·nm)``). Every key must appear in :data:`SCHEMA`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, DomainError
from .units import format_quantity, parse_quantity


@dataclass(frozen=True)
class Field:
    """Schema entry. ``kind`` is one of quantity, float, int, bool, str;
    ``unit`` is the default (and display) unit for quantities."""

    kind: str
    unit: str | None = None
    is_list: bool = False
    choices: tuple[str, ...] | None = None
    help: str = ""


SCENARIO_KINDS = ("single-simple", "single-fiber", "nli", "interference-factor")

SCHEMA: dict[str, Field] = {
    "scenario.kind": Field("str", choices=SCENARIO_KINDS),
    "scenario.name": Field("str"),
    "suite.configs": Field("str", is_list=True, help="other config files, relative paths"),
    "pump.lambda_p0": Field("quantity", "nm"),
    "pump.fwhm": Field("quantity", "nm", help="intensity FWHM in wavelength"),
    "pump.chirp": Field("float"),
    "simple.a_ratio": Field("float", help="A / sigma_p"),
    "simple.b_ratio": Field("float", help="B / sigma_p"),
    "fiber.length": Field("quantity", "m"),
    "fiber.lambda_zero": Field("quantity", "nm"),
    "fiber.d_slope": Field("quantity", "ps/(km·nm²)"),
    "fiber.gamma_pp": Field("quantity", "1/km"),
    "nli.layout": Field("str", choices=("explicit", "even", "binomial")),
    "nli.stage_lengths": Field("quantity", "m", is_list=True),
    "nli.stage_count": Field("int"),
    "nli.first_length": Field("quantity", "m"),
    "nli.include_sinc": Field("bool"),
    "nli.include_dk_in_theta": Field("bool"),
    "nli.uneven_mode": Field("str", choices=("approx", "exact")),
    "dm.kind": Field("str", choices=("small-detuning-quadratic", "large-detuning-linear",
                                     "sellmeier-glass", "tabulated", "arbitrary-phase")),
    "dm.length": Field("quantity", "m"),
    "dm.d_smf": Field("quantity", "ps/(km·nm)"),
    "dm.tau_s": Field("quantity", "ps/m"),
    "dm.tau_i": Field("quantity", "ps/m"),
    "dm.tau_source": Field("str", choices=("explicit", "sellmeier")),
    "dm.lambda_s0": Field("quantity", "nm"),
    "dm.lambda_i0": Field("quantity", "nm"),
    "dm.dk0": Field("quantity", "1/m"),
    "dm.samples_file": Field("str", help="CSV of omega_rad_s,value for tabulated/arbitrary kinds"),
    "grid.n": Field("int"),
    "grid.n_i": Field("int"),
    "grid.lambda_min": Field("quantity", "nm"),
    "grid.lambda_max": Field("quantity", "nm"),
    "grid.signal_min": Field("quantity", "nm"),
    "grid.signal_max": Field("quantity", "nm"),
    "grid.idler_min": Field("quantity", "nm"),
    "grid.idler_max": Field("quantity", "nm"),
    "grid.half_span_sigma": Field("float", help="centred window, multiples of sigma_p"),
    "analysis.schmidt": Field("bool"),
    "analysis.modes": Field("int", help="number of mode pairs dumped"),
    "analysis.islands": Field("int", is_list=True),
    "filter.kind": Field("str", choices=("rect", "gauss")),
    "filter.island": Field("int"),
    "filter.center_s": Field("quantity", "nm"),
    "filter.center_i": Field("quantity", "nm"),
    "filter.bandwidth": Field("quantity", "nm", help="common width, mapped at 1550 nm"),
    "filter.eta_s": Field("float"),
    "filter.eta_i": Field("float"),
    "gain.G": Field("float"),
    "gain.ladder": Field("float", is_list=True),
    "highgain.enabled": Field("bool"),
    "highgain.method": Field("str", choices=("closed-form", "series")),
    "highgain.order": Field("int"),
    "scan.parameter": Field("str", choices=("filter_bandwidth", "gain", "stage_count")),
    "scan.start": Field("float"),
    "scan.stop": Field("float"),
    "scan.step": Field("float"),
    "scan.workers": Field("int"),
    "output.format": Field("str", choices=("csv", "bin")),
    "output.grid": Field("bool"),
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _parse_scalar(key: str, spec: Field, text: str) -> tuple[Any, str | None]:
    text = text.strip()
    if text == "":
        raise ConfigError("empty value", key)
    try:
        if spec.kind == "quantity":
            return parse_quantity(text, spec.unit)
        if spec.kind == "float":
            return float(text), None
        if spec.kind == "int":
            return int(text), None
        if spec.kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True, None
            if low in _FALSE:
                return False, None
            raise ConfigError(f"expected a boolean, got {text!r}", key)
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key) from None
    if spec.choices and text not in spec.choices:
        raise ConfigError(f"must be one of {', '.join(spec.choices)}", key)
    return text, None


@dataclass
class Config:
    """Parsed configuration: SI values plus the unit each was written in."""

    values: dict[str, Any] = field(default_factory=dict)
    units: dict[str, Any] = field(default_factory=dict)
    source: Path | None = None

    def get(self, key: str, default=None):
        if key not in SCHEMA:
            raise KeyError(key)
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise ConfigError("missing required key", key)
        return self.values[key]

    def has(self, key: str) -> bool:
        return key in self.values

    def section(self, prefix: str) -> dict[str, Any]:
        return {k: v for k, v in self.values.items() if k.startswith(prefix + ".")}

    def set(self, key: str, value, unit: str | None = None) -> "Config":
        """Copy with one SI value replaced."""
        if key not in SCHEMA:
            raise ConfigError("unknown key", key)
        values, units = dict(self.values), dict(self.units)
        values[key] = value
        spec = SCHEMA[key]
        if spec.kind == "quantity":
            units[key] = unit or units.get(key) or ([spec.unit] * len(value) if spec.is_list else spec.unit)
        return Config(values, units, self.source)

    def resolve_path(self, relative: str) -> Path:
        base = self.source.parent if self.source else Path.cwd()
        return (base / relative).resolve()

    def digest(self) -> str:
        return hashlib.sha256(serialize(self).encode("utf-8")).hexdigest()


def parse(text: str, source: Path | None = None) -> Config:
    cfg = Config(source=source)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key (line {lineno})", key)
        if key in cfg.values:
            raise ConfigError(f"duplicate key (line {lineno})", key)
        spec = SCHEMA[key]
        if spec.is_list:
            items = [x for x in (p.strip() for p in value.split(",")) if x]
            parsed = [_parse_scalar(key, spec, x) for x in items]
            cfg.values[key] = [p[0] for p in parsed]
            if spec.kind == "quantity":
                cfg.units[key] = [p[1] for p in parsed]
        else:
            val, unit = _parse_scalar(key, spec, value)
            cfg.values[key] = val
            if unit is not None:
                cfg.units[key] = unit
    return cfg


def load(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse(text, path.resolve())


def _render(key: str, value, unit) -> str:
    spec = SCHEMA[key]
    if spec.kind == "quantity":
        return format_quantity(value, unit)
    if spec.kind == "bool":
        return "true" if value else "false"
    if spec.kind == "float":
        return repr(float(value))
    return str(value)


def serialize(cfg: Config) -> str:
    """Normalized text: schema key order, one key per line, units as written."""
    lines = []
    for key in SCHEMA:
        if key not in cfg.values:
            continue
        value = cfg.values[key]
        if SCHEMA[key].is_list:
            units = cfg.units.get(key) or [None] * len(value)
            text = ", ".join(_render(key, v, u) for v, u in zip(value, units))
        else:
            text = _render(key, value, cfg.units.get(key))
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
