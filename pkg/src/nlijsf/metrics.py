"""Filtered pair-source figures of merit.

Filters are amplitude transmissions ``f_s(omega_s)`` and ``f_i(omega_i)``
applied to the JSF as ``F * f_s * f_i``. A filter width of ``None`` means no
filter; a width of 0 is an empty passband, so every metric that divides by a
transmitted mass raises :class:`UndefinedMetricError`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .errors import Diagnostic, DomainError, UndefinedMetricError
from .grid import JsfGrid, pairwise_sum
from .units import bandwidth_nm_to_sigma_f


@dataclass(frozen=True)
class FilterSpec:
    """Signal and idler band-pass filters and detector efficiencies.

    For ``kind="rect"`` the width is the full passband (rad/s). For
    ``kind="gauss"`` the amplitude transmission is
    ``exp(-(omega - center)**2 / (2 width**2))``.
    """

    center_s: float = 0.0
    center_i: float = 0.0
    width_s: Optional[float] = None
    width_i: Optional[float] = None
    eta_s: float = 1.0
    eta_i: float = 1.0
    kind: str = "rect"

    def __post_init__(self):
        if self.kind not in ("rect", "gauss"):
            raise DomainError("filter kind must be 'rect' or 'gauss'")
        for name in ("width_s", "width_i"):
            w = getattr(self, name)
            if w is not None and not w >= 0:
                raise DomainError(f"{name} must be non-negative")
        for name in ("eta_s", "eta_i"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")

    @classmethod
    def common_bandwidth(cls, center_s: float, center_i: float, dlambda_nm: float, **kw):
        """Equal-width filters given in nm, mapped to frequency at 1550 nm."""
        sigma = bandwidth_nm_to_sigma_f(dlambda_nm)
        return cls(center_s, center_i, sigma, sigma, **kw)

    def transmission(self, omega: np.ndarray, side: str) -> np.ndarray:
        center, width = (self.center_s, self.width_s) if side == "signal" else (self.center_i, self.width_i)
        omega = np.asarray(omega, dtype=float)
        if width is None or math.isinf(width):
            return np.ones_like(omega)
        if self.kind == "rect":
            return (np.abs(omega - center) <= width / 2).astype(float)
        if width == 0:
            return np.zeros_like(omega)
        return np.exp(-((omega - center) ** 2) / (2 * width**2))


@dataclass(frozen=True)
class FilteredJsf:
    """Filtered (unnormalized) JSF and the transmitted probability mass."""

    jsf: JsfGrid
    f_s: np.ndarray
    f_i: np.ndarray
    mass: float

    @property
    def is_empty(self) -> bool:
        return not self.mass > 0


def _weights(jsf: JsfGrid, filt: FilterSpec) -> tuple[np.ndarray, np.ndarray]:
    return (filt.transmission(jsf.grid.omega_s_axis, "signal"),
            filt.transmission(jsf.grid.omega_i_axis, "idler"))


def apply_filters(jsf: JsfGrid, filt: FilterSpec) -> FilteredJsf:
    f_s, f_i = _weights(jsf, filt)
    values = jsf.values * f_s[:, None] * f_i[None, :]
    out = JsfGrid(jsf.grid, values, False, jsf.diagnostics)
    return FilteredJsf(out, f_s, f_i, out.norm2)


def _masses(jsf: JsfGrid, f_s: np.ndarray, f_i: np.ndarray) -> tuple[float, float, float]:
    """Quadratures of |F f_s|^2, |F f_i|^2 and |F f_s f_i|^2."""
    a = np.abs(jsf.values) ** 2 * jsf.grid.cell_area
    a_s = a * (f_s**2)[:, None]
    return (pairwise_sum(a_s), pairwise_sum(a * (f_i**2)[None, :]),
            pairwise_sum(a_s * (f_i**2)[None, :]))


def singles_and_coincidences(jsf: JsfGrid, filt: FilterSpec, gain: float) -> dict:
    """Per-pulse singles and coincidence probabilities to lowest order in gain.

    The result carries a ``diagnostics`` list that flags probabilities above
    one (two-photon approximation broken).
    """
    if not gain > 0:
        raise DomainError("gain must be positive")
    m_s, m_i, m_c = _masses(jsf, *_weights(jsf, filt))
    g2 = gain**2
    out = {"P_s": filt.eta_s * g2 * m_s, "P_i": filt.eta_i * g2 * m_i,
           "P_c": filt.eta_s * filt.eta_i * g2 * m_c, "diagnostics": []}
    worst = max(out["P_s"], out["P_i"], out["P_c"])
    if worst > 1:
        out["diagnostics"].append(Diagnostic(
            "gain-validity", f"probability {worst:.3g} exceeds 1; gain too high for the pair approximation",
            {"max_probability": worst}))
    return out


def _ratio(num: float, den: float, what: str) -> float:
    if not den > 0:
        raise UndefinedMetricError(f"{what}: transmitted mass is zero")
    return num / den


def collection_and_heralding(jsf: JsfGrid, filt: FilterSpec) -> dict:
    """Collection efficiencies xi and heralding efficiencies h = xi / eta."""
    m_s, m_i, m_c = _masses(jsf, *_weights(jsf, filt))
    xi_s = filt.eta_s * _ratio(m_c, m_i, "xi_s")
    xi_i = filt.eta_i * _ratio(m_c, m_s, "xi_i")
    return {"xi_s": xi_s, "xi_i": xi_i,
            "h_s": _ratio(xi_s, filt.eta_s, "h_s"), "h_i": _ratio(xi_i, filt.eta_i, "h_i")}


def _g2_of(values: np.ndarray) -> float:
    """1 + sum s^4 / (sum s^2)^2 via the Gram matrix of the smaller side."""
    if values.shape[0] > values.shape[1]:
        values = values.T
    gram = values @ values.conj().T
    tr = float(np.real(np.trace(gram)))
    if not tr > 0:
        raise UndefinedMetricError("filtered JSF has zero mass")
    return 1.0 + float(np.sum(np.abs(gram) ** 2)) / tr**2


def g2_one_side_filtered(jsf: JsfGrid, filt: FilterSpec, side: str = "signal") -> float:
    """Auto-correlation of one arm with only that arm's filter applied."""
    f_s, f_i = _weights(jsf, filt)
    m = jsf.weighted()
    if side == "signal":
        keep = f_s != 0
        return _g2_of(m[keep] * f_s[keep, None])
    if side == "idler":
        keep = f_i != 0
        return _g2_of(m[:, keep] * f_i[None, keep])
    raise DomainError("side must be 'signal' or 'idler'")


def g2_two_side_filtered(jsf: JsfGrid, filt: FilterSpec) -> float:
    """Auto-correlation of the JSF with both filters applied."""
    f_s, f_i = _weights(jsf, filt)
    ks, ki = f_s != 0, f_i != 0
    return _g2_of(jsf.weighted()[np.ix_(ks, ki)] * f_s[ks, None] * f_i[None, ki])


def filtered_heralded_purity(jsf: JsfGrid, filt: FilterSpec) -> dict:
    """Heralded-signal purity including the vacuum admixture from filter loss.

    T is the probability that a heralded signal photon passes its filter and
    R = 1 - T; the purity is T^2 sum rbar_k^4 + R^2 with rbar_k the Schmidt
    coefficients of the two-side-filtered JSF.
    """
    f_s, f_i = _weights(jsf, filt)
    _, m_i, m_c = _masses(jsf, f_s, f_i)
    t = _ratio(m_c, m_i, "T")
    r = 1.0 - t
    purity_bar = g2_two_side_filtered(jsf, filt) - 1.0
    return {"T": t, "R": r, "purity": t**2 * purity_bar + r**2}


def heralded_auto_g2(jsf: JsfGrid, filt: FilterSpec, gain: float) -> float:
    """Auto-correlation of the heralded signal arm.

    Detector efficiencies are taken as 1 here; only the filters enter.
    """
    f_s, f_i = _weights(jsf, filt)
    unit = replace(filt, eta_s=1.0, eta_i=1.0)
    eff = collection_and_heralding(jsf, unit)
    m = jsf.weighted()
    a2, b2 = f_s**2, f_i**2
    intensity = np.abs(m) ** 2
    p_c = gain**2 * float(np.sum(intensity * a2[:, None] * b2[None, :]))
    a_bar = float(np.sum(intensity * a2[:, None] * b2[None, :])) * float(np.sum(intensity * a2[:, None]))
    amp = m * f_s[:, None]
    q = amp.conj().T @ amp
    e_bar = float(np.sum(b2[:, None] * np.abs(q) ** 2))
    if not (a_bar > 0 and eff["h_s"] > 0 and eff["h_i"] > 0):
        raise UndefinedMetricError("heralded g2 needs nonzero heralding efficiencies")
    return 2 * p_c / (eff["h_s"] * eff["h_i"]) * (1 + e_bar / a_bar)


@dataclass
class MetricsReport:
    """All filtered metrics; entries that are undefined are None."""

    P_s: Optional[float] = None
    P_i: Optional[float] = None
    P_c: Optional[float] = None
    xi_s: Optional[float] = None
    xi_i: Optional[float] = None
    h_s: Optional[float] = None
    h_i: Optional[float] = None
    T: Optional[float] = None
    R: Optional[float] = None
    g2_bar_s: Optional[float] = None
    g2_bar_i: Optional[float] = None
    purity_filtered: Optional[float] = None
    heralded_g2: Optional[float] = None
    gain_G: Optional[float] = None
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["diagnostics"] = [d.to_dict() if isinstance(d, Diagnostic) else d for d in self.diagnostics]
        return out


def _guard(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


def compute_metrics(jsf: JsfGrid, filt: FilterSpec, gain: float = 0.1) -> MetricsReport:
    rep = MetricsReport(gain_G=gain)
    probs = singles_and_coincidences(jsf, filt, gain)
    rep.P_s, rep.P_i, rep.P_c = probs["P_s"], probs["P_i"], probs["P_c"]
    rep.diagnostics.extend(probs["diagnostics"])
    m_s, m_i, m_c = _masses(jsf, *_weights(jsf, filt))
    rep.xi_s = filt.eta_s * m_c / m_i if m_i > 0 else None
    rep.xi_i = filt.eta_i * m_c / m_s if m_s > 0 else None
    rep.h_s = rep.xi_s / filt.eta_s if rep.xi_s is not None and filt.eta_s > 0 else None
    rep.h_i = rep.xi_i / filt.eta_i if rep.xi_i is not None and filt.eta_i > 0 else None
    pur = _guard(filtered_heralded_purity, jsf, filt) or {}
    rep.T, rep.R, rep.purity_filtered = pur.get("T"), pur.get("R"), pur.get("purity")
    rep.g2_bar_s = _guard(g2_one_side_filtered, jsf, filt, "signal")
    rep.g2_bar_i = _guard(g2_one_side_filtered, jsf, filt, "idler")
    rep.heralded_g2 = _guard(heralded_auto_g2, jsf, filt, gain)
    return rep


@dataclass(frozen=True)
class ScanRow:
    dlambda_f_nm: float
    g2s: Optional[float]
    g2i: Optional[float]
    xi_s: Optional[float]
    xi_i: Optional[float]


class _ScanKernel:
    """Precomputed arrays for fast repeated rectangular-filter evaluation."""

    def __init__(self, jsf: JsfGrid, center_s: float, center_i: float, kind: str):
        self.jsf = jsf
        self.center_s, self.center_i, self.kind = center_s, center_i, kind
        self.m = jsf.weighted()
        self.a = np.abs(self.m) ** 2

    def row(self, dlambda_nm: float) -> ScanRow:
        filt = FilterSpec.common_bandwidth(self.center_s, self.center_i, dlambda_nm, kind=self.kind)
        f_s, f_i = _weights(self.jsf, filt)
        ks, ki = f_s != 0, f_i != 0
        w_s, w_i = f_s[ks] ** 2, f_i[ki] ** 2
        a_s = self.a[ks] * w_s[:, None]
        m_s = float(a_s.sum())
        m_i = float((self.a[:, ki] * w_i[None, :]).sum())
        m_c = float((a_s[:, ki] * w_i[None, :]).sum())
        xi_s = m_c / m_i if m_i > 0 else None
        xi_i = m_c / m_s if m_s > 0 else None
        g2s = _guard(_g2_of, self.m[ks] * f_s[ks, None])
        g2i = _guard(_g2_of, self.m[:, ki] * f_i[None, ki])
        return ScanRow(float(dlambda_nm), g2s, g2i, xi_s, xi_i)


def bandwidth_scan(jsf: JsfGrid, center_s: float, center_i: float,
                   bandwidths_nm: Iterable[float], kind: str = "rect",
                   workers: int | None = None) -> list[ScanRow]:
    """Sweep a common filter bandwidth (nm) about fixed centres.

    Detector efficiencies are 1. Rows come back in input order regardless of
    ``workers``.
    """
    kernel = _ScanKernel(jsf, center_s, center_i, kind)
    widths = [float(x) for x in bandwidths_nm]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(kernel.row, widths))
    return [kernel.row(x) for x in widths]


def optimal_row(rows: list[ScanRow]) -> ScanRow:
    """Row with the largest signal collection efficiency."""
    defined = [r for r in rows if r.xi_s is not None]
    if not defined:
        raise UndefinedMetricError("no scan row has a defined collection efficiency")
    return max(defined, key=lambda r: r.xi_s)


def scan_grid(lo_nm: float, hi_nm: float, step_nm: float) -> np.ndarray:
    """Inclusive bandwidth ladder with exact decimal steps."""
    n = int(round((hi_nm - lo_nm) / step_nm))
    return np.round(lo_nm + step_nm * np.arange(n + 1), 10)
