"""Scenario orchestration: config -> model objects -> result files."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import io as fio
from .config import Config, load
from .design import (
    DesignQuery,
    binomial_lengths,
    elliptical_condition,
    round_island_ldm,
    stripe_width,
)
from .dispersion import (
    LARGE_DETUNING,
    SMALL_DETUNING,
    DispersiveMediumSpec,
    FiberSpec,
    PumpSpec,
    stripe_orientation,
    tau_from_sellmeier,
)
from .errors import ConfigError, Diagnostic
from .grid import JsfGrid, SpectralGrid
from .highgain import (
    DEFAULT_ORDER,
    commutator_residual,
    green_closed_form,
    green_series,
    highgain_mode_indices,
)
from .jsf import (
    NliDesign,
    SimpleJsfParams,
    build_nli_jsf,
    build_single_fiber_jsf,
    interference_h,
    island_window,
    marginal_intensity,
)
from .metrics import FilterSpec, bandwidth_scan, compute_metrics
from .schmidt import schmidt_decompose
from .units import omega_from_wavelength, wavelength_from_omega

DEFAULT_GRID_N = 512


# ---------------------------------------------------------------- builders

def build_pump(cfg: Config) -> PumpSpec:
    return PumpSpec(cfg.require("pump.lambda_p0"), cfg.require("pump.fwhm"),
                    cfg.get("pump.chirp", 0.0))


def build_fiber(cfg: Config, need_length: bool) -> FiberSpec:
    length = cfg.require("fiber.length") if need_length else cfg.get("fiber.length", 0.0)
    return FiberSpec(length, cfg.require("fiber.lambda_zero"), cfg.require("fiber.d_slope"),
                     cfg.get("fiber.gamma_pp", 0.0))


def _load_samples(cfg: Config) -> tuple[tuple, tuple]:
    path = cfg.resolve_path(cfg.require("dm.samples_file"))
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read samples: {exc}", "dm.samples_file") from None
    return tuple(data[:, 0]), tuple(data[:, 1])


def build_dm(cfg: Config, pump: PumpSpec) -> Optional[DispersiveMediumSpec]:
    if not cfg.has("dm.kind"):
        return None
    kind = cfg.values["dm.kind"]
    kw: dict = {"length": cfg.get("dm.length", 0.0)}
    if kind == SMALL_DETUNING:
        kw["d_smf"] = cfg.require("dm.d_smf")
    elif kind == LARGE_DETUNING:
        kw["lambda_s0"] = cfg.require("dm.lambda_s0")
        kw["lambda_i0"] = cfg.require("dm.lambda_i0")
        kw["dk0"] = cfg.get("dm.dk0", 0.0)
        if cfg.get("dm.tau_source", "explicit") == "sellmeier":
            kw["tau_s"], kw["tau_i"] = tau_from_sellmeier(pump.lambda_p0, kw["lambda_s0"], kw["lambda_i0"])
        else:
            kw["tau_s"], kw["tau_i"] = cfg.require("dm.tau_s"), cfg.require("dm.tau_i")
    elif kind == "tabulated":
        kw["table_omega"], kw["table_k"] = _load_samples(cfg)
    elif kind == "arbitrary-phase":
        kw["phase_omega"], kw["phase_values"] = _load_samples(cfg)
    return DispersiveMediumSpec(kind, **kw)


def stage_lengths(cfg: Config, stage_count: int | None = None) -> tuple[float, ...]:
    layout = cfg.get("nli.layout", "explicit")
    if layout == "explicit" and stage_count is None:
        return tuple(cfg.require("nli.stage_lengths"))
    n = stage_count if stage_count is not None else cfg.require("nli.stage_count")
    if layout == "explicit":
        first = cfg.require("nli.stage_lengths")[0]
        return (first,) * n
    first = cfg.require("nli.first_length")
    if layout == "binomial" and n >= 2:
        return binomial_lengths(n, first)
    return (first,) * n


def build_design(cfg: Config, dm, stage_count: int | None = None) -> NliDesign:
    lengths = stage_lengths(cfg, stage_count)
    # a stage-count scan may step down to a single fiber, which has no medium
    if stage_count is not None and len(lengths) == 1:
        dm = None
    return NliDesign(lengths, dm,
                     cfg.get("nli.include_sinc", True),
                     cfg.get("nli.include_dk_in_theta", True),
                     cfg.get("nli.uneven_mode", "approx"))


def build_grid(cfg: Config, pump: PumpSpec, n_override: int | None = None) -> SpectralGrid:
    n = n_override or cfg.get("grid.n", DEFAULT_GRID_N)
    n_i = n_override or cfg.get("grid.n_i", n)
    modes = [cfg.has("grid.lambda_min") or cfg.has("grid.lambda_max"),
             cfg.has("grid.signal_min") or cfg.has("grid.idler_min"),
             cfg.has("grid.half_span_sigma")]
    if sum(modes) != 1:
        raise ConfigError("give exactly one of lambda_min/max, signal/idler bounds, "
                          "or half_span_sigma", "grid")
    if modes[0]:
        return SpectralGrid.from_wavelength_window(cfg.require("grid.lambda_min"),
                                                   cfg.require("grid.lambda_max"), n, n_i=n_i)
    if modes[1]:
        return SpectralGrid.from_wavelength_window(
            cfg.require("grid.signal_min"), cfg.require("grid.signal_max"), n,
            idler_window=(cfg.require("grid.idler_min"), cfg.require("grid.idler_max")), n_i=n_i)
    span = cfg.values["grid.half_span_sigma"] * pump.sigma_p
    w0 = pump.omega_p0
    return SpectralGrid.from_omega_bounds(w0 - span, w0 + span, w0 - span, w0 + span, n, n_i)


@dataclass
class Scenario:
    """Model objects resolved from one config."""

    cfg: Config
    pump: PumpSpec
    grid: SpectralGrid
    fiber: Optional[FiberSpec] = None
    dm: Optional[DispersiveMediumSpec] = None
    design: Optional[NliDesign] = None
    simple: Optional[SimpleJsfParams] = None

    @property
    def kind(self) -> str:
        return self.cfg.values["scenario.kind"]


def _dummy_fiber(pump: PumpSpec) -> FiberSpec:
    # no dispersion and no nonlinear phase: dk = 0 everywhere
    return FiberSpec(0.0, pump.lambda_p0, 0.0, 0.0)


def resolve(cfg: Config, n_override: int | None = None, stage_count: int | None = None) -> Scenario:
    kind = cfg.require("scenario.kind")
    pump = build_pump(cfg)
    grid = build_grid(cfg, pump, n_override)
    sc = Scenario(cfg, pump, grid)
    if kind == "single-simple":
        sc.simple = SimpleJsfParams(cfg.require("simple.a_ratio"), cfg.require("simple.b_ratio"),
                                    cfg.get("pump.chirp", 0.0))
    elif kind == "single-fiber":
        sc.fiber = build_fiber(cfg, need_length=True)
    elif kind == "nli":
        sc.dm = build_dm(cfg, pump)
        sc.design = build_design(cfg, sc.dm, stage_count)
        needs_fiber = sc.design.include_sinc or sc.design.include_dk_in_theta or not sc.design.is_even
        sc.fiber = build_fiber(cfg, need_length=False) if cfg.has("fiber.lambda_zero") or needs_fiber \
            else _dummy_fiber(pump)
    elif kind == "interference-factor":
        sc.dm = build_dm(cfg, pump)
        if sc.dm is None:
            raise ConfigError("interference-factor scenarios need a dispersive medium", "dm.kind")
    return sc


def build_jsf(sc: Scenario) -> JsfGrid:
    if sc.kind == "single-simple":
        return build_single_fiber_jsf(sc.grid, sc.pump, params=sc.simple)
    if sc.kind == "single-fiber":
        return build_single_fiber_jsf(sc.grid, sc.pump, fiber=sc.fiber)
    if sc.kind == "nli":
        return build_nli_jsf(sc.design, sc.pump, sc.fiber, sc.grid)
    raise ConfigError(f"scenario kind {sc.kind!r} has no JSF", "scenario.kind")


def interference_amplitude(sc: Scenario) -> np.ndarray:
    from .dispersion import delta_phi_dm

    n = sc.cfg.get("nli.stage_count", 2)
    ws, wi = sc.grid.mesh()
    theta = np.broadcast_to(delta_phi_dm(ws, wi, sc.pump, sc.dm) / 2, (sc.grid.n_s, sc.grid.n_i))
    return interference_h(theta, n) / n


def build_filter(sc: Scenario, jsf: JsfGrid | None, bandwidth_nm: float | None = None) -> Optional[FilterSpec]:
    cfg = sc.cfg
    if not (cfg.has("filter.bandwidth") or cfg.has("filter.island") or cfg.has("filter.center_s")
            or bandwidth_nm is not None):
        return None
    cs, ci = filter_centers(sc, jsf)
    width_nm = bandwidth_nm if bandwidth_nm is not None else (
        cfg.values["filter.bandwidth"] * 1e9 if cfg.has("filter.bandwidth") else None)
    eta = {"eta_s": cfg.get("filter.eta_s", 1.0), "eta_i": cfg.get("filter.eta_i", 1.0),
           "kind": cfg.get("filter.kind", "rect")}
    if width_nm is None:
        return FilterSpec(cs, ci, None, None, **eta)
    return FilterSpec.common_bandwidth(cs, ci, width_nm, **eta)


def filter_centers(sc: Scenario, jsf: JsfGrid | None) -> tuple[float, float]:
    cfg = sc.cfg
    if cfg.has("filter.center_s"):
        return (omega_from_wavelength(cfg.values["filter.center_s"]),
                omega_from_wavelength(cfg.require("filter.center_i")))
    if cfg.has("filter.island"):
        if sc.dm is None or sc.dm.kind != SMALL_DETUNING or jsf is None:
            raise ConfigError("island-centred filters need a small-detuning NLI", "filter.island")
        win = island_window(jsf, cfg.values["filter.island"], sc.dm, sc.pump)
        return win.center_s, win.center_i
    return sc.pump.omega_p0, sc.pump.omega_p0


# ---------------------------------------------------------------- outputs

@dataclass
class RunResult:
    files: list[Path] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, path: Path):
        self.files.append(Path(path))


def _fmt_out(cfg: Config, override: str | None) -> str:
    return override or cfg.get("output.format", "csv")


def step_jsf(sc: Scenario, out: Path, res: RunResult, fmt: str) -> JsfGrid:
    if sc.kind == "interference-factor":
        amp = interference_amplitude(sc)
        res.add(fio.write_jsf(out / "interference", JsfGrid(sc.grid, amp), fmt))
        info: dict = {"kind": sc.dm.kind}
        if sc.dm.kind == LARGE_DETUNING:
            info.update(tau_s=sc.dm.tau_s, tau_i=sc.dm.tau_i,
                        stripe_orientation_deg=stripe_orientation(sc.dm.tau_s, sc.dm.tau_i))
        res.add(fio.write_json(out / "interference.json", info))
        res.summary["interference"] = info
        return None
    jsf = build_jsf(sc)
    res.diagnostics.extend(jsf.diagnostics)
    if sc.cfg.get("output.grid", True):
        res.add(fio.write_jsf(out / "jsf", jsf, fmt))
    for side in ("signal", "idler"):
        omega, dens = marginal_intensity(jsf, side)
        res.add(fio.write_rows(out / f"marginal_{side}.csv", ("omega_rad_s", "lambda_nm", "density"),
                               zip(omega, wavelength_from_omega(omega) * 1e9, dens)))
    islands = sc.cfg.get("analysis.islands", [])
    if islands and sc.dm is not None and sc.dm.kind == SMALL_DETUNING:
        table = []
        for m in islands:
            w = island_window(jsf, m, sc.dm, sc.pump)
            table.append({"m": m, "center_s_nm": w.center_s_nm, "center_i_nm": w.center_i_nm,
                          "analytic_s_nm": w.analytic_s_nm, "analytic_i_nm": w.analytic_i_nm,
                          "center_s_rad_s": w.center_s, "center_i_rad_s": w.center_i})
        res.add(fio.write_json(out / "islands.json", {"islands": table}))
        res.summary["islands"] = table
    return jsf


def step_schmidt(sc: Scenario, jsf: JsfGrid, out: Path, res: RunResult):
    dec = schmidt_decompose(jsf)
    summary = dec.summary()
    res.add(fio.write_json(out / "schmidt.json", summary))
    res.summary["schmidt"] = {"K": summary["K"], "g2": summary["g2"], "purity": summary["purity"]}
    for k in range(min(sc.cfg.get("analysis.modes", 4), dec.truncation_rank)):
        res.add(fio.write_mode_csv(out / f"mode_s_{k}.csv", dec.omega_s_axis, dec.signal_modes[:, k]))
        res.add(fio.write_mode_csv(out / f"mode_i_{k}.csv", dec.omega_i_axis, dec.idler_modes[:, k]))
    return dec


def step_metrics(sc: Scenario, jsf: JsfGrid, out: Path, res: RunResult):
    filt = build_filter(sc, jsf)
    if filt is None:
        filt = FilterSpec()
    rep = compute_metrics(jsf, filt, sc.cfg.get("gain.G", 0.1))
    res.diagnostics.extend(rep.diagnostics)
    data = rep.to_dict()
    if filt.width_s is not None:
        data["dlambda_f_nm"] = round(sc.cfg.values.get("filter.bandwidth", 0.0) * 1e9, 9)
    res.add(fio.write_json(out / "metrics.json", data))
    res.summary["metrics"] = {k: v for k, v in data.items() if k != "diagnostics"}
    return rep


def _gain_ladder(cfg: Config) -> list[float]:
    if cfg.get("scan.parameter") == "gain" and cfg.has("scan.start"):
        return list(_range(cfg))
    return cfg.get("gain.ladder", [cfg.get("gain.G", 0.1)])


def step_highgain(sc: Scenario, jsf: JsfGrid, out: Path, res: RunResult, fmt: str,
                  gains: list[float] | None = None):
    cfg = sc.cfg
    gains = gains if gains is not None else _gain_ladder(cfg)
    method = cfg.get("highgain.method", "closed-form")
    order = cfg.get("highgain.order", DEFAULT_ORDER)
    filt = build_filter(sc, jsf) or FilterSpec()
    dec = schmidt_decompose(jsf, "full") if method == "closed-form" else None
    table, report = [], []
    for g in gains:
        gf = green_closed_form(dec, jsf.grid, g) if dec is not None else green_series(jsf, g, order)
        res.diagnostics.extend(gf.diagnostics)
        coeffs = highgain_mode_indices(gf, filt)
        table.extend((k, float(c), g) for k, c in enumerate(coeffs[: cfg.get("analysis.modes", 10)]))
        report.append({"G": g, "leading_coefficient": float(coeffs[0]),
                       "commutator_residual_signal": commutator_residual(gf, "signal"),
                       "commutator_residual_idler": commutator_residual(gf, "idler")})
        if cfg.get("output.grid", True):
            res.add(fio.write_jsf(out / f"h2s_G{g:g}", JsfGrid(gf.grid, gf.kernel("h2s")), fmt))
    res.add(fio.write_mode_index_csv(out / "mode_indices.csv", table))
    res.add(fio.write_json(out / "highgain.json", {"method": method, "gains": report}))
    res.summary["highgain"] = report


def _range(cfg: Config) -> np.ndarray:
    start, stop = cfg.require("scan.start"), cfg.require("scan.stop")
    step = cfg.get("scan.step", stop - start if stop > start else 1.0)
    if step <= 0 or stop < start:
        raise ConfigError("need start <= stop and a positive step", "scan")
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 10)


def step_scan(sc: Scenario, jsf: JsfGrid, out: Path, res: RunResult, fmt: str,
              parameter: str | None = None, grid_n: int | None = None):
    cfg = sc.cfg
    parameter = parameter or cfg.require("scan.parameter")
    if parameter == "filter_bandwidth":
        cs, ci = filter_centers(sc, jsf)
        rows = bandwidth_scan(jsf, cs, ci, _range(cfg), cfg.get("filter.kind", "rect"),
                              cfg.get("scan.workers", 1))
        res.add(fio.write_scan_csv(out / "scan_bandwidth.csv", rows))
        res.summary["scan_rows"] = len(rows)
    elif parameter == "gain":
        step_highgain(sc, jsf, out, res, fmt, list(_range(cfg)) if cfg.has("scan.start") else None)
    elif parameter == "stage_count":
        rows = []
        for n in _range(cfg):
            sub = resolve(cfg, grid_n, int(n))
            j = build_jsf(sub)
            filt = build_filter(sub, j) or FilterSpec()
            rep = compute_metrics(j, filt, cfg.get("gain.G", 0.1))
            k = schmidt_decompose(j).K
            rows.append((str(int(n)), k, rep.g2_bar_s, rep.g2_bar_i, rep.xi_s, rep.xi_i))
        res.add(fio.write_rows(out / "scan_stage_count.csv",
                               ("stage_count", "K", "g2s", "g2i", "xi_s", "xi_i"), rows))
        res.summary["scan_rows"] = len(rows)
    else:
        raise ConfigError(f"unknown scan parameter {parameter!r}", "scan.parameter")


def design_report(sc: Scenario) -> dict:
    cfg, pump, dm = sc.cfg, sc.pump, sc.dm
    m = cfg.get("filter.island") or (cfg.get("analysis.islands") or [1])[0]
    n = sc.design.n_stages if sc.design is not None else cfg.get("nli.stage_count", 2)
    rep: dict = {"sigma_p_rad_s": pump.sigma_p, "m": m, "stage_count": n}
    if dm is not None and dm.kind == SMALL_DETUNING:
        q = DesignQuery(max(m, 1), max(n, 2), pump, dm)
        rep["round_island_ldm_m"] = round_island_ldm(q)
        if dm.length > 0:
            rep["stripe_width_rad_s"] = stripe_width(max(m, 1), dm, pump)
    if dm is not None and dm.kind == LARGE_DETUNING:
        rep["stripe_orientation_deg"] = stripe_orientation(dm.tau_s, dm.tau_i)
        rep["elliptical"] = elliptical_condition(dm.tau_s, dm.tau_i, dm.length).to_dict()
        rep["elliptical"]["pump_sigma_p2"] = pump.sigma_p**2
    if cfg.has("nli.first_length") and n >= 2:
        rep["binomial_lengths_m"] = list(binomial_lengths(n, cfg.values["nli.first_length"]))
    return rep


def step_design(sc: Scenario, out: Path, res: RunResult):
    rep = design_report(sc)
    res.add(fio.write_json(out / "design.json", rep))
    res.summary["design"] = rep


COMMANDS = ("jsf", "schmidt", "metrics", "highgain", "scan", "design", "run")


def execute(cfg: Config, command: str, out: Path, grid_n: int | None = None,
            fmt: str | None = None, parameter: str | None = None) -> RunResult:
    """Run one subcommand for a single-scenario config, writing into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    res = RunResult()
    sc = resolve(cfg, grid_n)
    fmt = _fmt_out(cfg, fmt)
    if command == "design":
        step_design(sc, out, res)
        return res
    jsf = step_jsf(sc, out, res, fmt)
    if jsf is None:
        return res
    if command in ("schmidt", "run") and cfg.get("analysis.schmidt", True):
        step_schmidt(sc, jsf, out, res)
    if command == "metrics" or (command == "run" and build_filter(sc, jsf) is not None):
        step_metrics(sc, jsf, out, res)
    if command == "highgain" or (command == "run" and cfg.get("highgain.enabled", False)):
        step_highgain(sc, jsf, out, res, fmt)
    if command == "scan" or (command == "run" and cfg.has("scan.parameter")):
        step_scan(sc, jsf, out, res, fmt, parameter, grid_n)
    if command == "run" and sc.design is not None and sc.dm is not None:
        step_design(sc, out, res)
    return res


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_config(path: Path, command: str, out: Path, grid_n: int | None = None,
               fmt: str | None = None, parameter: str | None = None) -> dict:
    """Run a config (single scenario or suite) and write ``manifest.json``."""
    started = _now()
    cfg = load(path)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    entries: list[tuple[str, Config, Path]] = []
    if cfg.has("suite.configs"):
        if cfg.has("scenario.kind"):
            raise ConfigError("a suite cannot also define a scenario", "suite.configs")
        for rel in cfg.values["suite.configs"]:
            sub_path = cfg.resolve_path(rel)
            entries.append((Path(rel).stem, load(sub_path), out / Path(rel).stem))
    else:
        entries.append(("", cfg, out))
    files, diags, summaries = [], [], {}
    for name, sub, sub_out in entries:
        try:
            res = execute(sub, command, sub_out, grid_n, fmt, parameter)
        except ConfigError as exc:
            if name:
                raise ConfigError(f"[{name}] {exc}", exc.key) from None
            raise
        files.extend(res.files)
        diags.extend(d.to_dict() for d in res.diagnostics)
        summaries[name or "scenario"] = res.summary
    manifest = {
        "config": str(Path(path)),
        "config_digest": cfg.digest(),
        "tool": "nlijsf",
        "tool_version": __version__,
        "command": command,
        "started": started,
        "finished": _now(),
        "files": [{"path": str(p.relative_to(out)), "sha256": fio.sha256_file(p),
                   "bytes": p.stat().st_size} for p in files],
        "diagnostics": diags,
        "summary": summaries,
    }
    fio.write_json(out / "manifest.json", manifest)
    return manifest
