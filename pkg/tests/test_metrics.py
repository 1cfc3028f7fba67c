import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from nlijsf.dispersion import PumpSpec
from nlijsf.errors import DomainError, UndefinedMetricError
from nlijsf.grid import JsfGrid, SpectralGrid
from nlijsf.jsf import NliDesign, SimpleJsfParams, build_nli_jsf, build_single_fiber_jsf, island_window
from nlijsf.metrics import (
    FilterSpec,
    apply_filters,
    bandwidth_scan,
    collection_and_heralding,
    compute_metrics,
    filtered_heralded_purity,
    g2_one_side_filtered,
    g2_two_side_filtered,
    heralded_auto_g2,
    optimal_row,
    scan_grid,
    singles_and_coincidences,
)
from nlijsf.schmidt import schmidt_decompose


def fig1_jsf(n=64):
    pump = PumpSpec(1548.5e-9, 1e-9)
    grid = SpectralGrid.centered(pump.omega_p0, 24 * pump.sigma_p, n)
    return build_single_fiber_jsf(grid, pump, params=SimpleJsfParams(1.2, 1.8))


def product_jsf(n=48):
    g = SpectralGrid.centered(0.0, 6.0, n)
    f = np.exp(-g.omega_s_axis**2 / 2)[:, None] * np.exp(-(g.omega_i_axis - 0.5) ** 2 / 3)[None, :]
    return JsfGrid(g, f).normalize()


NO_FILTER = FilterSpec()


def test_transmission_shapes():
    w = np.linspace(-2, 2, 9)
    rect = FilterSpec(0.0, 0.0, 2.0, 1.0)
    np.testing.assert_array_equal(rect.transmission(w, "signal"), (np.abs(w) <= 1).astype(float))
    gauss = FilterSpec(0.0, 0.0, 1.0, 1.0, kind="gauss")
    np.testing.assert_allclose(gauss.transmission(w, "idler"), np.exp(-(w**2) / 2))
    np.testing.assert_array_equal(NO_FILTER.transmission(w, "signal"), np.ones_like(w))
    inf = FilterSpec(0.0, 0.0, math.inf, math.inf)
    np.testing.assert_array_equal(inf.transmission(w, "idler"), np.ones_like(w))


@pytest.mark.parametrize("kwargs", [dict(width_s=-1.0), dict(eta_s=1.5), dict(eta_i=-0.1), dict(kind="box")])
def test_filter_validation(kwargs):
    with pytest.raises(DomainError):
        FilterSpec(**kwargs)


def test_no_filter_is_identity():
    j = fig1_jsf()
    f = apply_filters(j, NO_FILTER)
    assert f.mass == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_array_equal(f.jsf.values, j.values)


def test_filter_selects_island_share(two_stage_256, pump, smf7):
    j = two_stage_256
    win = island_window(j, 1, smf7, pump)
    (s_lo, s_hi), (i_lo, i_hi) = win.valley_s, win.valley_i
    filt = FilterSpec((s_lo + s_hi) / 2, (i_lo + i_hi) / 2, s_hi - s_lo, i_hi - i_lo)
    ws, wi = j.grid.omega_s_axis, j.grid.omega_i_axis
    share = 0.0
    for a, x in enumerate(ws):
        for b, y in enumerate(wi):
            if s_lo <= x <= s_hi and i_lo <= y <= i_hi:
                share += abs(j.values[a, b]) ** 2 * j.grid.cell_area
    assert apply_filters(j, filt).mass == pytest.approx(share, rel=1e-10)
    assert 0.05 < share < 0.5


def test_disjoint_band_gives_zero_and_undefined():
    j = fig1_jsf()
    far = j.grid.omega_s_axis[-1] + 1e14
    filt = FilterSpec(far, far, 1e12, 1e12)
    assert apply_filters(j, filt).is_empty
    with pytest.raises(UndefinedMetricError):
        collection_and_heralding(j, filt)
    with pytest.raises(UndefinedMetricError):
        heralded_auto_g2(j, filt, 0.1)
    rep = compute_metrics(j, filt)
    assert rep.xi_s is None and rep.heralded_g2 is None and rep.g2_bar_s is None


def test_zero_width_is_empty_not_unfiltered():
    j = fig1_jsf()
    c = j.grid.omega_s_axis[10] + 0.5 * j.grid.d_omega_s
    assert apply_filters(j, FilterSpec(c, c, 0.0, 0.0)).mass == 0.0


def test_probabilities_without_filters():
    p = singles_and_coincidences(fig1_jsf(), NO_FILTER, 0.1)
    for key in ("P_s", "P_i", "P_c"):
        assert p[key] == pytest.approx(0.01, rel=1e-12)
    assert p["diagnostics"] == []


def test_idler_only_filter_probabilities():
    j = fig1_jsf()
    filt = FilterSpec(0.0, j.grid.omega_i_axis[32], None, 20 * j.grid.d_omega_i)
    p = singles_and_coincidences(j, filt, 0.2)
    f_i = filt.transmission(j.grid.omega_i_axis, "idler")
    mass = float(np.sum(np.abs(j.values) ** 2 * f_i[None, :] ** 2) * j.grid.cell_area)
    assert p["P_s"] == pytest.approx(0.04, rel=1e-12)
    assert p["P_i"] == pytest.approx(0.04 * mass, rel=1e-12)
    assert p["P_c"] == pytest.approx(0.04 * mass, rel=1e-12)


def test_detector_efficiency_linear():
    j = fig1_jsf()
    full = singles_and_coincidences(j, NO_FILTER, 0.1)
    half = singles_and_coincidences(j, FilterSpec(eta_s=0.5), 0.1)
    assert half["P_s"] == pytest.approx(full["P_s"] / 2)
    assert half["P_c"] == pytest.approx(full["P_c"] / 2)
    assert half["P_i"] == pytest.approx(full["P_i"])


def test_gain_validity_diagnostic():
    p = singles_and_coincidences(fig1_jsf(), NO_FILTER, 2.0)
    assert [d.code for d in p["diagnostics"]] == ["gain-validity"]
    with pytest.raises(DomainError):
        singles_and_coincidences(fig1_jsf(), NO_FILTER, 0.0)


def test_collection_without_filters():
    eff = collection_and_heralding(fig1_jsf(), NO_FILTER)
    assert eff["xi_s"] == pytest.approx(1.0) and eff["xi_i"] == pytest.approx(1.0)
    eff = collection_and_heralding(fig1_jsf(), FilterSpec(eta_s=0.8, eta_i=0.6))
    assert eff["xi_s"] == pytest.approx(0.8) and eff["h_s"] == pytest.approx(1.0)
    assert eff["xi_i"] == pytest.approx(0.6) and eff["h_i"] == pytest.approx(1.0)


def test_purity_single_mode_and_multimode():
    assert filtered_heralded_purity(product_jsf(), NO_FILTER)["purity"] == pytest.approx(1.0, abs=1e-10)
    j = fig1_jsf(128)
    pur = filtered_heralded_purity(j, NO_FILTER)
    assert pur["T"] == pytest.approx(1.0)
    assert pur["purity"] == pytest.approx(1 / schmidt_decompose(j).K, rel=1e-9)


def test_idler_only_filter_keeps_t_at_one():
    # T equals h_s, which is 1 whenever the signal arm is unfiltered
    j = fig1_jsf(128)
    c = j.grid.omega_i_axis[64]
    pur = filtered_heralded_purity(j, FilterSpec(c, c, None, 6 * j.grid.d_omega_i))
    assert pur["T"] == pytest.approx(1.0, abs=1e-12)
    assert pur["R"] == pytest.approx(0.0, abs=1e-12)


def test_tight_signal_filter_adds_vacuum_penalty():
    j = fig1_jsf(128)
    c = j.grid.omega_i_axis[64]
    filt = FilterSpec(c, c, 6 * j.grid.d_omega_s, 6 * j.grid.d_omega_i)
    pur = filtered_heralded_purity(j, filt)
    sum_r4 = g2_two_side_filtered(j, filt) - 1
    assert pur["T"] < 1
    assert pur["T"] == pytest.approx(collection_and_heralding(j, filt)["h_s"], rel=1e-12)
    assert pur["purity"] < sum_r4


@settings(deadline=None, max_examples=25)
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.sampled_from(["rect", "gauss"]))
def test_t_plus_r_is_one(ws, wi, kind):
    j = fig1_jsf(48)
    c = j.grid.omega_s_axis[24]
    filt = FilterSpec(c, c, ws * j.grid.d_omega_s * 8, wi * j.grid.d_omega_i * 8, kind=kind)
    try:
        pur = filtered_heralded_purity(j, filt)
    except UndefinedMetricError:
        return
    assert pur["T"] + pur["R"] == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= pur["T"] <= 1.0 + 1e-12


def test_product_state_g2_is_two_under_any_filter():
    j = product_jsf()
    filt = FilterSpec(0.3, -0.2, 2.0, 1.0, kind="gauss")
    assert g2_one_side_filtered(j, filt, "signal") == pytest.approx(2.0, abs=1e-10)
    assert g2_one_side_filtered(j, filt, "idler") == pytest.approx(2.0, abs=1e-10)
    assert g2_two_side_filtered(j, filt) == pytest.approx(2.0, abs=1e-10)


def test_one_side_g2_matches_singular_values():
    j = fig1_jsf(64)
    c = j.grid.omega_s_axis[30]
    filt = FilterSpec(c, c, 12 * j.grid.d_omega_s, 12 * j.grid.d_omega_i)
    f_s = filt.transmission(j.grid.omega_s_axis, "signal")
    s = np.linalg.svd(j.values * f_s[:, None], compute_uv=False) ** 2
    s /= s.sum()
    assert g2_one_side_filtered(j, filt, "signal") == pytest.approx(1 + np.sum(s**2), rel=1e-12)
    with pytest.raises(DomainError):
        g2_one_side_filtered(j, filt, "both")


def test_narrow_filters_near_single_mode(pump, fiber, smf7):
    g = SpectralGrid.from_wavelength_window(1528e-9, 1568e-9, 512)
    j = build_nli_jsf(NliDesign((50.0, 50.0), smf7), pump, fiber, g)
    for m in (1, 2, 3):
        win = island_window(j, m, smf7, pump)
        filt = FilterSpec.common_bandwidth(win.center_s, win.center_i, 0.15)
        assert g2_one_side_filtered(j, filt, "signal") == pytest.approx(2.0, abs=0.02)


def test_heralded_g2_single_mode():
    g2 = heralded_auto_g2(product_jsf(), NO_FILTER, 0.1)
    assert g2 == pytest.approx(0.04, abs=1e-6)
    # quadratic in gain
    assert heralded_auto_g2(product_jsf(), NO_FILTER, 0.05) == pytest.approx(g2 / 4, rel=1e-12)


def test_heralded_g2_matches_fourfold_oracle():
    j = fig1_jsf(40)
    g = j.grid
    c = g.omega_s_axis[20]
    filt = FilterSpec(c, c + 2 * g.d_omega_i, 14 * g.d_omega_s, 9 * g.d_omega_i, kind="gauss")
    a = filt.transmission(g.omega_s_axis, "signal")
    b = filt.transmission(g.omega_i_axis, "idler")
    v = j.values
    inten = np.abs(v) ** 2 * g.cell_area
    m_c = float(np.sum(inten * (a**2)[:, None] * (b**2)[None, :]))
    m_s = float(np.sum(inten * (a**2)[:, None]))
    m_i = float(np.sum(inten * (b**2)[None, :]))
    gain = 0.1
    a_bar = oracles.fourfold_a(v, g.d_omega_s, g.d_omega_i, a, b)
    e_bar = oracles.fourfold_e(v, g.d_omega_s, g.d_omega_i, a, b)
    expected = 2 * gain**2 * m_c / ((m_c / m_i) * (m_c / m_s)) * (1 + e_bar / a_bar)
    assert heralded_auto_g2(j, filt, gain) == pytest.approx(expected, rel=1e-10)


def test_heralded_g2_grows_as_idler_heralding_drops():
    j = fig1_jsf(128)
    c = j.grid.omega_i_axis[64]
    wide = FilterSpec(c, c, None, 40 * j.grid.d_omega_i)
    narrow = FilterSpec(c, c, None, 10 * j.grid.d_omega_i)
    h_wide = collection_and_heralding(j, wide)["h_i"]
    h_narrow = collection_and_heralding(j, narrow)["h_i"]
    assert h_narrow < h_wide
    assert heralded_auto_g2(j, narrow, 0.1) > heralded_auto_g2(j, wide, 0.1)


def test_compute_metrics_report():
    rep = compute_metrics(fig1_jsf(), NO_FILTER, 0.1)
    d = rep.to_dict()
    assert d["xi_s"] == pytest.approx(1.0) and d["gain_G"] == 0.1
    assert d["g2_bar_s"] == pytest.approx(1 + 1 / schmidt_decompose(fig1_jsf()).K, rel=1e-9)
    assert d["diagnostics"] == []


def test_scan_grid_exact_steps():
    grid = scan_grid(0.2, 4.5, 0.01)
    assert grid[0] == 0.2 and grid[-1] == 4.5 and len(grid) == 431
    assert 3.6 in grid


def test_scan_rows_match_direct_metrics(two_stage_256, pump, smf7):
    j = two_stage_256
    win = island_window(j, 1, smf7, pump)
    rows = bandwidth_scan(j, win.center_s, win.center_i, [3.6])
    rep = compute_metrics(j, FilterSpec.common_bandwidth(win.center_s, win.center_i, 3.6))
    assert len(rows) == 1
    assert rows[0].xi_s == pytest.approx(rep.xi_s, rel=1e-12)
    assert rows[0].xi_i == pytest.approx(rep.xi_i, rel=1e-12)
    assert rows[0].g2s == pytest.approx(rep.g2_bar_s, rel=1e-12)
    assert rows[0].g2i == pytest.approx(rep.g2_bar_i, rel=1e-12)


def test_scan_deterministic_across_workers(two_stage_256, pump, smf7):
    j = two_stage_256
    win = island_window(j, 2, smf7, pump)
    widths = scan_grid(0.5, 3.0, 0.1)
    serial = bandwidth_scan(j, win.center_s, win.center_i, widths)
    pooled = bandwidth_scan(j, win.center_s, win.center_i, widths, workers=4)
    assert serial == pooled
    assert [r.dlambda_f_nm for r in serial] == list(widths)


def test_optimal_row_and_empty():
    from nlijsf.metrics import ScanRow
    rows = [ScanRow(1.0, 1.9, 1.9, 0.9, 0.8), ScanRow(2.0, 1.8, 1.8, 0.95, 0.9), ScanRow(3.0, None, None, None, None)]
    assert optimal_row(rows).dlambda_f_nm == 2.0
    with pytest.raises(UndefinedMetricError):
        optimal_row(rows[2:])


def test_single_fiber_trends(config_dir):
    """Without interference, wider filters trade purity for collection."""
    from nlijsf import config, runner
    sc = runner.resolve(config.load(config_dir / "fig4-nonnli.cfg"))
    j = runner.build_jsf(sc)
    cs, ci = runner.filter_centers(sc, j)
    rows = bandwidth_scan(j, cs, ci, scan_grid(0.2, 4.0, 0.05))
    g2 = np.array([r.g2s for r in rows])
    xi = np.array([r.xi_s for r in rows])
    assert np.all(np.diff(g2) <= 1e-12)
    assert xi[-1] > 0.8 > 0.2 > xi[0]
    assert np.corrcoef(np.arange(xi.size), xi)[0, 1] > 0.9
