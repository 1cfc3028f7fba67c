import csv
import json

import pytest

from nlijsf import io as fio
from nlijsf.cli import EXIT_INVALID, EXIT_OK, EXIT_STRICT, main


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def checksums(out):
    return {f["path"]: f["sha256"] for f in manifest(out)["files"]}


def write_cfg(tmp_path, name, base, extra=""):
    text = base.read_text() + extra
    path = tmp_path / name
    path.write_text(text)
    return path


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "nlijsf" in capsys.readouterr().out


def test_empty_suite(config_dir, tmp_path):
    assert main(["run", str(config_dir / "empty.cfg"), "--out", str(tmp_path)]) == EXIT_OK
    m = manifest(tmp_path)
    assert m["files"] == [] and m["diagnostics"] == []
    assert len(m["config_digest"]) == 64 and m["tool_version"]


def test_jsf_command_files_and_checksums(config_dir, tmp_path):
    assert main(["jsf", str(config_dir / "fig2b.cfg"), "--out", str(tmp_path), "--grid", "128"]) == EXIT_OK
    m = manifest(tmp_path)
    names = {f["path"] for f in m["files"]}
    assert {"jsf.csv", "marginal_signal.csv", "marginal_idler.csv", "islands.json"} <= names
    for entry in m["files"]:
        assert fio.sha256_file(tmp_path / entry["path"]) == entry["sha256"]
        assert (tmp_path / entry["path"]).stat().st_size == entry["bytes"]
    with (tmp_path / "jsf.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 128 * 128
    float(rows[1][2])


def test_fig2b_first_island(config_dir, tmp_path):
    assert main(["jsf", str(config_dir / "fig2b.cfg"), "--out", str(tmp_path)]) == EXIT_OK
    islands = json.loads((tmp_path / "islands.json").read_text())["islands"]
    assert islands[0]["m"] == 1
    assert islands[0]["center_s_nm"] == pytest.approx(1556.7, abs=0.2)


def test_fig1_schmidt_summary(config_dir, tmp_path):
    assert main(["schmidt", str(config_dir / "fig1.cfg"), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "schmidt.json").read_text())
    assert summary["K"] == pytest.approx(6.1, abs=0.2)
    assert summary["g2"] == pytest.approx(1 + 1 / summary["K"])
    assert (tmp_path / "mode_s_0.csv").exists() and (tmp_path / "mode_i_0.csv").exists()


def test_binary_format(config_dir, tmp_path):
    assert main(["jsf", str(config_dir / "fig1.cfg"), "--out", str(tmp_path), "--grid", "32",
                 "--format", "bin"]) == EXIT_OK
    grid, values = fio.read_grid_bin(tmp_path / "jsf.bin")
    assert values.shape == (32, 32)


def test_rerun_is_byte_identical(config_dir, tmp_path):
    args = [str(config_dir / "fig10.cfg"), "--grid", "96"]
    assert main(["run", *args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", *args, "--out", str(tmp_path / "b")]) == EXIT_OK
    a, b = checksums(tmp_path / "a"), checksums(tmp_path / "b")
    assert a == b and a


def test_scan_identical_across_worker_counts(config_dir, tmp_path):
    base = config_dir / "fig4-m1.cfg"
    one = write_cfg(tmp_path, "one.cfg", base, "scan.workers = 1\n")
    four = write_cfg(tmp_path, "four.cfg", base, "scan.workers = 4\n")
    assert main(["scan", str(one), "--out", str(tmp_path / "one"), "--grid", "128"]) == EXIT_OK
    assert main(["scan", str(four), "--out", str(tmp_path / "four"), "--grid", "128"]) == EXIT_OK
    a = (tmp_path / "one" / "scan_bandwidth.csv").read_bytes()
    assert a == (tmp_path / "four" / "scan_bandwidth.csv").read_bytes()
    assert a.count(b"\n") == 1 + 431


def test_single_point_scan_equals_metrics(config_dir, tmp_path):
    cfg = write_cfg(tmp_path, "p.cfg", config_dir / "fig10.cfg",
                    "scan.parameter = filter_bandwidth\nscan.start = 3.6\nscan.stop = 3.6\n")
    assert main(["scan", str(cfg), "--out", str(tmp_path / "s"), "--grid", "128"]) == EXIT_OK
    assert main(["metrics", str(cfg), "--out", str(tmp_path / "m"), "--grid", "128"]) == EXIT_OK
    with (tmp_path / "s" / "scan_bandwidth.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    metrics = json.loads((tmp_path / "m" / "metrics.json").read_text())
    assert len(rows) == 1
    assert float(rows[0]["dlambda_f_nm"]) == metrics["dlambda_f_nm"] == 3.6
    assert float(rows[0]["xi_s"]) == pytest.approx(metrics["xi_s"], rel=1e-12)
    assert float(rows[0]["g2s"]) == pytest.approx(metrics["g2_bar_s"], rel=1e-12)


def test_gain_ladder_monotone(config_dir, tmp_path):
    assert main(["highgain", str(config_dir / "fig10.cfg"), "--out", str(tmp_path), "--grid", "256"]) == EXIT_OK
    gains = json.loads((tmp_path / "highgain.json").read_text())["gains"]
    lead = [g["leading_coefficient"] for g in gains]
    assert [g["G"] for g in gains] == [0.3, 1.5, 3.0]
    assert lead[0] < lead[1] < lead[2]
    with (tmp_path / "mode_indices.csv").open() as fh:
        assert next(csv.reader(fh)) == ["k", "coefficient", "G"]


def test_stage_count_scan(config_dir, tmp_path):
    cfg = write_cfg(tmp_path, "n.cfg", config_dir / "fig7c.cfg")
    text = cfg.read_text().replace("scan.parameter = filter_bandwidth", "scan.parameter = stage_count")
    text = text.replace("scan.start = 0.2", "scan.start = 1").replace("scan.step = 0.01", "scan.step = 1")
    cfg.write_text(text)
    assert main(["scan", str(cfg), "--out", str(tmp_path / "o"), "--grid", "96"]) == EXIT_OK
    with (tmp_path / "o" / "scan_stage_count.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["stage_count"] for r in rows] == ["1", "2", "3"]


def test_design_command(config_dir, tmp_path):
    assert main(["design", str(config_dir / "fig6-N2.cfg"), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "design.json").read_text())
    assert rep["round_island_ldm_m"] > 0
    assert main(["design", str(config_dir / "fig5.cfg"), "--out", str(tmp_path / "e")]) == EXIT_OK
    rep = json.loads((tmp_path / "e" / "design.json").read_text())
    assert rep["elliptical"]["feasible"]
    assert 0 < rep["stripe_orientation_deg"] < 90


def test_suite_runs_into_subdirectories(config_dir, tmp_path):
    assert main(["scan", str(config_dir / "fig4.cfg"), "--out", str(tmp_path), "--grid", "96"]) == EXIT_OK
    paths = {f["path"] for f in manifest(tmp_path)["files"]}
    assert "fig4-m1/scan_bandwidth.csv" in paths and "fig4-nonnli/scan_bandwidth.csv" in paths


def test_invalid_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("scenario.kind = nli\npump.wavelength = 1 nm\n")
    assert main(["jsf", str(bad), "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert "pump.wavelength" in capsys.readouterr().err
    assert main(["jsf", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "o")]) == EXIT_INVALID


def test_strict_escalates_diagnostics(config_dir, tmp_path):
    # the 1528-1568 nm window clips the pump ridge slightly
    args = ["jsf", str(config_dir / "fig2b.cfg"), "--grid", "64"]
    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert manifest(tmp_path / "a")["diagnostics"]
    assert main([*args, "--out", str(tmp_path / "b"), "--strict"]) == EXIT_STRICT
    # a near-separable single fiber decays well inside its 24 sigma window
    text = (config_dir / "fig1.cfg").read_text()
    text = text.replace("simple.a_ratio = 1.2", "simple.a_ratio = 0.3")
    text = text.replace("simple.b_ratio = 1.8", "simple.b_ratio = -0.3")
    clean = tmp_path / "clean.cfg"
    clean.write_text(text)
    assert main(["jsf", str(clean), "--grid", "64", "--strict", "--out", str(tmp_path / "c")]) == EXIT_OK


@pytest.mark.parametrize("command", ["jsf", "schmidt", "metrics", "highgain", "scan", "design", "run"])
def test_every_subcommand_runs(command, config_dir, tmp_path):
    name = "fig4-m1.cfg" if command == "scan" else "fig10.cfg"
    assert main([command, str(config_dir / name), "--out", str(tmp_path), "--grid", "64"]) == EXIT_OK
    assert (tmp_path / "manifest.json").exists()
