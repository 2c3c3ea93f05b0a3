import json
import os

import pytest

from torus_scatterer import cli, lattice


def run(argv):
    return cli.main(argv)


def test_spectrum_writes_expected_rows(tmp_path):
    out = tmp_path / "spec.csv"
    assert run(["spectrum", "--d", "2", "--phi", "0", "--x", "60", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "lambda,lower_norm,upper_norm,residual"
    norms = lattice.enumerate_norms(60, 2).norms
    assert len(lines) - 1 == len(norms)  # one root per gap plus the one below zero
    assert lines[1].split(",")[1] == "-inf"


def test_spectrum_reruns_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["spectrum", "--d", "3", "--phi", "0.5", "--x", "40"]
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_phi_validation_exit_code():
    assert run(["spectrum", "--phi", "3.15", "--x", "30"]) == 2
    assert run(["spectrum", "--d", "5", "--x", "30"]) == 2


def test_mode_delta_validation_exit_code():
    rc = run(["scan", "--mode", "2d", "--d", "2", "--x", "50", "--eps", "0.3", "--delta", "0.2"])
    assert rc == 2
    rc = run(["scan", "--mode", "3d-filtered", "--d", "3", "--x", "50", "--eps", "0.3", "--delta", "0.05"])
    assert rc == 2
    rc = run(["scan", "--mode", "3d-all", "--d", "2", "--x", "50"])
    assert rc == 2


def test_numerical_failure_exit_code():
    # phi this close to pi puts the root too near a pole for the residual
    # contract; the solver must report rather than silently skip
    assert run(["spectrum", "--d", "2", "--phi", "3.1415926", "--x", "30"]) == 3


def test_scan_csv_filters_column(tmp_path):
    out = tmp_path / "scan.csv"
    rc = run(
        ["scan", "--mode", "2d", "--d", "2", "--x", "150", "--eps", "0.3",
         "--delta", "0.04", "--out", str(out)]
    )
    assert rc == 0
    text = out.read_text()
    assert '"br_avoid,gap"' in text
    header = [l for l in text.splitlines() if l.startswith("lambda,")][0]
    assert "argmax_x2" in header and "argmax_x3" not in header


def test_scan_3d_filtered_label(tmp_path):
    out = tmp_path / "scan3.csv"
    rc = run(
        ["scan", "--mode", "3d-filtered", "--d", "3", "--x", "80", "--eps", "0.3",
         "--delta", "0.01", "--out", str(out)]
    )
    assert rc == 0
    text = out.read_text()
    assert "lambda_prime_3d" in text
    assert "argmax_x3" in text


def test_scan_json_mirror(tmp_path):
    out = tmp_path / "scan.json"
    rc = run(
        ["scan", "--mode", "2d", "--d", "2", "--x", "120", "--eps", "0.3",
         "--delta", "0.04", "--format", "json", "--out", str(out)]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["meta"]["seed"] == 20240809
    assert payload["reports"]
    assert payload["reports"][0]["filters"] == ["br_avoid", "gap"]


def test_config_file_with_flag_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("d = 2\nphi = 0.25\nx = 40\n# comment\nformat = csv\n")
    out1 = tmp_path / "one.csv"
    assert run(["spectrum", "--config", str(conf), "--out", str(out1)]) == 0
    out2 = tmp_path / "two.csv"
    assert run(["spectrum", "--config", str(conf), "--x", "25", "--out", str(out2)]) == 0
    assert len(out1.read_text().splitlines()) > len(out2.read_text().splitlines())
    assert run(["spectrum", "--config", str(tmp_path / "missing.conf")]) == 2
    bad = tmp_path / "bad.conf"
    bad.write_text("nonsense-line\n")
    assert run(["spectrum", "--config", str(bad)]) == 2


def test_cache_flag_persists_shells(tmp_path):
    # fresh process so the in-memory memo is empty and the scan's shell
    # enumeration actually lands in the attached cache file
    import subprocess
    import sys

    cache = tmp_path / "shells.cache"
    code = (
        "import sys; from torus_scatterer.cli import main; "
        "sys.exit(main(['scan', '--mode', '2d', '--d', '2', '--x', '60', "
        f"'--eps', '0.3', '--delta', '0.04', '--cache', r'{cache}', "
        f"'--out', r'{tmp_path / 's.csv'}']))"
    )
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True)
    assert proc.returncode == 0, proc.stderr.decode()
    assert cache.exists()
    records = cache.read_text().splitlines()
    assert records
    d, n, mult = (int(t) for t in records[0].split(",")[:3])
    assert d == 2 and mult == lattice.enumerate_shell(n, 2).multiplicity

    # a second process reuses the records instead of recomputing them
    fresh = lattice.ShellCache()
    fresh.attach(cache)
    assert (2, n) in fresh._mem


def test_scan_jobs_byte_identical(tmp_path):
    a, b = tmp_path / "j1.csv", tmp_path / "j2.csv"
    argv = ["scan", "--mode", "2d", "--d", "2", "--x", "150", "--eps", "0.3",
            "--delta", "0.04", "--x0", "0.7,1.3"]
    assert run(argv + ["--jobs", "1", "--out", str(a)]) == 0
    assert run(argv + ["--jobs", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_x0_flag_validation():
    assert run(["spectrum", "--d", "2", "--x0", "1.0,2.0,3.0", "--x", "20"]) == 2


def test_audit_passes_at_reduced_ranges(tmp_path):
    out = tmp_path / "audit.csv"
    rc = run(["audit", "--range-xi", "10", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert "# seed=20240809" in lines[0]
    rows = [l for l in lines if not l.startswith("#") and not l.startswith("audit,")]
    assert len(rows) == 6
    assert all(row.split(",")[1] == "pass" for row in rows)
