from __future__ import annotations

import csv
import json
import re

import jsonschema
import pytest

from advect_spectra import cli
from advect_spectra.acceptance import report_schema
from advect_spectra.advection_lab import RESULT_HEADER, RunConfig, march
from advect_spectra.fourier import SPECTRUM_HEADER
from advect_spectra.schemes import build_rule
from advect_spectra.stencil import TwoMomentRule


def run(tmp_path, *argv, **kw) -> int:
    return cli.main([*argv, "--out", str(tmp_path)], **kw)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- spectrum ---------------------------------------------------------------

@pytest.mark.parametrize("scheme,cfl", [("cgks-s1o2", 1.0), ("dg-rk2", 0.33), ("fr-rk2-g2", 1.0)])
def test_spectrum_stable_cases(tmp_path, scheme, cfl):
    assert run(tmp_path, "spectrum", "--scheme", scheme, "--cfl", str(cfl),
               "--theta-samples", "256") == 0
    stem = tmp_path / f"spectrum_{scheme}_cfl{cfl:g}"
    rows = read_csv(f"{stem}.csv")
    assert list(rows[0]) == list(SPECTRUM_HEADER)
    assert len(rows) == 256
    assert max(float(r["max_modulus"]) for r in rows) <= 1 + 1e-10
    svg = (tmp_path / f"{stem.name}.svg").read_text()
    assert len(re.findall(r'<circle class="pt"', svg)) == 2 * 256
    assert 'class="unit-circle"' in svg and 'class="legend"' in svg


def test_spectrum_is_deterministic_without_timestamp(tmp_path):
    names = ("spectrum_dg-rk2_cfl0.3.csv", "spectrum_dg-rk2_cfl0.3.svg",
             "spectrum_dg-rk2_cfl0.3.csv.manifest.json", "spectrum_dg-rk2_cfl0.3.svg.manifest.json")
    snapshots = []
    for _ in range(2):
        assert run(tmp_path, "spectrum", "--scheme", "dg-rk2", "--cfl", "0.3",
                   "--theta-samples", "300", "--no-timestamp") == 0
        snapshots.append([(tmp_path / n).read_bytes() for n in names])
    assert snapshots[0] == snapshots[1]
    assert "generated" not in (tmp_path / names[1]).read_text()


def test_timestamp_present_by_default(tmp_path):
    assert run(tmp_path, "spectrum", "--scheme", "dg-rk2", "--cfl", "0.3",
               "--theta-samples", "300") == 0
    assert "<!-- generated" in (tmp_path / "spectrum_dg-rk2_cfl0.3.svg").read_text()
    manifest = json.loads((tmp_path / "spectrum_dg-rk2_cfl0.3.csv.manifest.json").read_text())
    assert "timestamp" in manifest


def test_manifest_contents(tmp_path):
    assert run(tmp_path, "cfl", "--scheme", "CGKS-S1O2", "--no-timestamp") == 0
    out = json.loads((tmp_path / "cfl_cgks-s1o2.json").read_text())
    assert out["nu_star"] == pytest.approx(1.0, abs=1e-4)
    manifest = json.loads((tmp_path / "cfl_cgks-s1o2.json.manifest.json").read_text())
    assert manifest["command"] == "cfl"
    assert manifest["output"] == "cfl_cgks-s1o2.json"
    assert manifest["config"]["scheme"] == "cgks-s1o2"
    assert manifest["invocation"][:3] == ["cfl", "--scheme", "CGKS-S1O2"]
    assert "timestamp" not in manifest


# --- usage and errors -------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["spectrum", "--scheme", "weno", "--cfl", "0.5"],
    ["spectrum", "--scheme", "dg-rk2", "--cfl", "-1"],
    ["spectrum", "--scheme", "dg-rk2"],
    ["sweep", "--schemes", "dg-rk2", "--cfls", "a,b"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, *argv)
    assert exc.value.code == 2


def test_value_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "run", "--scheme", "dg-rk2", "--cfl", "0.3", "--cells", "4") == 2
    assert "n_cells" in capsys.readouterr().err


def test_modeq_without_reference_exits_1(tmp_path, capsys):
    assert run(tmp_path, "modeq", "--scheme", "grp") == 1
    assert "grp" in capsys.readouterr().err


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["cfl", "--scheme", "cgks-s1o2", "--out", str(blocker / "sub")]) == 1
    assert "cannot write" in capsys.readouterr().err


# --- modeq / run / sweep / contrast -------------------------------------------

def test_modeq_output(tmp_path):
    assert run(tmp_path, "modeq", "--scheme", "dg-rk2", "--nu", "0.1,0.2,0.3") == 0
    rows = read_csv(tmp_path / "modeq_dg-rk2.csv")
    assert [r["nu"] for r in rows] == ["0.1", "0.2", "0.3"]
    assert all(r["pass"] == "pass" for r in rows)


def test_run_output(tmp_path, capsys):
    assert run(tmp_path, "run", "--scheme", "grp", "--cfl", "0.5", "--cells", "32") == 0
    rows = read_csv(tmp_path / "run_grp_n32_cfl0.5.csv")
    assert list(rows[0]) == list(RESULT_HEADER)
    assert rows[0]["blew_up"] == "false"
    assert "l1" in capsys.readouterr().out


def test_negative_speed_mirrors(tmp_path):
    assert run(tmp_path, "run", "--scheme", "dg-rk2", "--cfl", "0.3", "--cells", "32",
               "--speed", "-1") == 0
    neg = read_csv(tmp_path / "run_dg-rk2_n32_cfl0.3.csv")[0]
    pos = march(RunConfig("dg-rk2", 32, 0.3))
    assert float(neg["l1"]) == pytest.approx(pos.l1_error, rel=1e-12)


def test_sweep_order_and_threads(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    assert run(tmp_path, "sweep", "--schemes", "dg-rk2,cgks-s1o2", "--cfls", "0.2,0.5",
               "--cells", "32", "--no-timestamp") == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert [(r["scheme"], r["cfl"]) for r in rows] == [
        ("dg-rk2", "0.2"), ("dg-rk2", "0.5"), ("cgks-s1o2", "0.2"), ("cgks-s1o2", "0.5")]
    assert rows[1]["blew_up"] == "true" and rows[3]["blew_up"] == "false"
    serial = tmp_path / "serial"
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert cli.main(["sweep", "--schemes", "dg-rk2,cgks-s1o2", "--cfls", "0.2,0.5",
                     "--cells", "32", "--no-timestamp", "--out", str(serial)]) == 0
    assert (serial / "sweep.csv").read_bytes() == (tmp_path / "sweep.csv").read_bytes()


def test_sweep_rejects_bad_thread_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert run(tmp_path, "sweep", "--schemes", "dg-rk2", "--cfls", "0.2,0.3", "--cells", "16") == 1
    assert cli.THREADS_ENV in capsys.readouterr().err


def test_contrast_verb(tmp_path):
    assert run(tmp_path, "table3") == 0
    rows = {r["scheme"]: r for r in read_csv(tmp_path / "table3.csv")}
    assert (rows["cgks-rk2"]["dispersion"], rows["cgks-rk2"]["dissipation"]) == ("+", "+")
    assert (rows["dg-rk2"]["dispersion"], rows["dg-rk2"]["dissipation"]) == ("0", "-")
    assert float(rows["dg-s1o2"]["cfl_limit"]) == pytest.approx(1 / 3, abs=1e-4)


# --- verify -----------------------------------------------------------------

def test_verify_report_validates(tmp_path, capsys):
    code = run(tmp_path, "verify", "--no-timestamp")
    doc = json.loads((tmp_path / "acceptance_report.json").read_text())
    jsonschema.validate(doc, report_schema())
    assert code == (0 if doc["passed"] else 1)
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 8
    assert all(re.match(r"\[(PASS|FAIL)\] criterion \d:", line) for line in out)


def test_verify_catches_seeded_bug(tmp_path, capsys):
    def buggy(name):
        # the one-stage compact stencil smuggled in for DG moves its stability limit
        if name == "dg-rk2":
            return TwoMomentRule(name, *build_rule("cgks-s1o2").tables())
        return build_rule(name)

    assert run(tmp_path, "verify", "--no-timestamp", rule_factory=buggy) == 1
    out = capsys.readouterr().out
    assert "[FAIL] criterion 1: CFL limits" in out
