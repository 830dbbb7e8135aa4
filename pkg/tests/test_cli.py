from __future__ import annotations

import csv
import json
import shutil
import subprocess

import numpy as np
import pytest
import yaml

from hemiglue.cli import VERDICT_CANTOR, main


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_identity_distance_scenario(tmp_path):
    cfg = write(tmp_path, "id.yaml", {"homeo": {"family": "identity"}, "experiment": "distance",
                                      "distance": {"pairs": 300}, "output_prefix": "id"})
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 0
    rows = read_csv(tmp_path / "out" / "id_distance.csv")
    assert len(rows) == 300
    err = max(abs(float(r["sigma"]) - float(r["d_Z"])) for r in rows)
    assert err < 1e-6
    manifest = json.loads((tmp_path / "out" / "id_manifest.json").read_text())
    assert {"config_hash", "versions", "wall_time_s"} <= set(manifest)


def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, "p.yaml", {"homeo": {"family": "power", "alpha": 2, "beta": 2}, "experiment": "distance",
                                     "distance": {"pairs": 50}, "seed": 7})
    main(["run", cfg, "--out", str(tmp_path / "a")])
    main(["run", cfg, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "result_distance.csv").read_bytes()
    b = (tmp_path / "b" / "result_distance.csv").read_bytes()
    assert a == b


def test_twelve_significant_digits(tmp_path):
    cfg = write(tmp_path, "s.yaml", {"homeo": {"family": "patch", "eps": 0.5}, "experiment": "seam",
                                     "seam": {"arcs": [[1.0, 2.0]], "resolution": 64}})
    assert main(["run", cfg, "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "result_seam.csv")[0]
    assert float(row["seam_h1"]) == pytest.approx(0.5, abs=1e-12)
    digits = row["polyline"].replace(".", "").lstrip("0")
    assert len(digits) <= 12


@pytest.mark.parametrize("data,field", [
    ({"homeo": {"family": "identity"}, "experiment": "distance", "bogus": 1}, "bogus"),
    ({"homeo": {"family": "identity"}, "experiment": "teleport"}, "experiment"),
    ({"homeo": {"family": "power", "alpha": 1}, "experiment": "distance"}, "homeo"),
    ({"homeo": {"family": "identity"}, "experiment": "distance", "distance": {"pairs": 0}}, "distance.pairs"),
    ({"homeo": {"family": "identity"}, "experiment": "density", "density": {"radii": [0.1, 0.2]}}, "density.radii"),
])
def test_config_errors(tmp_path, capsys, data, field):
    cfg = write(tmp_path, "bad.yaml", data)
    assert main(["run", cfg, "--out", str(tmp_path)]) == 1
    assert field in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 1


def test_numeric_failure_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "g.yaml", {"homeo": {"family": "identity"}, "experiment": "extension",
                                     "extension": {"gauge": {"kind": "table", "t": [2, 3, 4], "a": [0, 1, 2]}}})
    assert main(["run", cfg, "--out", str(tmp_path)]) == 2
    assert "extension" in capsys.readouterr().err


def test_capacity_cantor_verdict(tmp_path):
    cfg = write(tmp_path, "e.yaml", {"homeo": {"family": "cantor", "fraction": 0.5, "levels": 4},
                                     "experiment": "capacity-cantor", "capacity": {"levels": [3, 4]}})
    assert main(["run", cfg, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "result_verdict.txt").read_text().strip() == VERDICT_CANTOR
    rows = read_csv(tmp_path / "result_profile.csv")
    assert [int(r["level"]) for r in rows] == [3, 4]


def test_capacity_power_profile(tmp_path):
    cfg = write(tmp_path, "e.yaml", {"homeo": {"family": "power", "alpha": 1, "beta": 2},
                                     "experiment": "capacity-power",
                                     "capacity": {"radii": [0.25, 0.125, 0.0625], "positivity_threshold": 0.05}})
    assert main(["run", cfg, "--out", str(tmp_path), "--resolution-scale", "0.5"]) == 0
    vals = [float(r["modulus"]) for r in read_csv(tmp_path / "result_profile.csv")]
    assert min(vals) > 0.05


def test_modulus_dump(tmp_path):
    cfg = write(tmp_path, "m.yaml", {"homeo": {"family": "identity"}, "experiment": "modulus",
                                     "modulus": {"a": 1, "b": 2, "n": 10, "dump_mesh": True}})
    assert main(["run", cfg, "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "result_modulus.csv")[0]
    assert float(row["modulus"]) == pytest.approx(2.0)
    dump = json.loads((tmp_path / "result_mesh.json").read_text())
    assert len(dump["solution"]["u"]) == len(dump["mesh"]["vertices"])


def test_density_threads(tmp_path):
    cfg = write(tmp_path, "d.yaml", {"homeo": {"family": "patch", "eps": 0.5}, "experiment": "density",
                                     "density": {"points": [1.4, 1.7], "radii": [0.1, 0.05, 0.025],
                                                 "quadrature_resolution": 40}})
    assert main(["run", cfg, "--out", str(tmp_path), "--threads", "2"]) == 0
    rows = read_csv(tmp_path / "result_density.csv")
    assert len(rows) == 6


def test_verify_axioms_identity(tmp_path, capsys):
    assert main(["verify", "axioms", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_axioms.json").read_text())
    assert all(r["passed"] for r in report)


def test_verify_axioms_other_homeo(capsys):
    assert main(["verify", "axioms", "--homeo", '{"family": "power", "alpha": 2, "beta": 2}']) == 0


def test_verify_named_criterion(capsys):
    assert main(["verify", "criterion-9"]) == 0
    assert capsys.readouterr().out.startswith("PASS criterion-9")


def test_verify_reports_failure_exit_3(capsys):
    assert main(["verify", "criterion-13"]) == 3
    assert "FAIL" in capsys.readouterr().out


def test_bad_flags():
    assert main(["verify", "axioms", "--threads", "0"]) == 1


@pytest.mark.skipif(shutil.which("hemiglue") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["hemiglue", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "verify" in out.stdout


@pytest.mark.parametrize("suite", ["oracle", "modulus"])
def test_verify_suites_pass(suite, capsys):
    assert main(["verify", suite]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
