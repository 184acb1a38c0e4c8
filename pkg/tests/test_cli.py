import csv
import json
import os

import jsonschema
import numpy as np
import pytest

from tcdirac.cli import main
from tcdirac.config import build_scenario
from tcdirac.emfield import builtin_catalog
from tcdirac.io import EXPECTATION_SCHEMA, RUN_REPORT_SCHEMA, VERIFY_REPORT_SCHEMA
from tcdirac.verify import REFERENCE_FIELDS


def _config(tmp_path, **cfg):
    base = {"name": "t", "t_span": [0.0, 1.0], "samples": 11}
    base.update(cfg)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(base))
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_free_run_moves_in_straight_line(tmp_path):
    out = tmp_path / "out"
    rc = main(["run", "--config", _config(tmp_path, z0={"p": [0.3, 0.4, 0.0], "x": [1, 0, 0]}), "--out", str(out)])
    assert rc == 0
    header, data = _read_csv(out / "trajectory.csv")
    x = data[:, [header.index(k) for k in ("x1", "x2", "x3")]]
    t = data[:, 0]
    eps = np.sqrt(1 + 0.25)
    expect = np.array([1, 0, 0]) + np.outer(t, [0.3, 0.4, 0.0]) / eps
    np.testing.assert_allclose(x, expect, atol=1e-10)
    assert sorted(os.listdir(out)) == ["eta.csv", "germ.csv", "report.json", "spin.csv", "trajectory.csv"]


def test_eta_and_spin_headers(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", _config(tmp_path), "--out", str(out)]) == 0
    header, data = _read_csv(out / "eta.csv")
    assert header == ["t", "eta1", "eta2", "eta3"]
    np.testing.assert_allclose(data[0, 1:], [0, 0, 1])
    header, _ = _read_csv(out / "spin.csv")
    assert header[-1] == "bmt_residual"


def test_domain_error_leaves_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    cfg = _config(tmp_path, spin={"ell": [0, 0, 1], "zeta": 1, "zeta_prime": -1})
    assert main(["run", "--config", cfg, "--out", str(out)]) == 3
    assert not out.exists()
    assert os.listdir(tmp_path) == ["cfg.json"]
    assert "DomainError" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [{"field": {"kind": "warp_drive"}}, {"samples": 1}, {"t_span": [1.0, 0.0]},
                                 {"extra_key": 3}])
def test_bad_config_exit_2(tmp_path, cfg):
    out = tmp_path / "x"
    assert main(["run", "--config", _config(tmp_path, **cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_missing_and_malformed_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


def test_unwritable_output_exit_5(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", _config(tmp_path), "--out", str(blocker / "sub")]) == 5


def test_reproducible_runs_are_byte_identical(tmp_path):
    cfg = _config(tmp_path, field={"kind": "crossed", "params": list(REFERENCE_FIELDS["crossed"])},
                  outputs=["trajectory", "germ", "spin", "eta", "moments", "expectations", "wavefunction"],
                  slice={"points": 21})
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "--config", cfg, "--out", str(d), "--reproducible"]) == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n

    report = json.loads((a / "report.json").read_text())
    jsonschema.validate(report, RUN_REPORT_SCHEMA)
    assert report["outputs"] == names
    assert all(s["wall_time_s"] is None for s in report["stages"])
    jsonschema.validate(json.loads((a / "expectations.json").read_text()), EXPECTATION_SCHEMA)

    header, data = _read_csv(a / "wavefunction.csv")
    assert header[:3] == ["x1", "x2", "x3"] and header[3:5] == ["re_psi1", "im_psi1"] and len(header) == 11
    assert data.shape == (21, 11)


def test_hbar_override_is_echoed(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", _config(tmp_path), "--out", str(out), "--hbar", "0.02", "--reproducible"]) == 0
    assert json.loads((out / "report.json").read_text())["config"]["constants"]["hbar"] == 0.02


def test_green_output(tmp_path):
    out = tmp_path / "g"
    cfg = _config(tmp_path, field={"kind": "uniform_magnetic", "params": list(REFERENCE_FIELDS["uniform_magnetic"])},
                  outputs=["green"], nu_max=3, grid={"nodes": 10})
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    g = json.loads((out / "green.json").read_text())
    assert g["propagation_l2"] <= 1e-6
    assert np.all(np.diff(g["truncation_residuals"]) <= 0)


@pytest.mark.parametrize("kind", [k for k, _, _ in builtin_catalog()])
def test_catalog_kinds_build(kind):
    params = list(REFERENCE_FIELDS.get(kind, ()))
    if kind == "custom_polynomial":
        params = [0, 2, 0, 0, 0.5, 0, 0, 0]
    sc = build_scenario({"field": {"kind": kind, "params": params}})
    assert sc.spec.field is not None


def test_catalog_command(tmp_path, capsys):
    assert main(["catalog", "--out", str(tmp_path / "c")]) == 0
    listed = json.loads((tmp_path / "c" / "catalog.json").read_text())
    assert [e["kind"] for e in listed] == [k for k, _, _ in builtin_catalog()]
    assert "uniform_magnetic" in capsys.readouterr().out


def test_verify_empty_selection(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--suite", "", "--out", str(out)]) == 0
    report = json.loads((out / "verify.json").read_text())
    jsonschema.validate(report, VERIFY_REPORT_SCHEMA)
    assert report["rows"] == [] and report["verdict"] is True
    assert (out / "verify.csv").read_text() == "suite,id,value,tol,passed\n"


def test_verify_appendix_a(tmp_path):
    out = tmp_path / "v"
    rc = main(["verify", "--suite", "appendixA", "--count", "20", "--seed", "7", "--out", str(out)])
    report = json.loads((out / "verify.json").read_text())
    jsonschema.validate(report, VERIFY_REPORT_SCHEMA)
    assert rc == (0 if report["verdict"] else 4)
    assert report["verdict"] is True
    assert report["seed"] == 7 and len(report["rows"]) > 0
    with open(out / "verify.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["suite", "id", "value", "tol", "passed"]
    assert len(rows) == len(report["rows"]) + 1


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "nonsense"]) == 2


def test_under_resolved_grid_exit_4(tmp_path):
    out = tmp_path / "o"
    cfg = _config(tmp_path, outputs=["trajectory", "expectations"], grid={"nodes": 8})
    assert main(["run", "--config", cfg, "--out", str(out)]) == 4
    assert not out.exists()
