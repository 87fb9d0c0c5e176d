import json
import math

import pytest

from fourlevel.cli import CSV_HEADER, main

FIG3 = {"kind": "lambda", "Omega": [1, 0.25], "omega": [0, 0, 1.1, 1.3]}
FIG5 = {"kind": "n", "Omega": [1, 0.25], "omega": [0, 0.8, 1, 1.9]}


@pytest.fixture
def write_config(tmp_path):
    def write(base, mu, **extra):
        path = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        path.write_text(json.dumps({**base, "mu": mu, **extra}))
        return str(path)

    return write


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_variational_report(write_config, capsys):
    cfg = write_config(FIG3, {"13": 0.25, "23": 0.6, "34": 0.25})
    code, out, err = run(["variational", "--config", cfg], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["region"] == "S_Lambda" and doc["energy"] == pytest.approx(-0.0514941, abs=1e-7)
    assert doc["critical_point"]["chart"] == "RHO1"
    assert set(doc["regions"]) == {"S_norm", "S_Lambda", "S_23", "S_34"}
    assert json.loads(err)["command"] == "variational"


def test_variational_uncoupled_and_n(write_config, capsys):
    _, out, _ = run(["variational", "--config", write_config(FIG3, {"13": 0, "23": 0, "34": 0})], capsys)
    doc = json.loads(out)
    assert doc["region"] == "S_norm" and doc["energy"] == 0 and doc["observables"]["A11"] == 1
    _, out, _ = run(["variational", "--config", write_config(FIG5, {"13": 0.65, "23": 0.25, "24": 0.5})], capsys)
    doc = json.loads(out)
    assert doc["region"] == "S_13" and doc["observables"]["A11"] == pytest.approx(0.795858, abs=1e-6)


def test_quantum_reports(write_config, capsys):
    code, out, _ = run(["quantum", "--config", write_config(FIG3, {"13": 0, "23": 0, "34": 0})], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["energy"] == 0 and doc["observables"]["nu1"] == 0 and doc["converged"]
    _, out, _ = run(["quantum", "--config", write_config(FIG5, {"13": 0.65, "23": 0.25, "24": 0.5})], capsys)
    assert json.loads(out)["sector"] == "e"
    _, out, _ = run(["quantum", "--config", write_config(FIG3, {"13": 0.25, "23": 0.6, "34": 0.25})], capsys)
    assert json.loads(out)["energy"] <= -0.0514941


def test_quantum_energies_are_per_particle(write_config, capsys):
    cfg = write_config(FIG5, {"13": 0, "23": 0, "24": 0}, Na=3, omega=[0.5, 0.8, 1, 1.9])
    _, out, _ = run(["quantum", "--config", cfg, "--mmax", "4"], capsys)
    assert json.loads(out)["energy"] == pytest.approx(0.5)


def test_quantum_not_converged_exit_code(write_config, capsys):
    cfg = write_config(FIG3, {"13": 1.5, "23": 1.5, "34": 1.5})
    code, out, _ = run(["quantum", "--config", cfg, "--tol", "1e-14", "--mstart", "4", "--mstep", "2", "--mcap", "8"], capsys)
    doc = json.loads(out)
    assert code == 3 and doc["converged"] is False and doc["M_max"] == 8


@pytest.mark.parametrize(
    "data, field",
    [
        ({**FIG3, "mu": {"13": 0.1, "23": 0.1, "24": 0.1}}, "mu"),
        ({**FIG3, "mu": {"13": -0.1, "23": 0.1, "34": 0.1}}, "mu.13"),
        ({**FIG3, "mu": {"13": 0.1, "23": 0.1, "34": 0.1}, "gamma": 1}, "gamma"),
        ({**FIG3, "mu": {"13": 0.1, "23": 0.1, "34": 0.1}, "omega": [0, 1.2, 1.1, 1.3]}, "omega"),
        ({**FIG3, "mu": {"13": 0.1, "23": 0.1, "34": 0.1}, "Omega": [0, 1]}, "Omega"),
        ({"kind": "x", "Omega": [1, 0.25], "omega": [0, 0, 1.1, 1.3], "mu": {}}, "kind"),
        ({**FIG3}, "mu"),
    ],
)
def test_config_errors_name_the_field(tmp_path, capsys, data, field):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, out, err = run(["variational", "--config", str(path)], capsys)
    assert code == 2 and out == ""
    assert f"[{field}" in err


def test_missing_or_malformed_file(tmp_path, capsys):
    assert run(["variational", "--config", str(tmp_path / "none.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{kind: lambda")
    assert run(["variational", "--config", str(bad)], capsys)[0] == 2


def test_general_detuning_uses_numeric_minimum(write_config, capsys):
    cfg = write_config(FIG3, {"13": 0.6, "23": 0.6, "34": 0.1}, omega=[0, 0.2, 1.1, 1.3])
    code, out, _ = run(["variational", "--config", cfg], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["method"] == "numeric" and doc["region"] == "S_Lambda"


def _rows(path):
    return path.read_text().splitlines()


def test_scan_csv_and_manifest(write_config, tmp_path, capsys):
    cfg = write_config(FIG5, {"13": 0.65, "23": 0.25, "24": 0.5})
    out = tmp_path / "scan.csv"
    code = main(["scan", "--config", cfg, "--vary", "mu.24", "--from", "0.9", "--to", "1.4", "--steps", "11", "--out", str(out)])
    lines = _rows(out)
    assert code == 0 and lines[0] == CSV_HEADER and len(lines) == 12
    assert [l.split(",")[1] for l in lines[1:]] == ["S_13"] * 6 + ["S_24"] * 5
    manifest = json.loads((tmp_path / "scan.csv.manifest").read_text())
    assert manifest["command"] == "scan" and manifest["parameters"]["steps"] == 11
    assert manifest["config"]["mu"] == {"13": 0.65, "23": 0.25, "24": 0.5}
    assert {"tool", "version", "timestamp"} <= set(manifest)


def test_two_step_scan(write_config, tmp_path):
    out = tmp_path / "two.csv"
    cfg = write_config(FIG3, {"13": 0.1, "23": 0.1, "34": 0.1})
    assert main(["scan", "--config", cfg, "--vary", "omega.4", "--from", "1.3", "--to", "1.3000001", "--steps", "2", "--out", str(out)]) == 0
    assert len(_rows(out)) == 3


def test_quantum_scan_leaves_region_blank(write_config, tmp_path):
    out = tmp_path / "q.csv"
    cfg = write_config(FIG5, {"13": 0.65, "23": 0.25, "24": 0.5})
    main(["scan", "--config", cfg, "--vary", "mu.24", "--from", "0.9", "--to", "1.4", "--steps", "3", "--method", "quantum", "--out", str(out)])
    rows = [l.split(",") for l in _rows(out)[1:]]
    assert len(rows) == 3 and all(r[1] == "" for r in rows)
    manifest = json.loads((tmp_path / "q.csv.manifest").read_text())
    assert manifest["convergence"]["converged"] is True and manifest["convergence"]["tol"] == 1e-10


def test_scan_error_rows(write_config, tmp_path):
    out = tmp_path / "e.csv"
    cfg = write_config(FIG5, {"13": 0.65, "23": 0.25, "24": 0.5})
    main(["scan", "--config", cfg, "--vary", "mu.24", "--from", "-0.5", "--to", "0.5", "--steps", "3", "--out", str(out)])
    assert _rows(out)[1].split(",")[1] == "ERROR"


def test_phase_diagram(write_config, tmp_path):
    out = tmp_path / "pd.csv"
    cfg = write_config(FIG3, {"13": 0, "23": 0, "34": 0})
    assert main(["phase-diagram", "--config", cfg, "--vary", "mu.13,mu.23", "--grid", "2x2", "--from", "0", "--to", "0.1", "--out", str(out)]) == 0
    lines = _rows(out)
    assert lines[0] == "p,q,region,energy"
    assert [l.split(",")[:3] for l in lines[1:]] == [
        ["0", "0", "S_norm"], ["0", "0.1", "S_norm"], ["0.1", "0", "S_norm"], ["0.1", "0.1", "S_norm"]
    ]


def test_phase_diagram_labels_n(write_config, tmp_path):
    out = tmp_path / "n.csv"
    cfg = write_config(FIG5, {"13": 0, "23": 0.25, "24": 0})
    main(["phase-diagram", "--config", cfg, "--vary", "mu.13,mu.24", "--grid", "21x21", "--from", "0", "--to", "1.5", "--out", str(out)])
    labels = {l.split(",")[2] for l in _rows(out)[1:]}
    assert {"S_norm", "S_13", "S_24"} <= labels
    assert len(_rows(out)) == 442


def test_bad_grid_arguments(write_config, capsys):
    cfg = write_config(FIG3, {"13": 0, "23": 0, "34": 0})
    assert run(["phase-diagram", "--config", cfg, "--vary", "mu.13", "--grid", "2x2"], capsys)[0] == 2
    assert run(["phase-diagram", "--config", cfg, "--vary", "mu.13,mu.23", "--grid", "2by2"], capsys)[0] == 2
    assert run(["scan", "--config", cfg, "--vary", "mu.24", "--from", "0", "--to", "1", "--steps", "3"], capsys)[0] == 2


@pytest.mark.parametrize(
    "args",
    [
        ["variational"],
        ["quantum", "--mmax", "6"],
        ["scan", "--vary", "mu.23", "--from", "0", "--to", "1.2", "--steps", "5", "--method", "quantum"],
        ["phase-diagram", "--vary", "mu.13,mu.23", "--grid", "4x3", "--from", "0,0.1", "--to", "1,1.2"],
    ],
)
def test_rerun_is_byte_identical(args, write_config, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    cfg = write_config(FIG3, {"13": 0.25, "23": 0.6, "34": 0.25})
    first, second = tmp_path / "a.out", tmp_path / "b.out"
    assert main([args[0], "--config", cfg, *args[1:], "--out", str(first)]) == 0
    assert main(["rerun", str(first) + ".manifest", "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert (tmp_path / "a.out.manifest").read_bytes() == (tmp_path / "b.out.manifest").read_bytes()


def test_unusable_manifest(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"command": "plot", "parameters": {}, "config": {**FIG3, "mu": {"13": 0, "23": 0, "34": 0}}}))
    assert run(["rerun", str(path)], capsys)[0] == 2
    path.write_text("{}")
    assert run(["rerun", str(path)], capsys)[0] == 2


def test_output_formatting(write_config, capsys):
    _, out, _ = run(["variational", "--config", write_config(FIG3, {"13": 0.1, "23": 0.1, "34": 0.9})], capsys)
    doc = json.loads(out)
    assert doc["regions"]["S_Lambda"]["energy"] is None and doc["regions"]["S_Lambda"]["valid"] is False
    assert not math.isinf(doc["energy"])
