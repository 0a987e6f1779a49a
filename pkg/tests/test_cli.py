import csv
import io
import json

import numpy as np
import pytest

from irrcorr.cli import StateSpecError, main, parse_state_spec
from irrcorr.state_library import StateDescriptor, save_state


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_parse_examples():
    assert parse_state_spec("ghz:4") == StateDescriptor("ghz", n=4)
    assert parse_state_spec("random:3:seed=42@p0=0.1") == StateDescriptor(
        "random", n=3, seed=42, p0=0.1)
    assert parse_state_spec("smolin") == StateDescriptor("smolin", n=4)
    assert parse_state_spec("file:/tmp/x.json@p0=0.5").path == "/tmp/x.json"


@pytest.mark.parametrize("spec, pos", [
    ("dicke:9:2", 6),
    ("ghz", 3),
    ("ghz:x", 4),
    ("random:3:sed=4", 9),
    ("qux:3", 0),
    ("ghz:4@p0=2", 9),
    ("ghz:4@q=1", 5),
    ("dicke:4:5", 8),
])
def test_parse_errors_carry_position(spec, pos):
    with pytest.raises(StateSpecError) as info:
        parse_state_spec(spec)
    assert info.value.position == pos


def test_cap_override(monkeypatch):
    monkeypatch.setenv("IRRCORR_MAX_QUBITS", "6")
    assert parse_state_spec("ghz:6").n == 6


def test_compute_csv(capsys):
    code, out, _ = _run(["compute", "--state", "ghz:3@p0=0.1"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("# irrcorr ")
    rows = _csv_rows(out)
    assert len(rows) == 1
    assert list(rows[0]) == ["k", "p0", "S_bits", "C_T_bits", "C_2_bits", "C_3_bits",
                             "max_residual", "total_iterations", "flags"]
    r = rows[0]
    assert float(r["C_T_bits"]) == pytest.approx(float(r["C_2_bits"]) + float(r["C_3_bits"]),
                                                 abs=1e-6)
    assert r["flags"] == "ok"


def test_compute_structured_product_file(tmp_path, capsys):
    path = tmp_path / "prod.json"
    a = np.diag([0.6, 0.4])
    save_state(path, np.kron(np.kron(a, np.eye(2) / 2), np.diag([0.1, 0.9])))
    code, out, _ = _run(["compute", "--state", f"file:{path}", "--format", "structured"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["record"]["C_T_bits"]) <= 1e-6
    assert all(abs(v) <= 1e-6 for v in doc["record"]["C_bits"].values())
    assert all(c["passed"] for c in doc["certificates"].values())


def test_compute_rejects_rank_deficient(capsys):
    code, _, err = _run(["compute", "ghz:4"], capsys)
    assert code == 3 and "sweep" in err


def test_invalid_spec_exit_code(capsys):
    code, _, err = _run(["compute", "dicke:9:2"], capsys)
    assert code == 3 and "position" in err


def test_compute_flagged_exit_code(capsys):
    code, out, _ = _run(["compute", "ghz:3@p0=1e-9", "--theta-cap", "2"], capsys)
    assert code == 2
    assert "rho2:boundary" in _csv_rows(out)[0]["flags"]


def test_sweep_csv_and_extrapolation(tmp_path, capsys):
    out_path = tmp_path / "s.csv"
    code, out, _ = _run(["sweep", "--state", "ghz:3", "--steps", "10", "--out", str(out_path)],
                        capsys)
    assert code == 0 and out == ""
    text = out_path.read_text()
    rows = _csv_rows(text)
    assert [int(r["k"]) for r in rows] == list(range(11))
    assert float(rows[0]["p0"]) == 1.0 and float(rows[-1]["p0"]) == 0.0
    assert "# extrapolated p0=0 estimate C_2_bits=" in text
    ct = [float(r["C_T_bits"]) for r in rows]
    assert all(b >= a - 1e-6 for a, b in zip(ct, ct[1:]))


def test_sweep_levels_and_no_extrapolation(capsys):
    code, out, _ = _run(["sweep", "ghz:3", "--steps", "4", "--levels", "3",
                         "--extrapolate", "false"], capsys)
    assert code == 0 and "extrapolated" not in out
    rows = _csv_rows(out)
    assert rows[1]["C_2_bits"] == "" and rows[1]["C_3_bits"] != ""


def test_sweep_structured(capsys):
    code, out, _ = _run(["sweep", "w:3", "--steps", "5", "--format", "structured"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["records"]) == 6
    assert doc["metadata"]["N"] == 5 and "extrapolation" in doc


def test_verify_random(capsys):
    code, out, _ = _run(["verify", "random:3:seed=7@p0=0.2"], capsys)
    assert code == 0 and "ALL PASS" in out
    assert "FAIL" not in out


def test_verify_two_qubit_closed_form(capsys):
    code, out, _ = _run(["verify", "ghz:2@p0=0.5"], capsys)
    assert code == 0 and "PASS mutual information C_2" in out


def test_verify_smolin_pure_limit(capsys):
    code, out, _ = _run(["verify", "smolin", "--format", "structured"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert doc["record"]["C_T_bits"] == pytest.approx(2.0, abs=1e-9)
    assert doc["record"]["C_bits"]["4"] == pytest.approx(2.0, abs=1e-9)


def test_verify_diagonal_runs_ipf(tmp_path, capsys):
    from irrcorr.oracle_suite import diagonal_embedding, random_distribution
    path = tmp_path / "diag.json"
    save_state(path, diagonal_embedding(random_distribution(3, 3)))
    code, out, _ = _run(["verify", f"file:{path}"], capsys)
    assert code == 0 and "PASS IPF oracle rho2" in out


@pytest.mark.parametrize("argv", [
    ["compute", "random:3:seed=1@p0=0.05"],
    ["sweep", "ghz:3", "--steps", "8"],
    ["verify", "w:3@p0=0.1", "--format", "structured"],
])
def test_determinism(argv, capsys):
    _, first, _ = _run(argv, capsys)
    _, second, _ = _run(argv, capsys)
    assert first == second and first
