import csv
import io
import json
import subprocess
import sys

import pytest

from pmlphase.cli import EXIT_BUDGET, EXIT_INPUT, parse_number, read_pmf, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, (json.loads(out.getvalue()) if out.getvalue() else None), err.getvalue()


def backends(obj):
    if isinstance(obj, dict):
        if "backend" in obj:
            yield obj["backend"]
        for v in obj.values():
            yield from backends(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from backends(v)


def test_pattern_command():
    code, doc, _ = call("pattern", "sleepless")
    assert code == 0
    assert doc["result"]["digits"] == "123342311"
    assert doc["result"]["mu"] == [3, 2, 3, 1]
    assert doc["result"]["upsilon"]["exact"] == "36/7"
    assert doc["config"]["sequence"] == "sleepless"


def test_qkm_command():
    code, doc, _ = call("qkm", "-k", "2", "-M", "5", "--limits")
    assert code == 0
    assert doc["result"]["Z_exact"]["exact"] == "6"
    assert doc["result"]["Z"]["backend"] == "log-space"


def test_threshold_command():
    code, doc, _ = call("threshold", "--pattern", "1122")
    assert doc["result"]["upsilon"]["value"] == 3
    assert doc["result"]["rho2"]["value"] == 2
    assert doc["result"]["case_tag"] == "m2-equal"


def test_prob_both_routes(tmp_path):
    pmf = tmp_path / "p.csv"
    pmf.write_text("1/2,1/4,1/4\n")
    code, doc, _ = call("prob", "--pattern", "2,2", "--pmf", str(pmf))
    r = doc["result"]
    assert r["injection_sum"]["exact"] == r["via_permanent"]["exact"] == "9/128"


def test_bethe_commands(tmp_path):
    theta = tmp_path / "t.csv"
    theta.write_text("1,1,1\n1,1,1\n1,1,1\n")
    code, doc, _ = call("bethe", "--theta", str(theta))
    assert code == 0
    assert doc["result"]["bethe_perm"]["value"] == pytest.approx(64 / 27, rel=1e-9)
    assert len(doc["result"]["gamma_star"]["rows"]) == 3
    code, doc, _ = call("bethe-prob", "--pattern", "11", "--k", "2")
    assert doc["result"]["bethe_probability"]["value"] <= doc["result"]["probability"]["value"]


def test_lifted_command_is_reproducible():
    argv = ("lifted", "--pattern", "12", "--k", "2", "-M", "3", "--mc", "500", "--seed", "4")
    out1, out2 = io.StringIO(), io.StringIO()
    assert run(list(argv), stdout=out1) == 0
    assert run(list(argv), stdout=out2) == 0
    assert out1.getvalue() == out2.getvalue()
    doc = json.loads(out1.getvalue())
    assert set(["exact", "mc", "stderr"]) <= set(doc["result"])
    assert doc["config"]["seed"] == 4 and doc["config"]["budget"] > 0


def test_probe_and_scan(tmp_path):
    code, doc, _ = call("probe", "--pattern", "1122", "-k", "3", "--dirs", "6")
    assert doc["result"]["classification"] == "mixed"
    out = tmp_path / "scan.csv"
    code, doc, _ = call("phase-scan", "--pattern", "1122", "--k-range", "2:3",
                        "--M-list", "2,4", "--dirs", "4", "--csv", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["k", "M", "formula", "limit", "probe_class", "min_diff", "max_diff"]
    assert len(rows) == 4


def test_dgauss_command(tmp_path):
    V = tmp_path / "V.csv"
    V.write_text("2,0.5\n0.5,1\n")
    code, doc, _ = call("dgauss", "--V", str(V), "--beta", "3", "--R", "4")
    r = doc["result"]
    assert r["Z_direct"]["value"] == pytest.approx(r["Z_poisson"]["value"], rel=1e-10)
    assert r["tail_within_bound"] is True


def test_every_numeric_field_is_labelled():
    for argv in (("qkm", "-k", "3", "-M", "3"), ("threshold", "--pattern", "3,2,3,1"),
                 ("prob", "--pattern", "12", "--k", "3")):
        code, doc, _ = call(*argv)
        labels = set(backends(doc["result"]))
        assert labels and labels <= {"rational", "log-space", "float"}


def test_exit_codes():
    assert call("threshold", "--pattern", "21")[0] == EXIT_INPUT
    assert call("pattern", "abc", "--nope")[0] == EXIT_INPUT
    assert call("bethe", "--theta", "/nonexistent.csv")[0] == EXIT_INPUT
    assert call("--budget", "10", "qkm", "-k", "3", "-M", "5")[0] == EXIT_BUDGET


def test_budget_env(monkeypatch):
    monkeypatch.setenv("PMLPHASE_BUDGET", "10")
    assert call("qkm", "-k", "3", "-M", "5")[0] == EXIT_BUDGET
    assert call("--budget", "1000", "qkm", "-k", "3", "-M", "5")[0] == 0


def test_parsing_helpers(tmp_path):
    assert parse_number("1/3").denominator == 3
    assert parse_number("4") == 4
    assert parse_number("0.25") == 0.25
    with pytest.raises(ValueError):
        parse_number("x")
    assert read_pmf(None, 3).exact
    assert not read_pmf("0.5,0.5", None).exact
    with pytest.raises(ValueError):
        read_pmf("1/2,1/2", 3)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pmlphase", "pattern", "abc"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["result"]["digits"] == "123"
