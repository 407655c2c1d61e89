import json
import math

import numpy as np
import pytest

from matsn import cli
from matsn.cases import negative_cases, positive_cases
from matsn.distribution import MsnParams
from matsn.orders import OrderKind

PARAMS = MsnParams(np.array([[0.5, -1.0], [0.2, 0.8]]), [[1.5, 0.4], [0.4, 0.9]],
                   [[1.1, -0.3], [-0.3, 0.7]], np.array([[1.0, -0.5], [0.3, 0.8]]))


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def params_file(tmp_path):
    return write(tmp_path / "params.json", PARAMS.to_dict())


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_sample_is_deterministic(tmp_path, params_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("sample", "--params", params_file, "--count", 50, "--seed", 7, "-o", a) == 0
    assert run("sample", "--params", params_file, "--count", 50, "--seed", 7, "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "x_1_1,x_2_1,x_1_2,x_2_2" and len(lines) == 51
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["schema_version"] == 1 and meta["config"]["seed"] == 7


def test_sample_zero_count_writes_header_only(tmp_path, params_file):
    out = tmp_path / "z.csv"
    assert run("sample", "--params", params_file, "--count", 0, "-o", out) == 0
    assert out.read_text() == "x_1_1,x_2_1,x_1_2,x_2_2\n"


def test_rejection_acceptance_rate(tmp_path, params_file):
    out = tmp_path / "r.csv"
    assert run("sample", "--params", params_file, "--count", 20000, "--method", "rejection", "-o", out) == 0
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())["metadata"]
    rate, n = meta["acceptance_rate"], meta["proposals"]
    assert abs(rate - 0.5) < 4 * math.sqrt(0.25 / n)


def test_sample_to_stdout(capsys, params_file):
    assert run("sample", "--params", params_file, "--count", 3) == 0
    out, err = capsys.readouterr()
    assert len(out.splitlines()) == 4 and json.loads(err)["command"] == "sample"


def test_config_file_and_unknown_keys(tmp_path, params_file):
    out = tmp_path / "c.csv"
    cfg = write(tmp_path / "cfg.json", {"params": params_file, "count": 5, "seed": 3})
    assert run("sample", "--config", cfg, "-o", out) == 0
    assert len(out.read_text().splitlines()) == 6
    bad = write(tmp_path / "bad.json", {"params": params_file, "colour": "red"})
    assert run("sample", "--config", bad, "-o", tmp_path / "never.csv") == 2
    assert not (tmp_path / "never.csv").exists()


def test_corrupted_params_fail_closed(tmp_path, capsys):
    doc = PARAMS.to_dict()
    doc["V"] = [[1.0, 2.0], [2.0, 1.0]]
    bad = write(tmp_path / "bad.json", doc)
    out = tmp_path / "out.csv"
    assert run("sample", "--params", bad, "-o", out) == 2
    assert "positive definite" in capsys.readouterr().err.lower()
    assert not out.exists() and not (tmp_path / "out.csv.meta.json").exists()
    (tmp_path / "junk.json").write_text("{not json")
    assert run("moments", "--params", tmp_path / "junk.json") == 2


def test_density_cf_moments(tmp_path, params_file):
    pt = write(tmp_path / "pt.json", [[0.0, 0.0], [0.0, 0.0]])
    for cmd in ("density", "cf", "moments"):
        out = tmp_path / f"{cmd}.json"
        args = [cmd, "--params", params_file, "-o", out] + (["--point", pt] if cmd != "moments" else [])
        assert run(*args) == 0
        doc = json.loads(out.read_text())
        assert doc["schema_version"] == 1 and doc["command"] == cmd
    assert json.loads((tmp_path / "cf.json").read_text())["cf"] == [{"re": 1.0, "im": 0.0}]


def test_check_order_verdicts(tmp_path):
    case = next(c for c in positive_cases() if c.order is OrderKind.ST)
    x, y = write(tmp_path / "x.json", case.x.to_dict()), write(tmp_path / "y.json", case.y.to_dict())
    out = tmp_path / "v.json"
    assert run("check-order", "--x", x, "--y", y, "--order", "st", "-o", out) == 0
    assert json.loads(out.read_text())["status"] == "HoldsProven"
    for kind in OrderKind:
        assert run("check-order", "--x", x, "--y", x, "--order", kind.value, "-o", out) == 0
        assert json.loads(out.read_text())["status"] in ("HoldsProven", "SufficientHolds")


def test_check_order_evidence_flags_reversed_pair(tmp_path):
    case = next(c for c in negative_cases() if c.order is OrderKind.ST)
    x, y = write(tmp_path / "x.json", case.x.to_dict()), write(tmp_path / "y.json", case.y.to_dict())
    out = tmp_path / "v.json"
    assert run("check-order", "--x", x, "--y", y, "--order", "st", "--evidence", "--draws", 5000, "-o", out) == 0
    doc = json.loads(out.read_text())
    assert doc["status"] == "FailsProven" and doc["evidence"]["falsified"]


def test_check_order_shape_mismatch(tmp_path):
    x = write(tmp_path / "x.json", PARAMS.to_dict())
    small = MsnParams(np.zeros((1, 2)), np.eye(2), [[1.0]], np.zeros((1, 2)))
    y = write(tmp_path / "y.json", small.to_dict())
    assert run("check-order", "--x", x, "--y", y, "--order", "cx") == 2


def test_verify_identity_pass_and_equal_laws(tmp_path):
    doc = {"f": "quadratic", "x": PARAMS.to_dict(), "y": PARAMS.to_dict(),
           "lambda_nodes": 4, "mc_per_node": 2000, "lhs_samples": 5000}
    out = tmp_path / "id.json"
    assert run("verify-identity", "--descriptor", write(tmp_path / "d.json", doc), "-o", out) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["rhs"]["value"] == 0.0


def test_verify_identity_reports_failing_lambda(tmp_path, capsys):
    law = {"n": 1, "p": 2, "mu": [0.0, 0.0], "Omega": [[1.0, 0.0], [0.0, 1.0]]}
    doc = {"f": "linear", "x": dict(law, delta=[0.0, 0.0]), "y": dict(law, delta=[2.0, 0.0]),
           "lambda_nodes": 4, "mc_per_node": 100}
    out = tmp_path / "id.json"
    assert run("verify-identity", "--descriptor", write(tmp_path / "d.json", doc), "-o", out) == 3
    err = capsys.readouterr().err
    assert "lambda" in err and not out.exists()


def test_verify_identity_rejects_bad_descriptor(tmp_path):
    doc = {"f": "nope", "x": PARAMS.to_dict(), "y": PARAMS.to_dict()}
    assert run("verify-identity", "--descriptor", write(tmp_path / "d.json", doc)) == 2
    doc = {"f": "linear", "x": PARAMS.to_dict(), "y": PARAMS.to_dict(), "extra": 1}
    assert run("verify-identity", "--descriptor", write(tmp_path / "e.json", doc)) == 2


def test_selftest_quick(tmp_path):
    out = tmp_path / "self.json"
    assert run("selftest", "--quick", "-o", out) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and len(doc["checks"]) >= 8


def test_seed_must_be_unsigned(params_file):
    with pytest.raises(SystemExit):
        run("sample", "--params", params_file, "--seed", -1)
