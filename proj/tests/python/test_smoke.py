import math
import os
from pathlib import Path

import pytest

import dglue

SCENARIOS = Path(os.environ.get("DGLUE_SCENARIO_DIR", Path(__file__).resolve().parents[2] / "scenarios"))


def test_catalogue():
    names = dglue.catalogue()
    assert len(names) == 10
    assert names[0] == "fibres" and "levi-civita-inheritance" in names


def test_run_cross_flat():
    report = dglue.run(SCENARIOS / "cross_flat.json", suites=["fibres", "metric-gluing"], seed=5)
    assert report["status"] == "pass"
    assert [s["suite"] for s in report["suites"]] == ["fibres", "metric-gluing"]
    assert all(s["seed"] == 5 for s in report["suites"])


def test_run_mismatch_has_witness():
    report = dglue.run(SCENARIOS / "halfline_mismatch.json")
    (suite,) = report["suites"]
    assert suite["status"] == "fail"
    assert suite["witnesses"][0]["location"].startswith("Locus")


def test_fibre_and_inspect():
    f = dglue.fibre(str(SCENARIOS / "cross_flat.json"), "locus:0")
    assert f["dim"] == 2
    assert f["gram"] == [[0.5, 0.0], [0.0, 0.5]]
    assert "fibre dim 1" in dglue.inspect(str(SCENARIOS / "cross_flat.json"), "block1:1.0")
    with pytest.raises(dglue.DglueError, match="ParseError"):
        dglue.inspect(str(SCENARIOS / "cross_flat.json"), "no-colon")


def test_koszul_closed_form():
    # Cometric exp(2x): the dual Gram is exp(-2x), whose symbol is -1.
    gram = ['{"exp": {"mul": [2, {"var": 0}]}}']
    assert dglue.koszul(gram, 1, [0.3]) == pytest.approx([-1.0], abs=1e-12)
    assert dglue.koszul(gram, 1, [0.3], mode="fd") == pytest.approx([-1.0], abs=1e-6)
    x = 0.7
    diag = ["1", "0", "0", '{"poly": {"0,0": 1, "2,0": 1}}']
    got = dglue.koszul(diag, 2, [x, 0.2])
    assert got[3] == pytest.approx(x / (1 + x * x) ** 2, abs=1e-12)
    assert got[5] == pytest.approx(-x / (1 + x * x), abs=1e-12)
    assert dglue.christoffel_oracle(diag, 2, [x, 0.2]) == pytest.approx(got, abs=1e-12)
    assert not any(math.isnan(v) for v in got)
