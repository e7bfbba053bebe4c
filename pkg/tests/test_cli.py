import csv
import io
import json
import math
from pathlib import Path

import pytest

from metricnet.cli import main

GRAPHS = Path(__file__).resolve().parent.parent / "graphs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_k3(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", GRAPHS / "k3.json", "--out", tmp_path)
    assert code == 0
    assert out.strip() == "n=3 m=3 regular γ=2 bipartite=no η=2 diam=1 ν₂=3"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["command"] == "validate"


def test_validate_degree_one(capsys, tmp_path):
    code, _, err = run(capsys, "validate", GRAPHS / "path_degree1.json", "--out", tmp_path)
    assert code == 1 and "DegreeBelowTwo" in err


def test_validate_malformed(capsys, tmp_path):
    code, _, err = run(capsys, "validate", GRAPHS / "malformed.json", "--out", tmp_path)
    assert code == 2 and "line 5" in err


def test_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "validate", tmp_path / "nope.json", "--out", tmp_path)
    assert code == 2


def test_usage_error(capsys):
    code, _, _ = run(capsys, "spectrum")
    assert code == 2
    code, _, _ = run(capsys, "spectrum", GRAPHS / "k3.json", "--lambda-max", "-1")
    assert code == 2


def test_spectrum_k3(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", GRAPHS / "k3.json", "--lambda-max", 20, "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(round(float(r["lambda"]), 5), int(r["multiplicity"])) for r in rows] == \
        [(0.0, 1), (4.38649, 2), (17.54596, 2)]
    assert (tmp_path / "spectrum.csv").read_bytes() == out.encode()


def test_spectrum_oracle(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", GRAPHS / "c4.json", "--lambda-max", 10,
                       "--oracle", 0.005, "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert max(float(r["discrepancy"]) for r in rows) <= 1e-3


def test_spectrum_closed_form_rejected(capsys, tmp_path):
    code, _, err = run(capsys, "spectrum", GRAPHS / "c4_two_speed.json", "--closed-form", "--out", tmp_path)
    assert code == 1 and "NotUnitSpeed" in err


def test_spectrum_jobs_identical(capsys, tmp_path):
    _, a, _ = run(capsys, "spectrum", GRAPHS / "c4_two_speed.json", "--lambda-max", 100, "--out", tmp_path)
    _, b, _ = run(capsys, "spectrum", GRAPHS / "c4_two_speed.json", "--lambda-max", 100,
                  "--jobs", 3, "--out", tmp_path)
    assert a == b


def test_evolve_heat_bump(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", GRAPHS / "k3.json", "--T", 2, "--out", tmp_path)
    assert code == 0
    rates = dict(line.split(" ", 1) for line in out.strip().splitlines())
    assert float(rates["fitted_slope"]) == pytest.approx(-4.38649, rel=0.02)
    assert float(rates["lambda2"]) == pytest.approx(-4 * math.pi ** 2 / 9)
    header = (tmp_path / "snapshots.csv").read_text().splitlines()[0]
    assert header == "t,edge,x,value"


def test_evolve_heat_constant(capsys, tmp_path):
    code, _, _ = run(capsys, "evolve", GRAPHS / "k3.json", "--f", "constant", "--T", 1, "--dt", 0.25,
                     "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "snapshots.csv")))
    assert {r["value"] for r in rows} == {"1"}


def test_evolve_wave_mode(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", GRAPHS / "c4.json", "--kind", "wave", "--f", "mode:1",
                       "--T", 10, "--dt", 0.1, "--out", tmp_path)
    assert code == 0
    drift = float(out.split("energy_relative_drift")[1])
    assert drift <= 1e-8


def test_evolve_bad_spec(capsys, tmp_path):
    code, _, err = run(capsys, "evolve", GRAPHS / "c4.json", "--f", "mode:999", "--out", tmp_path)
    assert code == 2 and "mode 999" in err
    code, _, _ = run(capsys, "evolve", GRAPHS / "c4.json", "--f", "spike", "--out", tmp_path)
    assert code == 2


def test_evolve_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        run(capsys, "evolve", GRAPHS / "k4.json", "--f", "random", "--seed", 5, "--T", 0.5,
            "--dt", 0.1, "--out", d)
    assert (a / "snapshots.csv").read_bytes() == (b / "snapshots.csv").read_bytes()
    assert (a / "rates.txt").read_bytes() == (b / "rates.txt").read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    assert ma["config"]["seed"] == 5 and ma["config"]["kind"] == "heat"


@pytest.mark.parametrize("name,lam2", [
    ("c4.json", -math.pi ** 2 / 4),
    ("k3.json", -4 * math.pi ** 2 / 9),
    ("k5.json", -math.acos(-0.25) ** 2),
])
def test_stability(capsys, tmp_path, name, lam2):
    code, out, _ = run(capsys, "stability", GRAPHS / name, "--out", tmp_path)
    assert code == 0
    values = dict(line.split(None, 1) for line in out.splitlines() if not line.startswith("note"))
    assert float(values["lambda2"]) == pytest.approx(lam2, rel=1e-12)


def test_stability_c4_values(capsys, tmp_path):
    _, out, _ = run(capsys, "stability", GRAPHS / "c4.json", "--fit", "--out", tmp_path)
    values = dict(line.split(None, 1) for line in out.splitlines())
    assert float(values["nu2"]) == pytest.approx(2.0)
    assert float(values["eta_bound"]) == pytest.approx(1.17157, abs=1e-5)
    assert float(values["diam_bound"]) == 0.5
    assert values["check:fitted_slope~lambda2"] == "ok"


def test_stability_partial(capsys, tmp_path):
    code, out, _ = run(capsys, "stability", GRAPHS / "c4_two_speed.json", "--out", tmp_path)
    assert code == 0 and "not applicable" in out


def test_selftest(capsys, tmp_path):
    code, out, _ = run(capsys, "selftest", "--out", tmp_path)
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 20
