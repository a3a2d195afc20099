import csv
import json

import pytest

from circlab.cli import main
from circlab.reports import FAIL, INCONCLUSIVE, PASS, VerificationReport, decide, dumps, overall_exit_code
from circlab.scenario import ScenarioError, load_scenario

CONST = {"drift": {"type": "fourier", "c0": 0.5}, "diffusion": {"type": "fourier", "c0": 1.0}}
ZERO = {"drift": {"type": "fourier", "c0": 0.0}, "diffusion": {"type": "fourier", "c0": 1.0}}
SINE = {"drift": {"type": "fourier", "c0": 0.0, "sin": [1.0]}, "diffusion": {"type": "fourier", "c0": 1.0}}


def write(path, obj):
    path.write_text(json.dumps(obj, indent=2))
    return path


def test_summarize_constant(tmp_path, capsys):
    model = write(tmp_path / "m.json", CONST)
    assert main(["summarize", str(model), "--out", str(tmp_path / "o")]) == 0
    data = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert data["gamma"] == pytest.approx(1.0)
    assert data["J"] == pytest.approx(0.5)
    assert data["e"] == pytest.approx(0.5)
    assert data["splitting_probability"] == pytest.approx(0.731059, abs=1e-6)
    assert data["reversible"] is False
    assert (tmp_path / "o" / data["density_csv_path"]).exists()


def test_summarize_zero_and_sine(tmp_path):
    for name, spec in (("zero", ZERO), ("sine", SINE)):
        out = tmp_path / name
        assert main(["summarize", str(write(tmp_path / f"{name}.json", spec)), "--out", str(out)]) == 0
        data = json.loads((out / "summary.json").read_text())
        assert data["gamma"] == pytest.approx(0.0, abs=1e-12)
        assert data["reversible"] is True
        rho = [float(r["rho"]) for r in csv.DictReader(open(out / "density.csv"))]
        if name == "zero":
            assert data["J"] == pytest.approx(0.0, abs=1e-12) and data["e"] == pytest.approx(0.0, abs=1e-12)
            assert max(rho) - min(rho) < 1e-10
        else:
            assert max(rho) - min(rho) > 0.5


def test_summarize_invalid_model(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", {"drift": CONST["drift"]})
    assert main(["summarize", str(bad)]) == 1
    assert "diffusion" in capsys.readouterr().err


def test_verify_zero_drift_integral_ft(tmp_path):
    scen = write(tmp_path / "s.json", {
        "model": ZERO,
        "simulation": {"step_size": 1e-3, "horizon": 2.0, "n_paths": 12000, "master_seed": 1},
        "suites": ["integral_ft"],
        "output_dir": "out",
    })
    assert main(["verify", str(scen)]) == 0
    reports = json.loads((tmp_path / "out" / "reports.json").read_text())
    assert [r["verdict"] for r in reports] == ["pass"]
    assert reports[0]["provenance"]["master_seed"] == 1
    assert "model_hash" in reports[0]["provenance"]
    assert (tmp_path / "out" / "provenance.json").exists()


def test_verify_missing_diffusion_is_line_anchored(tmp_path, capsys):
    scen = tmp_path / "s.json"
    scen.write_text('{\n  "model": {"drift": {"type": "fourier", "c0": 0.0}},\n  "suites": ["integral_ft"]\n}\n')
    assert main(["verify", str(scen)]) == 1
    err = capsys.readouterr().err
    assert f"{scen}:2:" in err and "diffusion" in err


def test_scenario_errors(tmp_path):
    bad = tmp_path / "b.json"
    bad.write_text('{"model": %s, "suites": ["nope"]}' % json.dumps(ZERO))
    with pytest.raises(ScenarioError, match="unknown suite"):
        load_scenario(bad)
    bad.write_text('{"model": %s, "suites": ["integral_ft"], "simulation": {"dt": 1}}' % json.dumps(ZERO))
    with pytest.raises(ScenarioError, match="simulation"):
        load_scenario(bad)
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(bad)


def test_overrides_apply(tmp_path):
    scen = write(tmp_path / "s.json", {"model": ZERO, "suites": ["integral_ft"]})
    sc = load_scenario(scen, {"master_seed": 9, "n_paths": 5, "step_size": None})
    assert sc.simulation.master_seed == 9 and sc.simulation.n_paths == 5


def test_simulate_first_cycles(tmp_path):
    model = write(tmp_path / "m.json", CONST)
    out = tmp_path / "o"
    argv = ["simulate", str(model), "--paths", "20", "--dt", "1e-3", "--seed", "4", "--out", str(out)]
    assert main(argv) == 0
    rows = list(csv.DictReader(open(out / "first_cycles.csv")))
    assert len(rows) == 20 and {r["sign"] for r in rows} <= {"1", "-1"}
    first = (out / "first_cycles.csv").read_bytes()
    assert main(argv) == 0
    assert (out / "first_cycles.csv").read_bytes() == first


def test_simulate_logs_and_paths(tmp_path):
    model = write(tmp_path / "m.json", CONST)
    out = tmp_path / "o"
    assert main(["simulate", str(model), "--paths", "3", "--dt", "1e-2", "--horizon", "3",
                 "--out", str(out), "--save-paths", "binary"]) == 0
    assert (out / "logs.csv").exists() and (out / "paths.bin").exists()


def test_bad_arguments_exit_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "m.json", "--horizon", "-3"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    assert main(["summarize", str(tmp_path / "missing.json")]) == 1


def test_oracle_command(tmp_path, capsys):
    chain = write(tmp_path / "c.json", {"n_sites": 3, "p": [2.0, 1.0, 3.0], "q": [1.0, 1.5, 0.5]})
    assert main(["oracle", str(chain), "--out", str(tmp_path / "o")]) == 0
    reports = json.loads((tmp_path / "o" / "oracle_reports.json").read_text())
    assert len(reports) == 6 and all(r["verdict"] == "pass" for r in reports)
    assert main(["oracle", str(chain), "--start", "7"]) == 1


def test_exit_code_contract():
    p = VerificationReport("integral_ft", PASS)
    f = VerificationReport("integral_ft", FAIL)
    i = VerificationReport("integral_ft", INCONCLUSIVE)
    assert overall_exit_code([p]) == 0
    assert overall_exit_code([p, i]) == 3
    assert overall_exit_code([i, f]) == 2
    with pytest.raises(ValueError):
        VerificationReport("no_such_theorem", PASS)


def test_decide_gates():
    assert decide(True, 100, 10) == PASS
    assert decide(True, 5, 10) == INCONCLUSIVE
    assert decide(False, 100, 10, censored_fraction=0.2) == INCONCLUSIVE
    assert decide(False, 100) == FAIL


def test_dumps_handles_numpy_and_nan():
    import numpy as np

    r = VerificationReport("integral_ft", PASS, {"x": np.float64(np.nan), "k": np.arange(3)})
    text = dumps([r])
    assert json.loads(text)[0]["statistics"] == {"k": [0, 1, 2], "x": None}
