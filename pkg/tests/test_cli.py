import csv
import json
import logging
import math
import subprocess
import sys
from fractions import Fraction

import pytest
from sympy import totient

from supermeasured.cli import RESULT_KEYS, emit_plot_data, main
from supermeasured.errors import ConfigError
from supermeasured.experiments import load_config, parse_angle

VOLATILE = ("runtime_ms", "timestamp")


def write_config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run_cli(cfg, out, *extra):
    code = main(["run", str(cfg), "--output", str(out), *extra])
    doc = json.loads((out / "result.json").read_text()) if (out / "result.json").exists() else None
    return code, doc


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_angle_expressions(self):
        assert parse_angle("pi/2") == pytest.approx(math.pi / 2)
        assert parse_angle("-pi/4") == pytest.approx(-math.pi / 4)
        assert parse_angle("3*pi/4") == pytest.approx(3 * math.pi / 4)
        assert parse_angle("0.5") == 0.5
        with pytest.raises(ConfigError):
            parse_angle("__import__('os').getcwd()")

    def test_sections_and_overrides(self, tmp_path):
        path = write_config(tmp_path, "[run]\nexperiment = chsh\nsamples = 10\n[physics]\nangles = 0, pi/2, -pi/4, pi/4\n")
        cfg = load_config(path, {"samples": 500, "seed": 7, "output_dir": None})
        assert cfg.samples == 500 and cfg.seed == 7
        assert cfg.angles[2] == pytest.approx(-math.pi / 4)

    def test_headerless_file(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "experiment = niven\ndenominator_bound = 6\n"))
        assert cfg.experiment == "niven"

    def test_duplicate_keys(self, tmp_path):
        path = write_config(tmp_path, "[a]\nexperiment = niven\n[b]\nexperiment = closure\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_scientific_integers(self, tmp_path):
        path = write_config(tmp_path, "experiment = closure\nsamples = 1e5\n")
        assert load_config(path).samples == 100_000


class TestExitCodes:
    def test_missing_angles_names_the_field(self, tmp_path, caplog):
        cfg = write_config(tmp_path, "experiment = chsh\nsamples = 100\n")
        with caplog.at_level(logging.ERROR):
            code, _ = run_cli(cfg, tmp_path / "out")
        assert code == 2
        assert "'angles'" in caplog.text

    def test_unknown_experiment(self, tmp_path):
        assert run_cli(write_config(tmp_path, "experiment = teleport\n"), tmp_path / "out")[0] == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.ini")]) == 2

    def test_bad_arguments(self):
        assert main(["fly"]) == 2

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        cfg = write_config(tmp_path, "experiment = niven\ndenominator_bound = 6\n")
        assert run_cli(cfg, blocker / "sub")[0] == 2

    def test_runtime_failure(self, tmp_path):
        cfg = write_config(tmp_path, "experiment = lorenz\nsamples = 100\ndt = 0.05\nperturbation = 1e200\n")
        assert run_cli(cfg, tmp_path / "out")[0] == 3


def test_chsh_integration_run(tmp_path):
    cfg = write_config(tmp_path, "experiment = chsh\nseed = 42\nsamples = 1e6\nangles = 0, pi/2, -pi/4, pi/4\n")
    code, doc = run_cli(cfg, tmp_path / "out")
    assert code == 0
    assert tuple(doc) == RESULT_KEYS
    assert 2.80 <= doc["metrics"]["abs_s"] <= 2.86
    assert doc["metrics"]["ks"]["verdict"] in ("reject", "fail-to-reject")
    assert doc["verdicts"]["chsh_violated"] is True
    rows = read_rows(tmp_path / "out" / "correlations.csv")[1:]
    assert len(rows) == 64
    assert float(rows[0][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(math.pi)
    for theta, e, oracle in ((float(a), float(b), float(c)) for a, b, c in rows):
        assert oracle == pytest.approx(-math.cos(theta), abs=1e-12)
        assert abs(e - oracle) <= 4 / math.sqrt(10_000)


def test_niven_exceptional_fractions(tmp_path):
    cfg = write_config(tmp_path, "experiment = niven\ndenominator_bound = 60\n")
    code, doc = run_cli(cfg, tmp_path / "out")
    assert code == 0
    rows = read_rows(tmp_path / "out" / "niven_exceptional.csv")
    assert rows[0] == ["numerator", "denominator", "cos"]
    got = {Fraction(int(n), int(d)) for n, d, _ in rows[1:]}
    expected = {Fraction(n, d) for d in (1, 2, 3, 4, 6) for n in range(d) if math.gcd(n, d) == 1}
    assert got == expected
    lines = (tmp_path / "out" / "niven.txt").read_text().splitlines()
    assert len(lines) == doc["metrics"]["fractions_checked"] == 1 + sum(int(totient(d)) for d in range(2, 61))
    assert "1/8 -> irrational" in lines


def test_sample_construct_outputs(tmp_path):
    cfg = write_config(tmp_path, "experiment = sample-construct\nseed = 3\nsamples = 2000\n")
    code, doc = run_cli(cfg, tmp_path / "out")
    assert code == 0
    rows = read_rows(tmp_path / "out" / "convergence.csv")
    assert rows[0] == ["n", "max_abs_error", "bound"]
    errors = [float(r[1]) for r in rows[1:]]
    assert [int(r[0]) for r in rows[1:]] == [10**3, 10**4, 10**5, 10**6]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert doc["verdicts"]["probabilities_preserved"] is True
    assert read_rows(tmp_path / "out" / "atoms.csv")[0] == ["lambda", "setting_k", "setting_l"]
    assert len(read_rows(tmp_path / "out" / "atoms.csv")) == 2001


def test_closure_and_exclusivity(tmp_path):
    cfg = write_config(tmp_path, "experiment = closure\nsamples = 2000\np_values = 2, 101\n")
    code, doc = run_cli(cfg, tmp_path / "c")
    assert code == 0
    assert doc["metrics"]["closure"][0] == {"p": 2, "trials": "exhaustive", "failure_rate": 0.5}
    assert len(read_rows(tmp_path / "c" / "closure.csv")) == 3

    cfg = write_config(tmp_path, "experiment = exclusivity\np = 101\nangles_turns = 0, 1/4, 0, 1/8\ndenominator_bound = 12\n", "x.ini")
    code, doc = run_cli(cfg, tmp_path / "x")
    assert code == 0
    assert doc["verdicts"] == {"exclusivity_holds": True, "scan_holds": True}


def test_lorenz_and_si_test(tmp_path):
    cfg = write_config(tmp_path, "experiment = lorenz\nsamples = 20000\ntrajectory_stride = 100\n")
    code, _ = run_cli(cfg, tmp_path / "l")
    assert code == 0
    assert len(read_rows(tmp_path / "l" / "trajectory.csv")) == 1 + 201
    assert read_rows(tmp_path / "l" / "histogram.csv")[0] == ["ix", "iy", "iz", "mass"]

    cfg = write_config(tmp_path, "experiment = si-test\nsamples = 20000\nangles = 0, pi/2, -pi/4, pi/4\n", "s.ini")
    code, doc = run_cli(cfg, tmp_path / "s")
    assert code == 0
    assert doc["verdicts"] == {"physical_si": "consistent", "bell_si": "violated"}


def test_flags_override_file_values(tmp_path):
    cfg = write_config(tmp_path, "experiment = closure\nsamples = 10\nseed = 1\n")
    code, doc = run_cli(cfg, tmp_path / "o", "--samples", "321", "--seed", "9")
    assert code == 0
    assert doc["seed"] == 9 and doc["parameters"]["samples"] == 321


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, "experiment = chsh\nseed = 5\nsamples = 20000\nangles = 0, pi/2, -pi/4, pi/4\nsweep_steps = 8\nwrite_ensembles = yes\n")
    run_cli(cfg, tmp_path / "a")
    run_cli(cfg, tmp_path / "b")
    a = json.loads((tmp_path / "a" / "result.json").read_text())
    b = json.loads((tmp_path / "b" / "result.json").read_text())
    for key in VOLATILE:
        a.pop(key), b.pop(key)
    assert json.dumps(a) == json.dumps(b)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "ensemble_11.csv" in files
    for name in files:
        if name != "result.json":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_results_write_nothing(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert emit_plot_data(None, tmp_path) == []
    assert "no plot data" in caplog.text
    assert list(tmp_path.iterdir()) == []


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, "experiment = niven\ndenominator_bound = 6\n")
    proc = subprocess.run([sys.executable, "-m", "supermeasured", "run", str(cfg), "--output", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "result.json").exists()
