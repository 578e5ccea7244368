import json
import subprocess
import sys

import numpy as np
import pytest

from gausscurv import _io
from gausscurv.cli import main, read_config


def run(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path)])


def test_closed_form_outputs(tmp_path, capsys):
    code = run(tmp_path, "closed-form", "--family", "chakie", "--n", "2", "--zeta", "1",
               "--window", "2", "--h", "0.02")
    assert code == 0
    s = json.loads((tmp_path / "closed_form.json").read_text())
    assert len(s["local_maxima"]) == 2
    assert s["integral_curvature"] == pytest.approx(8 * np.pi, rel=1e-6)
    header, data = _io.read_csv(tmp_path / "conformal_factor.csv")
    assert header == ["x1", "x2", "value"] and data.shape == (200 * 200, 3)


def test_closed_form_stuart_diverges(tmp_path):
    assert run(tmp_path, "closed-form", "--family", "stuart", "--zeta", "0.5", "--h", "0.05") == 0
    assert json.loads((tmp_path / "closed_form.json").read_text())["integral_curvature"] == "diverges"


def test_closed_form_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "closed-form", "--family", "special", "--gamma", "0.6", "--h", "0.05") == 0
    assert (a / "conformal_factor.csv").read_bytes() == (b / "conformal_factor.csv").read_bytes()
    assert (a / "closed_form.json").read_bytes() == (b / "closed_form.json").read_bytes()


SOLVE = ["solve", "--curvature", "special", "--gamma", "0.5", "--truncate", "1000",
         "--r-max", "1000", "--n-radii", "400"]


def test_solve_outputs(tmp_path):
    assert run(tmp_path, *SOLVE, "--beta", "2") == 0
    s = json.loads((tmp_path / "solve.json").read_text())
    assert s["converged"] and s["kappa"] == pytest.approx(2 * np.pi)
    for name in ("rho.csv", "U.csv"):
        assert _io.read_csv(tmp_path / name)[0] == ["r", "value", "weight"]
    assert not (tmp_path / "trace.csv").exists()


def test_solve_rejects_beta_above_four(tmp_path, capsys):
    assert run(tmp_path, *SOLVE, "--beta", "4.5") == 2
    assert "admissible range" in capsys.readouterr().err


def test_solve_nonconvergence_exit_code(tmp_path):
    assert run(tmp_path, *SOLVE, "--beta", "2", "--max-iter", "3") == 3
    header, data = _io.read_csv(tmp_path / "trace.csv")
    assert header == ["iteration", "residual", "F"] and data.shape[0] == 3


def test_solve_flat_short_circuit(tmp_path):
    assert run(tmp_path, "solve", "--curvature", "zero", "--beta", "0", "--h-re", "0,1") == 0
    s = json.loads((tmp_path / "solve.json").read_text())
    assert s["flat"] and s["U"] == "H"


def test_solve_multistart(tmp_path):
    assert run(tmp_path, "solve", "--curvature", "exp", "--sign", "-1", "--beta", "-1",
               "--r-max", "100", "--n-radii", "300", "--multistart", "apriori,gaussian") == 0
    a = _io.read_csv(tmp_path / "apriori_rho.csv")[1]
    b = _io.read_csv(tmp_path / "gaussian_rho.csv")[1]
    np.testing.assert_allclose(a[:, 1], b[:, 1], atol=1e-8)


def test_beta_kappa_conflict(tmp_path):
    assert run(tmp_path, *SOLVE, "--beta", "2", "--kappa", "1") == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# solver settings\ncurvature.curvature = special\ncurvature.gamma = 0.5\n"
                   "apriori.truncate = 1000\nsolver.r_max = 1000\nsolver.n_radii = 400\n"
                   "solver.beta = 1.0\n")
    assert run(tmp_path, "solve", "--config", str(cfg)) == 0
    assert json.loads((tmp_path / "solve.json").read_text())["beta"] == 1.0
    assert run(tmp_path, "solve", "--config", str(cfg), "--beta", "2") == 0
    assert json.loads((tmp_path / "solve.json").read_text())["beta"] == 2.0


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("beta = 1\n")
    assert run(tmp_path, "solve", "--config", str(bad)) == 2
    bad.write_text("solver.nope = 1\n")
    assert run(tmp_path, "solve", "--config", str(bad)) == 2


def test_read_config_strips_comments(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("mc.seed = 5  # fixed\n\n")
    assert read_config(p) == {"mc.seed": "5"}


def test_sample_outputs_and_reproducibility(tmp_path):
    args = ["sample", "--curvature", "disk", "--beta", "1", "--n-particles", "10",
            "--sweeps", "2000", "--dump-every", "500", "--seed", "4"]
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, *args) == 0
    for name in ("histogram.csv", "samples.csv", "sample.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert _io.read_csv(a / "samples.csv")[0] == ["sweep", "particle", "x1", "x2"]


def test_sample_compare(tmp_path):
    assert run(tmp_path, *SOLVE, "--beta", "2") == 0
    assert run(tmp_path, "sample", "--curvature", "special", "--gamma", "0.5", "--truncate", "1000",
               "--beta", "2", "--n-particles", "20", "--sweeps", "3000",
               "--compare", str(tmp_path / "rho.csv")) == 0
    s = json.loads((tmp_path / "sample.json").read_text())
    assert 0 <= s["l1_to_compare"] < 0.3


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("GAUSSCURV_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["closed-form", "--family", "flat", "--h", "0.1"]) == 0
    assert (tmp_path / "env" / "closed_form.json").exists()


def test_verify_unknown_suite(tmp_path):
    assert run(tmp_path, "verify", "--suite", "nope") == 2


def test_verify_fast_suite(tmp_path, capsys):
    assert run(tmp_path, "verify", "--suite", "curvature-integrals") == 0
    assert "checks passed" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gausscurv.cli", "closed-form", "--family", "flat",
                          "--h", "0.1", "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and (tmp_path / "closed_form.json").exists()
