"""End-to-end command-line tests driven through main(argv)."""

import json

import numpy as np
import pytest

from qestbounds.cli import main
from qestbounds.gaussian import thermal_gamma


def run(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse errors
        code = exc.code
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bounds_json(capsys):
    code, out, _ = run(
        capsys,
        ["bounds", "--model", "qudit_full", "--constants", "d=2,p=0.75;0.25", "--point", "0,0,0"],
    )
    assert code == 0
    rec = json.loads(out)
    assert rec["command"] == "bounds"
    rep = rec["report"]
    assert abs(rep["holevo"] - 0.9375) < 1e-6
    assert abs(rep["rld"] - 0.9375) < 1e-9
    assert abs(rep["sld"] - 0.6875) < 1e-9
    assert rep["stable"] is True


def test_bounds_csv(capsys):
    code, out, _ = run(
        capsys,
        [
            "bounds", "--model", "qudit_full", "--constants", "d=2,p=0.75;0.25",
            "--point", "0,0,0", "--format", "csv",
        ],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "# qestbounds-csv v1"
    assert lines[2] == "t1,t2,t3,sld,rld,holevo,nuisance"
    row = lines[3].split(",")
    assert abs(float(row[3]) - 0.6875) < 1e-9
    assert abs(float(row[5]) - 0.9375) < 1e-6
    assert row[6] == ""  # no nuisance split requested


def test_bad_model_exits_2(capsys):
    code, _, err = run(capsys, ["bounds", "--model", "nope", "--point", "0"])
    assert code == 2
    assert "validation error" in err


def test_missing_subcommand_exits_2(capsys):
    code, _, _ = run(capsys, [])
    assert code == 2


def test_sweep_one_axis(capsys):
    code, out, _ = run(
        capsys,
        [
            "sweep", "--model", "phase", "--constants", "r=0.8",
            "--point", "0.6", "--grid", "t:0.2:1.0:5",
        ],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "# qestbounds-csv v1"
    assert lines[2] == "t,sld,rld,holevo,nuisance"
    rows = lines[3:]
    assert len(rows) == 5
    # phase information r^2 is flat in t: every row carries the same values
    for row in rows:
        parts = row.split(",")
        assert abs(float(parts[1]) - 1.5625) < 1e-9
        assert abs(float(parts[3]) - 1.5625) < 1e-6


def test_sweep_two_axes_and_single_point(capsys):
    code, out, _ = run(
        capsys,
        [
            "sweep", "--model", "amplitude_damping", "--point", "1.2,0.6,0.3",
            "--grid", "theta:0.8:1.4:3", "--grid", "eta:0.4:0.6:2",
        ],
    )
    assert code == 0
    rows = out.strip().split("\n")[3:]
    assert len(rows) == 6  # 3 x 2 mesh
    code, out, _ = run(
        capsys,
        ["sweep", "--model", "phase", "--point", "0.6", "--grid", "t:0.5:0.5:1"],
    )
    assert len(out.strip().split("\n")[3:]) == 1


def test_sweep_rejects_unknown_grid_parameter(capsys):
    code, _, err = run(
        capsys,
        ["sweep", "--model", "phase", "--point", "0.6", "--grid", "bogus:0:1:3"],
    )
    assert code == 2
    assert "grid parameter" in err


def test_simulate_csv_deterministic(capsys, tmp_path):
    argv = [
        "simulate", "--model", "phase", "--point", "0.6",
        "--copies", "256", "--trials", "50", "--seed", "3",
    ]
    code1, out1, _ = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    assert out1.startswith("# qestbounds-csv v1\n")
    assert len(out1.strip().split("\n")) == 3 + 50

    out_path = tmp_path / "run.csv"
    code3, out3, _ = run(capsys, argv + ["--out", str(out_path)])
    assert code3 == 0
    assert out_path.read_text() == out3 == out1


def test_simulate_two_step_json(capsys):
    code, out, _ = run(
        capsys,
        [
            "simulate", "--model", "phase", "--constants", "r=0.8", "--point", "0.6",
            "--protocol", "two-step", "--copies", "256", "--trials", "50",
            "--seed", "3", "--format", "json",
        ],
    )
    assert code == 0
    rec = json.loads(out)
    assert rec["protocol"] == "two-step"
    assert abs(rec["fallback_frac"] - 0.62) < 1e-12
    assert rec["trials"] == 50 and rec["copies"] == 256


def test_simulate_requires_seed_and_copies(capsys):
    code, _, err = run(capsys, ["simulate", "--model", "phase", "--point", "0.6", "--copies", "64"])
    assert code == 2 and "--seed" in err
    code, _, err = run(capsys, ["simulate", "--model", "phase", "--point", "0.6", "--seed", "1"])
    assert code == 2 and "--copies" in err


def test_tail_gaussian_file_closed_form(capsys, tmp_path):
    data = {"dC": 1, "dQ": 0, "Gamma_re": [[1.0]], "Gamma_im": [[0.0]], "T": None}
    path = tmp_path / "gm.json"
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, ["tail", "--gaussian-file", str(path), "--c", "4.0", "--seed", "5"])
    assert code == 0
    rec = json.loads(out)
    assert rec["method"] == "closed-form"
    assert abs(rec["value"] - 0.04550026389635844) < 1e-12
    assert rec["dC"] == 1 and rec["dQ"] == 0


def test_tail_qudit_monte_carlo(capsys):
    argv = [
        "tail", "--model", "qudit_full", "--constants", "d=2,p=0.75;0.25",
        "--point", "0,0,0", "--c", "4.0", "--seed", "5", "--trials", "20000",
    ]
    code, out, _ = run(capsys, argv)
    assert code == 0
    rec = json.loads(out)
    assert rec["method"] == "monte-carlo"
    assert rec["nsamples"] == 20000
    assert 0.0 <= rec["value"] <= 0.05
    code2, out2, _ = run(capsys, argv)
    assert out2 == out


def test_tail_precondition_exits_4(capsys):
    code, _, err = run(
        capsys,
        [
            "tail", "--model", "qudit_full", "--constants", "d=2,p=0.75;0.25",
            "--point", "0,0,0", "--c", "4.0", "--seed", "5", "--weight", "diag:1,2,3",
        ],
    )
    assert code == 4
    assert "precondition failure" in err


def test_gaussian_report(capsys, tmp_path):
    G = thermal_gamma(0.5)
    data = {
        "dC": 0,
        "dQ": 1,
        "Gamma_re": G.real.tolist(),
        "Gamma_im": G.imag.tolist(),
        "T": np.eye(2).tolist(),
    }
    path = tmp_path / "thermal.json"
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, ["gaussian", "--gaussian-file", str(path)])
    assert code == 0
    rec = json.loads(out)
    assert rec["dC"] == 0 and rec["dQ"] == 1
    assert abs(rec["N"][0] - 0.5) < 1e-9
    assert rec["d_invariant"] is True
    assert rec["d_invariant_residual"] < 1e-10
    # optimal simultaneous read-out of both quadratures: state covariance
    # (N + 1/2) per quadrature plus half a quantum of measurement back-action
    V = np.asarray(rec["measurement_covariance"])
    assert np.linalg.norm(V - 1.5 * np.eye(2)) < 1e-9
    assert abs(rec["weighted_value"] - 3.0) < 1e-9


def test_gaussian_rejects_csv_and_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, ["gaussian"])
    assert code == 2
    G = thermal_gamma(0.5)
    data = {
        "dC": 0,
        "dQ": 1,
        "Gamma_re": G.real.tolist(),
        "Gamma_im": G.imag.tolist(),
        "T": None,
    }
    path = tmp_path / "thermal.json"
    path.write_text(json.dumps(data))
    code, _, err = run(capsys, ["gaussian", "--gaussian-file", str(path), "--format", "csv"])
    assert code == 2
    assert "JSON only" in err


def test_bounds_out_file_matches_stdout(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    code, out, _ = run(
        capsys,
        [
            "bounds", "--model", "qudit_full", "--constants", "d=2,p=0.75;0.25",
            "--point", "0,0,0", "--out", str(out_path),
        ],
    )
    assert code == 0
    assert out_path.read_text() == out
