import json
import subprocess
import sys

import numpy as np
import pytest

from facecut.cli import emit_plot_data, main
from facecut.core import ConstraintSet, DensityOperator, Kind, pauli
from facecut.io import encode_matrix, save_problem
from facecut.optimize import amplitude_damping

I2, X, Y, Z = pauli()


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def qubit_level(tmp_path):
    path = tmp_path / "qubit.json"
    save_problem(path, DensityOperator(I2 / 2), ConstraintSet.of((I2 + Z, 1.0, Kind.LEVEL)))
    return str(path)


@pytest.fixture
def three_obs(tmp_path):
    path = tmp_path / "three.json"
    save_problem(path, DensityOperator(I2 / 2), ConstraintSet.of(*[(I2 + p, 1.0, Kind.LEVEL) for p in (X, Y, Z)]))
    return str(path)


@pytest.fixture
def enorm_problem(tmp_path):
    path = tmp_path / "enorm.json"
    rng = np.random.default_rng(4)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    save_problem(path, None, ConstraintSet.of((np.diag([0.0, 1.0, 2.0]), 0.7, Kind.SUBLEVEL)),
                 {"A": encode_matrix(a), "M": encode_matrix(a.conj().T @ a)})
    return str(path)


def test_face_report_and_extreme_check(capsys, qubit_level, three_obs):
    code, out, _ = run(capsys, "face-report", "--input", qubit_level)
    assert code == 0
    assert json.loads(out) == {"ambient_dim": 3, "constrained_dim": 2, "active": [0], "extreme": False, "rank": 2}
    code, out, _ = run(capsys, "extreme-check", "--input", three_obs)
    assert code == 0 and json.loads(out) == {"extreme": True, "rank": 2, "constrained_dim": 0}


def test_face_member(capsys, tmp_path):
    path = tmp_path / "fm.json"
    save_problem(path, DensityOperator(np.diag([0.5, 0.5, 0.0])), ConstraintSet(),
                 {"sigma": encode_matrix(np.diag([0.2, 0.8, 0.0]))})
    code, out, _ = run(capsys, "face-member", "--input", str(path))
    assert code == 0
    assert json.loads(out) == {"face_member": True, "ri_member": True, "segment_oracle": True}


def test_decompose(capsys, qubit_level, tmp_path):
    code, out, _ = run(capsys, "decompose", "--input", qubit_level)
    data = json.loads(out)
    assert code == 0 and len(data["components"]) == 2 and data["residual"] <= 1e-12
    for comp in data["components"]:
        assert comp["weight"] == pytest.approx(0.5)
        assert comp["values"]["H1"] == pytest.approx(1.0)


def test_decompose_three_obs_is_numerical_failure(capsys, three_obs):
    code, out, err = run(capsys, "decompose", "--input", three_obs)
    assert code == 3 and out == "" and "ExtremeMixedState" in err


def test_decompose_bipartite(capsys, tmp_path):
    path = tmp_path / "bi.json"
    h = np.diag([0.0, 1.0])
    save_problem(path, DensityOperator(np.eye(4) / 4), ConstraintSet(), {"H_A": encode_matrix(h), "H_B": encode_matrix(h)})
    code, out, _ = run(capsys, "decompose-bipartite", "--input", str(path))
    data = json.loads(out)
    assert code == 0 and len(data["components"]) <= 16
    for comp in data["components"]:
        assert comp["marginals"]["A"] == pytest.approx(0.5, abs=1e-8)
        assert comp["marginals"]["B"] == pytest.approx(0.5, abs=1e-8)


def test_enorm_and_linmax(capsys, enorm_problem):
    code, out, _ = run(capsys, "enorm", "--input", enorm_problem)
    data = json.loads(out)
    assert code == 0 and data["difference"] <= 1e-6 and data["status"] == "converged"
    code, out, _ = run(capsys, "linmax", "--input", enorm_problem)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(data["dual"] ** 2, rel=1e-9)


def test_min_entropy(capsys, tmp_path):
    path = tmp_path / "ent.json"
    kraus = [encode_matrix(k) for k in amplitude_damping(0.5).kraus]
    save_problem(path, None, ConstraintSet.of((np.diag([1.0, 0.0]), 0.3, Kind.SUBLEVEL)), {"kraus": kraus})
    code, out, _ = run(capsys, "min-entropy", "--input", str(path), "--restarts", "8")
    data = json.loads(out)
    assert code == 0 and data["kind"] == "sublevel"
    assert data["value"] == pytest.approx(0.41024429, abs=1e-6)
    code, out, _ = run(capsys, "min-entropy", "--input", str(path), "--kind", "level", "--restarts", "8")
    assert json.loads(out)["kind"] == "level"


def test_sweep_csv(capsys, enorm_problem, tmp_path):
    target = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--input", enorm_problem, "--format", "csv", "--output", str(target))
    lines = target.read_text().splitlines()
    assert code == 0 and len(lines) == 51 and lines[0] == "E,enorm"
    vals = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    code, out, _ = run(capsys, "sweep", "--input", enorm_problem, "--format", "csv", "--points", "0")
    assert out == "E,enorm\n"


def test_emit_plot_data():
    assert emit_plot_data([]) == "parameter,value\n"
    assert emit_plot_data([(0.5, 1.25)], ("E", "v")) == "E,v\n0.5,1.25\n"


def test_repeat_runs_are_byte_identical(capsys, enorm_problem):
    outs = [run(capsys, "enorm", "--input", enorm_problem, "--seed", "3")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    outs = [run(capsys, "verify", "purity", "--samples", "30", "--seed", "2")[1] for _ in range(2)]
    assert outs[0] == outs[1] and "wall_time" not in outs[0]


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "counterexamples")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "verify", "dim-drop", "--ell", "1", "--samples", "50", "--dims", "2,3", "--timing")
    data = json.loads(out)
    assert code == 0 and data["params"]["ell"] == 1 and "wall_time" in data


def test_classical_commands(capsys):
    code, out, _ = run(capsys, "classical", "simplex-member", "--q", "1:1/2,2:1/4,3:1/8,4:1/8",
                       "--p", "1:1/4,2:1/4,3:1/4,4:1/4")
    assert code == 0 and json.loads(out) == {"face_member": True, "ri_member": True, "mu": "2", "lambda": "-1"}
    code, out, _ = run(capsys, "classical", "poly-member", "--q=-7,5", "--p", "1,0,0,2")
    assert json.loads(out)["lambda"] == "-1"
    code, out, _ = run(capsys, "classical", "hadamard-chain", "--k", "2")
    assert code == 0 and json.loads(out)["strict_chain_signature"]
    code, out, _ = run(capsys, "classical", "zeta-order", "--s", "3", "--t", "2")
    data = json.loads(out)
    assert data["verdict"] == "bounded" and data["expected_member"]
    code, out, _ = run(capsys, "classical", "triangle-demo")
    assert code == 0 and json.loads(out)["holds"]


def test_csv_report_format(capsys, qubit_level):
    code, out, _ = run(capsys, "face-report", "--input", qubit_level, "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "key,value" and "constrained_dim,2" in lines


def test_input_errors(capsys, tmp_path):
    code, _, err = run(capsys, "face-report", "--input", str(tmp_path / "missing.json"))
    assert code == 2 and "input error" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"dim\": 2,\n")
    code, _, err = run(capsys, "face-report", "--input", str(bad))
    assert code == 2 and "ParseError" in err
    code, _, err = run(capsys, "classical", "poly-member", "--q", "1,-1", "--p", "0,1")
    assert code == 2 and "InputNotInCone" in err
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_violation_exit_code(capsys, monkeypatch):
    from facecut import verify

    monkeypatch.setitem(verify._RUNNERS, "purity", lambda rng, cfg: {"message": "forced"})
    code, out, _ = run(capsys, "verify", "purity", "--samples", "2")
    assert code == 1 and not json.loads(out)["passed"]


def test_module_entry_point(qubit_level):
    proc = subprocess.run([sys.executable, "-m", "facecut", "face-report", "--input", qubit_level],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["constrained_dim"] == 2
