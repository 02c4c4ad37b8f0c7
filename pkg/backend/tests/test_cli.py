import sys
import os
import csv
import json

import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from app.cli import main
from app.core.config import settings
from app.core.exceptions import InvalidArgumentError
from app.core.run_config import HEADER, RunConfig


def test_gauss_command(capsys):
    assert main(["gauss", "-a", "-1", "-b", "2", "-c", "5"]) == 0
    out = capsys.readouterr().out
    assert "G(-1, 2, 5)" in out
    assert "|G|:    2.2360679774997" in out
    assert "agree:  True" in out


@pytest.mark.parametrize("argv", [
    ["gauss", "-a", "2", "-b", "0", "-c", "4"],
    ["gauss", "-a", "1", "-b", "0", "-c", "0"],
    ["algebraic", "--M", "3", "--p", "2", "--q", "4"],
    ["algebraic", "--M", "2", "--p", "1", "--q", "3"],
])
def test_invalid_arguments_exit_with_2(argv, tmp_path):
    assert main(argv + (["--out", str(tmp_path)] if argv[0] == "algebraic" else [])) == 2


def test_algebraic_command(tmp_path, capsys):
    assert main(["algebraic", "--M", "3", "--p", "1", "--q", "3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "sides:            9" in out
    payload = json.loads((tmp_path / "polygon_M3_p1_q3.json").read_text())
    assert len(payload["vertices"]) == 9
    assert (tmp_path / "polygon_M3_p1_q3.csv").exists()


def test_simulate_then_analyze(tmp_path, capsys):
    argv = ["simulate", "--M", "3", "--nodes-per-side", "16", "--steps", "252",
            "--dump-times", "none", "--out", str(tmp_path)]
    assert main(argv) == 0
    run_dir = tmp_path / "M3_n16"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["spec"] == {"M": 3, "N": 48, "n_t": 252}

    assert main(["analyze", "--run-dir", str(run_dir)]) == 0
    report = json.loads((run_dir / "report.json").read_text())
    assert report["speed"]["c_M"] > 0
    assert "lambda" in report["affine"]
    # 252 steps leave too few samples inside the default Holder window
    assert "holder" not in report and report["warnings"]
    for name in ("z_t.csv", "phi_t.csv"):
        assert (run_dir / name).exists()


def test_simulate_with_dump_file(tmp_path):
    dump_file = tmp_path / "times.txt"
    dump_file.write_text("0\n0.2327105669\n")
    assert main(["simulate", "--M", "3", "--nodes-per-side", "16", "--steps", "252",
                 "--dump-times", str(dump_file), "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "M3_n16" / "manifest.json").read_text())
    assert [d["label"] for d in manifest["dumps"]] == [0, 1]
    assert [d["step"] for d in manifest["dumps"]] == [0, 84]


def test_simulate_rejects_unstable_or_bad_grid(tmp_path):
    assert main(["simulate", "--M", "3", "--nodes-per-side", "16", "--steps", "20",
                 "--dump-times", "none", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--M", "3", "--nodes-per-side", "12", "--steps", "2000",
                 "--dump-times", "none", "--out", str(tmp_path)]) == 2


def test_analyze_needs_run_dir(tmp_path):
    assert main(["analyze"]) == 2
    assert main(["analyze", "--run-dir", str(tmp_path)]) == 2


def test_simulate_from_config_file(tmp_path):
    config = RunConfig(M=4, nodes_per_side=16, steps=200, dump_times="none", out=str(tmp_path))
    path = config.save(tmp_path / "run.cfg")
    assert main(["simulate", "--config", str(path)]) == 0
    assert (tmp_path / "M4_n16" / "manifest.json").exists()


def test_run_config_parsing():
    text = f"{HEADER}\n# comment\nM=5\nnodes_per_side=32\nholder_window=0.001, 0.05\nholder_side=left\n"
    config = RunConfig.parse(text)
    assert (config.M, config.N) == (5, 160)
    assert config.holder_window == (0.001, 0.05)
    assert RunConfig.parse(config.dump()) == config

    for bad in ["M=3\n", f"{HEADER}\ncolour=red\n", f"{HEADER}\nM\n", f"{HEADER}\nnodes_per_side=24\n",
                f"{HEADER}\nholder_window=0.1,0.01\n", f"{HEADER}\nholder_p=2\nholder_q=4\n"]:
        with pytest.raises(InvalidArgumentError):
            RunConfig.parse(bad)
    with pytest.raises(InvalidArgumentError):
        RunConfig.load("/nonexistent/run.cfg")


@pytest.mark.parametrize("q,sides", [(2, 3), (3, 9), (4, 6)])
def test_algebraic_side_counts(q, sides, tmp_path, capsys):
    assert main(["algebraic", "--M", "3", "--p", "1", "--q", str(q), "--out", str(tmp_path)]) == 0
    assert f"sides:            {sides}\n" in capsys.readouterr().out


def test_gauss_with_even_modulus_prints_zero(capsys):
    assert main(["gauss", "-a", "1", "-b", "0", "-c", "2"]) == 0
    out = capsys.readouterr().out
    assert "|G|:    0\n" in out
    assert "agree:  True" in out


def test_algebraic_closure_failure_exits_with_3(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "CLOSURE_FAILURE", -1.0)
    assert main(["algebraic", "--M", "3", "--p", "1", "--q", "3", "--out", str(tmp_path)]) == 3


def test_simulate_is_bitwise_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--M", "3", "--nodes-per-side", "16", "--steps", "252",
                     "--dump-times", "none", "--out", str(tmp_path / name)]) == 0
    first = (tmp_path / "a" / "M3_n16" / "trajectory.csv").read_bytes()
    second = (tmp_path / "b" / "M3_n16" / "trajectory.csv").read_bytes()
    assert first == second


def test_algebraic_perturbed_tangent_cloud(tmp_path, capsys):
    assert main(["algebraic", "--M", "3", "--p", "1", "--q", "3", "--perturb", "7",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    # 1/3 + 1/7 = 10/21
    assert "M=3 p=10 q=21" in out
    assert (tmp_path / "polygon_M3_p10_q21.json").exists()

    with open(tmp_path / "tangents_M3_p10_q21.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 3 * 21
    for row in rows:
        T1, T2, T3 = (float(row[k]) for k in ("T1", "T2", "T3"))
        assert T1 ** 2 + T2 ** 2 + T3 ** 2 == pytest.approx(1.0)
        assert float(row["w_re"]) * (1 + T3) == pytest.approx(T1, abs=1e-12)
        assert float(row["w_im"]) * (1 + T3) == pytest.approx(T2, abs=1e-12)


def test_algebraic_rejects_nonpositive_perturbation(tmp_path):
    assert main(["algebraic", "--M", "3", "--p", "1", "--q", "3", "--perturb", "0",
                 "--out", str(tmp_path)]) == 2
