import json

import pytest

from chaoscorr.cli import main
from chaoscorr.io import read_csv


def test_kt_quantum(tmp_path, capsys):
    assert main(["kt-quantum", "--j", "20", "--gammas", "7", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "kt_quasienergies_j20_g7.csv")
    assert header == ["k", "alpha"] and len(data) == 21
    assert "r_tilde" in capsys.readouterr().out


def test_number_format(tmp_path):
    main(["kt-quantum", "--j", "4", "--gammas", "1", "--out", str(tmp_path)])
    line = (tmp_path / "kt_quasienergies_j4_g1.csv").read_text().splitlines()[1]
    k, alpha = line.split(",")
    assert k == "0"
    mantissa = alpha.split("e")[0].lstrip("-")
    assert len(mantissa.replace(".", "")) == 17


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("j: 10\ngammas: [0.5]\n")
    assert main(["kt-quantum", "--config", str(cfg), "--j", "12", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "kt_quasienergies_j12_g0.5.csv").exists()


def test_exit_codes(tmp_path):
    assert main(["kt-quantum", "--j", "3", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense_key: 1\n")
    assert main(["kt-quantum", "--config", str(bad)]) == 2
    assert main(["kt-quantum", "--config", str(tmp_path / "missing.yaml")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["kt-quantum", "--j", "4", "--gammas", "1", "--out", str(blocker / "sub")]) == 4
    assert main(["dicke-quantum", "--n-atoms", "2", "--n-tr", "2", "--xis", "1", "--out", str(tmp_path)]) == 2


def test_sweep_and_fit(tmp_path, capsys):
    args = ["sweep", "--controls", "0.2", "3", "7", "--sizes", "20", "--durations", "200",
            "--ensemble", "30", "--seed", "1", "--out", str(tmp_path)]
    assert main(args) == 0
    (run,) = tmp_path.glob("kicked_top-*")
    summary = json.loads((run / "summary.json").read_text())
    assert summary["config"]["seed"] == 1
    capsys.readouterr()
    assert main(["fit", "--points", *map(str, run.glob("points_*.csv"))]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["n_points"] == 3


def test_measure_commands(tmp_path):
    assert main(["kt-measure", "--gamma", "7", "--n-kicks", "200", "--ensemble", "20", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "rc_samples_kt_g7_nk200.csv")
    assert header == ["trajectory_id", "r_c", "m_occupied", "n_points", "m_cells", "p_occ"]
    assert main(["dicke-measure", "--xi", "1", "--t-max", "100", "--ensemble", "5", "--out", str(tmp_path)]) == 0
    assert main(["dicke-classical", "--xi", "1", "--t-max", "50", "--out", str(tmp_path)]) == 0
    header, _ = read_csv(tmp_path / "dicke_section_xi1.csv")
    assert header == ["t", "P", "Q", "direction"]
    assert main(["kt-classical", "--gamma", "7", "--n-kicks", "50", "--lyapunov-gammas", "7",
                 "--samples", "100", "--steps", "100", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "kt_lyapunov.csv")
    assert header == ["gamma", "lambda_mean", "lambda_stderr"] and data[0, 1] > 0.3
