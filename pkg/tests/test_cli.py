import filecmp

import pytest

from ddlab.cli import main, read_manifest

OUTPUTS = ("curve", "components", "descents")


def same_outputs(a, b, parts=OUTPUTS):
    return all(filecmp.cmp(f"{a}_{p}.csv", f"{b}_{p}.csv", shallow=False) for p in parts)


def test_fig2_default_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fig2", "--out", str(a)]) == 0
    assert main(["fig2", "--out", str(b)]) == 0
    assert same_outputs(a, b)
    out = capsys.readouterr().out
    assert "uniform: 2 descents" in out and "aligned: 1 descents" in out
    header = (tmp_path / "a_components.csv").read_text().splitlines()[0]
    assert header == "policy,inv_lambda,V_1_bias,V_1_var,V_2_bias,V_2_var"


def test_fig2_rejects_zero_noise(tmp_path, capsys):
    assert main(["fig2", "--sigma", "0", "--out", str(tmp_path / "z")]) == 2
    assert "--sigma" in capsys.readouterr().err


def test_invalid_flags_exit_2(tmp_path):
    assert main(["sweep", "linear-analytic", "--n", "0", "--out", str(tmp_path / "x")]) == 2
    assert main(["sweep", "nosuch"]) == 2
    assert main(["fig2", "--grid-lo", "10", "--grid-hi", "1", "--out", str(tmp_path / "y")]) == 2


def test_manifest_replay(tmp_path):
    a = tmp_path / "a"
    assert main(["sweep", "linear-empirical", "--replicates", "3", "--ppd", "2",
                 "--parallelism", "1", "--out", str(a)]) == 0
    rec = read_manifest(f"{a}_manifest.txt")
    assert rec["replicates"] == "3" and rec["subject"] == "linear-empirical" and rec["seed"] == "0"
    b = tmp_path / "b"
    assert main(["--manifest", f"{a}_manifest.txt", "--parallelism", "4", "--out", str(b)]) == 0
    assert same_outputs(a, b)


def test_seed_environment_variable(tmp_path, monkeypatch):
    monkeypatch.setenv("DDLAB_SEED", "5")
    assert main(["sweep", "linear-empirical", "--replicates", "2", "--ppd", "1",
                 "--out", str(tmp_path / "s")]) == 0
    assert read_manifest(f"{tmp_path}/s_manifest.txt")["seed"] == "5"


def test_invalid_points_exit_3(tmp_path):
    code = main(["sweep", "nn", "--d", "4", "--n", "16", "--k", "8", "--stepsize", "0.3",
                 "--max-iterations", "200", "--test-samples", "500", "--seeds", "0",
                 "--grid-lo", "0.1", "--grid-hi", "1000", "--ppd", "1", "--out", str(tmp_path / "d")])
    assert code == 3
    assert "false" in (tmp_path / "d_curve.csv").read_text()


@pytest.mark.parametrize("suite", ["prop2", "ntk", "gradcheck"])
def test_verify_suites_pass(tmp_path, suite):
    assert main(["verify", suite, "--out", str(tmp_path / suite)]) == 0
    assert (tmp_path / f"{suite}_verify.csv").read_text().startswith("case,measured,threshold,passed")


def test_epoch_and_nn_subjects(tmp_path):
    assert main(["sweep", "epoch", "--t-max", "1000", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e_curve.csv").read_text().startswith("t,total,valid")
    args = ["--d", "4", "--n", "16", "--k", "8", "--max-iterations", "100", "--test-samples", "500",
            "--seeds", "0,1", "--ppd", "1"]
    assert main(["sweep", "nn", *args, "--parallelism", "1", "--out", str(tmp_path / "n1")]) == 0
    assert main(["sweep", "nn", *args, "--parallelism", "2", "--out", str(tmp_path / "n2")]) == 0
    assert same_outputs(tmp_path / "n1", tmp_path / "n2")
    header = (tmp_path / "n1_components.csv").read_text().splitlines()[0]
    assert header == "inv_lambda,seed_0,seed_1"
