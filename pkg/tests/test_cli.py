import json
import math

import pytest

from bootperc import counting
from bootperc.cli import main
from bootperc.engine import read_graph


def test_thresholds_eval_json(capsys):
    assert main(["thresholds", "eval", "critical_alpha", "--r", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload == {"name": "critical_alpha", "r": 2, "value": 0.25}


def test_thresholds_eval_theta(capsys):
    assert (
        main(
            ["thresholds", "eval", "theta", "--r", "2", "--alpha", "1.0", "--n", "100"]
        )
        == 0
    )
    payload = json.loads(capsys.readouterr().out)
    assert payload["value"] == pytest.approx(
        (1.0 / (100 * math.log(100))) ** 0.5, rel=1e-15
    )


def test_thresholds_eval_unknown_name(capsys):
    assert main(["thresholds", "eval", "nonsense", "--r", "2"]) == 2
    assert "unknown quantity" in capsys.readouterr().err


def test_thresholds_eval_missing_argument(capsys):
    assert main(["thresholds", "eval", "theta", "--r", "2"]) == 2
    assert "requires --alpha" in capsys.readouterr().err


def test_thresholds_verify_fast_clean(capsys):
    assert main(["thresholds", "verify", "--fast", "--r", "2", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert all(claim["violations"] == [] for claim in report["claims"])


def test_counts_table_round_trip(tmp_path):
    out = str(tmp_path / "t.csv")
    assert main(["counts", "table", "--r", "2", "--k-max", "6", "--out", out]) == 0
    with open(out) as fp:
        table = counting.table_from_csv(fp)
    want = counting.build_count_table(2, 6)
    assert table.entries == want.entries


def test_counts_normalized_record(capsys):
    assert main(["counts", "normalized", "--r", "2", "--k", "6", "--i", "2"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["kind"] == "sigma" and rec["k"] == 6 and rec["i"] == 2


def test_bp_survive_single_json(capsys):
    assert (
        main(
            [
                "bp", "survive", "--r", "2", "--eps", "0.2",
                "--trials", "400", "--seed", "1",
            ]
        )
        == 0
    )
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"r", "eps", "trials", "p_hat", "stderr", "asymptotic"}
    assert payload["trials"] == 400


def test_bp_survive_sweep_csv(capsys):
    assert (
        main(
            [
                "bp", "survive", "--r", "2", "--eps", "0.1", "0.2",
                "--trials", "200", "--seed", "1",
            ]
        )
        == 0
    )
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "eps,p_hat,stderr,asymptotic"
    assert len(lines) == 3


def test_bp_hit_exact_and_mc(capsys):
    assert (
        main(
            [
                "bp", "hit", "--r", "2", "--eps", "0.1", "--k", "4", "--i", "2",
                "--mc", "--trials", "3000", "--seed", "7",
            ]
        )
        == 0
    )
    payload = json.loads(capsys.readouterr().out)
    se = max(payload["stderr"], math.sqrt(payload["exact"] / 3000))
    assert abs(payload["p_hat"] - payload["exact"]) < 4 * se


def test_spectral_lambda_methods_agree(capsys):
    assert main(["spectral", "lambda", "--r", "2", "--ell", "5"]) == 0
    psi = json.loads(capsys.readouterr().out)
    assert (
        main(["spectral", "lambda", "--r", "2", "--ell", "5", "--method", "dlambda"])
        == 0
    )
    dla = json.loads(capsys.readouterr().out)
    assert set(psi) == {"r", "ell", "lambda", "iterations"}
    assert psi["lambda"] == pytest.approx(dla["lambda"], abs=1e-8)


def test_gnp_sample_round_trip(tmp_path):
    out = str(tmp_path / "g.txt")
    assert (
        main(["gnp", "sample", "--n", "20", "--p", "0.3", "--seed", "1", "--out", out])
        == 0
    )
    with open(out) as fp:
        g = read_graph(fp)
    assert g.n == 20
    assert g.m > 0


def test_gnp_pki_byte_identical(tmp_path, capsys):
    argv = [
        "gnp", "pki", "--n", "150", "--r", "2", "--alpha", "0.125",
        "--trials", "8", "--seeds-per-graph", "10", "--k-max", "6",
        "--seed", "3",
    ]
    f1, f2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(argv + ["--out", f1]) == 0
    assert main(argv + ["--out", f2]) == 0
    with open(f1, "rb") as fa, open(f2, "rb") as fb:
        assert fa.read() == fb.read()
    assert main(argv + ["--format", "json", "--out", f1]) == 0
    with open(f1) as fp:
        payload = json.load(fp)
    assert payload["n"] == 150 and payload["records"]


def test_gnp_terminal_csv(capsys):
    assert (
        main(
            [
                "gnp", "terminal", "--n", "40", "--r", "2", "--alpha", "1.0",
                "--trials", "6", "--seeds-per-graph", "2", "--seed", "6",
            ]
        )
        == 0
    )
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,i,frequency"
    total = sum(float(line.split(",")[2]) for line in lines[1:])
    assert total == pytest.approx(1.0, abs=1e-12)


def test_gnp_sweeps_small(capsys):
    assert (
        main(
            [
                "gnp", "seed-edge-sweep", "--n", "120", "--alphas", "0.02", "3.0",
                "--trials", "5", "--seed", "4",
            ]
        )
        == 0
    )
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "alpha,frequency,stderr,p,trials"
    freqs = [float(line.split(",")[1]) for line in lines[1:]]
    assert freqs == sorted(freqs)
    assert (
        main(
            [
                "gnp", "susceptibility-sweep", "--n", "120", "--alphas",
                "0.0125", "5.0", "--trials", "4", "--seed", "5",
            ]
        )
        == 0
    )
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("alpha,susceptible_freq")


def test_gnp_config_error_exit_2(capsys):
    assert (
        main(["gnp", "pki", "--n", "10", "--r", "2", "--alpha", "1", "--p", "0.5"])
        == 2
    )
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
