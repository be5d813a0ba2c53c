"""The forge command line: every subcommand, exit codes 0/1/2."""

import itertools
import json

import numpy as np
import pytest

from prgforge.circuits import Gate, LtfCircuit, random_layered_circuit
from prgforge.cli import main
from prgforge.relunet import ReluNet


def run(*argv):
    return main(list(argv))


# -- compile-predicate ----------------------------------------------------------------


def test_compile_predicate_tsa(tmp_path, capsys):
    assert run("--out", str(tmp_path), "compile-predicate", "--tsa") == 0
    out = capsys.readouterr().out
    assert "L=5 S=82" in out and "tau=1" in out
    net = ReluNet.load(tmp_path / "predicate_net.json")
    assert (net.profile.L, net.profile.S) == (5, 82)


def test_compile_predicate_from_table(tmp_path):
    table = tmp_path / "parity2.json"
    table.write_text(json.dumps({"table": [1, -1, -1, 1]}))
    assert run("--out", str(tmp_path), "compile-predicate",
               "--table", str(table)) == 0
    net = ReluNet.load(tmp_path / "predicate_net.json")
    for x in itertools.product((-1, 1), repeat=2):
        got = net.eval_float_batch(np.array([x], dtype=np.float64))[0, 0]
        assert got == x[0] * x[1]


# -- compile-circuit ------------------------------------------------------------------


def test_compile_circuit_auto_margin(tmp_path, capsys):
    circ = random_layered_circuit(4, 2, 3, 5)
    cpath = tmp_path / "circ.json"
    circ.save(cpath)
    assert run("--out", str(tmp_path), "compile-circuit",
               "--circuit", str(cpath)) == 0
    assert "using xi_prime" in capsys.readouterr().out
    net = ReluNet.load(tmp_path / "circuit_net.json")
    X = np.array(list(itertools.product((-1, 1), repeat=4)), dtype=np.float64)
    got = net.eval_float_batch(X)[:, 0]
    want = circ.evaluate_batch(X.astype(np.int8)).astype(np.float64)
    assert np.array_equal(got, want)


def test_compile_circuit_zero_margin_is_user_error(tmp_path, capsys):
    circ = LtfCircuit(2, [Gate((0, 1), (1, 1), 0)])
    cpath = tmp_path / "zero.json"
    circ.save(cpath)
    assert run("--out", str(tmp_path), "compile-circuit",
               "--circuit", str(cpath)) == 1
    assert "error:" in capsys.readouterr().err


# -- prg ------------------------------------------------------------------------------


def test_prg_sample_and_eval(tmp_path, capsys):
    assert run("--out", str(tmp_path), "--seed", "3", "prg", "sample",
               "--m", "12", "--d", "20") == 0
    graph = tmp_path / "hypergraph.json"
    assert graph.exists()
    assert run("--out", str(tmp_path), "--seed", "4", "prg", "eval",
               "--graph", str(graph), "--n", "32") == 0
    rows = [r for r in (tmp_path / "prg_outputs.csv").read_text().splitlines()
            if r and not r.startswith(("#", "x"))]
    assert len(rows) == 32
    assert {float(v) for r in rows for v in r.split(",")} <= {-1.0, 1.0}


def test_prg_eval_json_format_and_missing_args(tmp_path, capsys):
    run("--out", str(tmp_path), "prg", "sample", "--m", "10", "--d", "12")
    graph = tmp_path / "hypergraph.json"
    assert run("--out", str(tmp_path), "--format", "json", "prg", "eval",
               "--graph", str(graph), "--n", "8") == 0
    doc = json.loads((tmp_path / "prg_outputs.json").read_text())
    assert doc["schema"] == "samples/1"
    assert len(doc["data"]) == 8 and len(doc["data"][0]) == 12
    assert run("--out", str(tmp_path), "prg", "eval",
               "--graph", str(graph)) == 1
    assert "error:" in capsys.readouterr().err


# -- gen ------------------------------------------------------------------------------


def test_gen_build_and_sample(tmp_path, capsys):
    assert run("--out", str(tmp_path), "--seed", "2", "gen", "build",
               "--m", "10", "--epsilon", "1/4", "--dims", "4") == 0
    out = capsys.readouterr().out
    assert "claim L:" in out and "VIOLATED" not in out
    gen_dir = tmp_path / "generator"
    assert (gen_dir / "generator.json").exists()
    assert run("--out", str(tmp_path), "--seed", "5", "gen", "sample",
               "--gen", str(gen_dir), "--n", "16") == 0
    rows = [r for r in (tmp_path / "samples.csv").read_text().splitlines()
            if r and not r.startswith(("#", "x"))]
    assert len(rows) == 16
    vals = {float(v) for r in rows for v in r.split(",")}
    assert vals <= {0.0, 0.25, 0.5, 0.75}


def test_gen_build_bad_epsilon_is_user_error(tmp_path, capsys):
    assert run("--out", str(tmp_path), "gen", "build",
               "--epsilon", "abc") == 1
    assert "rational" in capsys.readouterr().err


# -- certify --------------------------------------------------------------------------


def test_certify_pass_and_refuse(tmp_path, capsys):
    assert run("--out", str(tmp_path), "--seed", "12", "certify",
               "--dims", "6,8") == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["N"] >= 1 and cert["beta"] > 0
    assert "certificate: N=" in capsys.readouterr().out
    assert run("--out", str(tmp_path), "--seed", "2", "certify",
               "--dims", "16,20") == 1
    assert "refused:" in capsys.readouterr().err


# -- attack ---------------------------------------------------------------------------


def test_attack_scan(tmp_path, capsys):
    run("--out", str(tmp_path), "--seed", "1", "prg", "sample",
        "--m", "10", "--d", "16")
    graph = tmp_path / "hypergraph.json"
    assert run("--out", str(tmp_path), "--seed", "9", "attack",
               "--method", "scan", "--graph", str(graph), "--n", "4000") == 0
    doc = json.loads((tmp_path / "attack_scan.json").read_text())
    assert doc["method"] == "threshold-scan"
    assert doc["details"]["statistic"] == "coordinate-sum"
    assert "scan advantage" in capsys.readouterr().out


def test_attack_mlp_short_run(tmp_path, capsys):
    run("--out", str(tmp_path), "--seed", "1", "prg", "sample",
        "--m", "10", "--d", "16")
    graph = tmp_path / "hypergraph.json"
    assert run("--out", str(tmp_path), "--seed", "4", "attack",
               "--method", "mlp", "--graph", str(graph),
               "--depth", "1", "--steps", "150", "--n", "2000") == 0
    doc = json.loads((tmp_path / "attack_mlp_depth1.json").read_text())
    assert doc["method"] == "mlp-depth-1"
    lines = (tmp_path / "loss_depth1.csv").read_text().splitlines()
    assert lines[0] == "step,test_loss,accuracy"
    assert lines[1].startswith("150,")


# -- hardness -------------------------------------------------------------------------


def test_hardness_check(tmp_path, capsys):
    assert run("--out", str(tmp_path), "--seed", "6", "hardness", "check",
               "--m", "6", "--d", "10") == 0
    doc = json.loads((tmp_path / "hardness.json").read_text())
    assert doc["holds"] is True
    assert "holds=True" in capsys.readouterr().out


# -- run ------------------------------------------------------------------------------


def test_run_dry_and_full(tmp_path, capsys):
    cfg = {"seed": 12, "prg": {"m": 10, "d": 24},
           "certify": {"dims": [6, 8]}}
    cpath = tmp_path / "cfg.json"
    cpath.write_text(json.dumps(cfg))
    assert run("run", "--config", str(cpath), "--dry-run") == 0
    out = capsys.readouterr().out
    assert "plan:" in out and "certify" in out
    assert run("--out", str(tmp_path / "art"), "run",
               "--config", str(cpath)) == 0
    assert (tmp_path / "art" / "manifest.json").exists()


def test_run_invalid_config(tmp_path, capsys):
    cpath = tmp_path / "bad.json"
    cpath.write_text(json.dumps({"seed": 1, "bogus": True}))
    assert run("run", "--config", str(cpath)) == 1
    assert "config error" in capsys.readouterr().err


# -- exit code plumbing ---------------------------------------------------------------


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        run("no-such-command")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code == 1


def test_threads_flag(tmp_path, capsys):
    assert run("--threads", "0", "--out", str(tmp_path), "prg", "sample",
               "--m", "6", "--d", "8") == 1
    assert run("--threads", "2", "--out", str(tmp_path), "prg", "sample",
               "--m", "6", "--d", "8") == 0


def test_unreadable_input_files_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert run("compile-circuit", "--circuit", str(missing)) == 1
    assert "error:" in capsys.readouterr().err

    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert run("attack", "--method", "scan", "--graph", str(garbled)) == 1
    assert "error:" in capsys.readouterr().err


def test_internal_errors_exit_2(tmp_path, capsys, monkeypatch):
    import prgforge.prg

    def boom(*a, **k):
        raise RuntimeError("kernel exploded")

    monkeypatch.setattr(prgforge.prg, "sample_hypergraph", boom)
    assert run("--out", str(tmp_path), "prg", "sample",
               "--m", "6", "--d", "8") == 2
    assert "Traceback" in capsys.readouterr().err
