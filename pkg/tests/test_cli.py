"""CLI subcommands: exit codes, file interfaces, diagnostics."""

import json
import os

import pytest

from desocial.cli import main

TINY = """
dataset = {dataset}
T = 6
start_test_period = 4
end_test_period = 5
pool = MLP,SGC
strategy = personalized
n = 2
K_values = 2
gamma = 8
seeds = 0
epochs = 6
patience = 2
embed_dim = 8
output_dir = {out}
"""


def write_config(tmp_path, **kw):
    params = dict(
        dataset="synthetic:users=50,edges=1500,model=preferential,seed=9",
        out=str(tmp_path / "out"))
    params.update(kw)
    path = tmp_path / "exp.cfg"
    path.write_text(TINY.format(**params))
    return str(path)


def test_ingest_writes_edges_and_ids(tmp_path, capsys):
    edge_file = tmp_path / "raw.txt"
    edge_file.write_text("# comment\nalice bob 5\nbob carol 6\nbob bob 7\n")
    out = tmp_path / "ingested"
    assert main(["ingest", str(edge_file), "--out", str(out)]) == 0
    ids = (out / "ids.csv").read_text().splitlines()
    assert ids[0] == "token,id"
    assert ids[1:] == ["alice,0", "bob,1", "carol,2"]
    edges = [l for l in (out / "edges.csv").read_text().splitlines()
             if not l.startswith("#")]
    assert edges == ["0 1 5", "1 2 6"]
    assert "1 self-loops dropped" in capsys.readouterr().out


def test_ingest_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("not parseable at all\n")
    assert main(["ingest", str(bad), "--out", str(tmp_path / "x")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and err.count("\n") == 1


def test_synth_output_usable_by_run(tmp_path):
    synth_file = tmp_path / "synth.txt"
    assert main(["synth", "users=50,edges=1500,model=uniform,seed=2,T=6",
                 "--out", str(synth_file)]) == 0
    cfg = write_config(tmp_path, dataset=str(synth_file))
    assert main(["run", cfg]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["dataset"] == str(synth_file)


def test_run_and_determinism(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["run", cfg]) == 0
    blob1 = (tmp_path / "out" / "report.json").read_bytes()
    assert main(["run", cfg]) == 0
    blob2 = (tmp_path / "out" / "report.json").read_bytes()
    assert blob1 == blob2
    out = capsys.readouterr().out
    assert "Acc@2" in out


def test_run_env_seed_override(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    monkeypatch.setenv("DESOCIAL_SEED", "7")
    assert main(["run", cfg]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["seeds"] == [7]


def test_ablate_subcommand(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["ablate", cfg, "--variant", "no_consensus"]) == 0
    sub = tmp_path / "out" / "no_consensus"
    assert (sub / "report.json").exists()
    assert main(["ablate", cfg, "--variant", "single",
                 "--backbone", "SGC"]) == 0
    assert main(["ablate", cfg, "--variant", "nonsense"]) == 1


def test_gain_vs_n_subcommand(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["gain-vs-n", cfg, "--n", "1,3"]) == 0
    lines = (tmp_path / "out" / "gain_vs_n.csv").read_text().splitlines()
    assert lines[0] == "n,mean_gain"
    assert lines[1].startswith("1,0.000000")
    assert len(lines) == 3


def test_sweep_pool_subcommand(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["sweep-pool", cfg, "--subsets", "MLP;SGC;MLP,SGC"]) == 0
    lines = (tmp_path / "out" / "pool_sweep.csv").read_text().splitlines()
    assert lines[0].startswith("subset,acc@2,improved@2")
    assert len(lines) == 4


def test_bad_config_diagnostic(tmp_path, capsys):
    path = tmp_path / "broken.cfg"
    path.write_text("n = 0\n")
    assert main(["run", str(path)]) == 1
    assert "n must be >= 1" in capsys.readouterr().err
