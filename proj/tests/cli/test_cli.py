"""End-to-end checks of the vpgraph command-line tool.

Usage: python3 test_cli.py /path/to/vpgraph
"""

import csv
import json
import subprocess
import sys
import tempfile
from pathlib import Path

BIN = str(Path(sys.argv[1]).resolve())
SUBCOMMANDS = ["synth", "featurize", "split", "train", "eval", "detect", "diag"]

RUN_TOML = """
[model]
hidden = 16
n_layers = 2
[schedule]
max_epochs = 6
e0 = 2
e_warm = 2
[eval]
replicates = 100
"""

SCENARIO_TOML = """
[scenario]
name = "room"
T = 298.15
P_tot = 101325.0
mode = "raoult"
x = 1.0
gamma = 2.0
"""


def run(*args, cwd, expect=0):
    p = subprocess.run([BIN, *args], cwd=cwd, capture_output=True, text=True)
    if p.returncode != expect:
        raise AssertionError(
            f"{' '.join(args)}: exit {p.returncode}, expected {expect}\nstdout:\n{p.stdout}\nstderr:\n{p.stderr}"
        )
    return p


def test_help(tmp):
    assert "Usage" in run("--help", cwd=tmp).stdout
    for sub in SUBCOMMANDS:
        out = run(sub, "--help", cwd=tmp).stdout
        assert sub in out, sub


def test_usage_errors(tmp):
    run(cwd=tmp, expect=2)
    run("frobnicate", cwd=tmp, expect=2)
    run("split", cwd=tmp, expect=2)  # --corpus and --out are required
    (tmp / "bad.toml").write_text("[model]\nwidth = 3\n")
    p = run("synth", "--out", "x.csv", "--config", "bad.toml", cwd=tmp, expect=2)
    assert "ConfigError" in p.stderr


def test_pipeline(tmp):
    run("synth", "--out", "data.csv", "--seed", "4", "--n", "120", cwd=tmp)
    run("featurize", "--input", "data.csv", "--out", "corpus.jsonl", cwd=tmp)

    p = run("train", "--corpus", "corpus.jsonl", "--split", "nope.csv", "--out", "r", cwd=tmp, expect=2)
    err = json.loads(p.stderr.split("error ", 1)[1])
    assert err["code"] == "MissingSplit"

    run("split", "--corpus", "corpus.jsonl", "--out", "split.csv", "--seed", "1", cwd=tmp)
    diag = json.loads((tmp / "split.diagnostics.json").read_text())
    assert diag["identity_overlap"] == 0 and diag["scaffold_overlap"] == 0

    (tmp / "run.toml").write_text(RUN_TOML)
    args = ["train", "--config", "run.toml", "--corpus", "corpus.jsonl", "--split", "split.csv", "--seed", "3"]
    run(*args, "--out", "run_a", cwd=tmp)
    run(*args, "--out", "run_b", cwd=tmp)
    ma = json.loads((tmp / "run_a" / "manifest.json").read_text())
    mb = json.loads((tmp / "run_b" / "manifest.json").read_text())
    for key in ["config_hash", "seed", "inputs", "versions"]:
        assert key in ma
    assert ma["outputs"] == mb["outputs"], "re-running with the same manifest must reproduce every output"
    assert len(ma["inputs"]) == 3

    run("eval", "--run", "run_a", "--out", "ev/metrics.json", "--replicates", "200", cwd=tmp)
    metrics = json.loads((tmp / "ev" / "metrics.json").read_text())
    assert "test" in metrics["vp"]
    with open(tmp / "ev" / "parity.csv") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0].keys()) == ["molecule_key", "temperature_K", "y_true", "y_pred", "fold", "max_sim"]
    with open(tmp / "run_a" / "predictions_vp.csv") as f:
        assert len(rows) == sum(1 for _ in csv.DictReader(f))
    bins = list(csv.DictReader(open(tmp / "ev" / "bins.csv")))
    assert sum(int(b["n"]) for b in bins) == metrics["vp"]["test"]["n"]

    (tmp / "scenario.toml").write_text(SCENARIO_TOML)
    run("detect", "--scenario", "scenario.toml", "--predictions", "run_a/compounds.csv", "--out", "rank.csv", cwd=tmp)
    ranked = list(csv.DictReader(open(tmp / "rank.csv")))
    ratios = [float(r["ratio"]) for r in ranked]
    assert ratios == sorted(ratios, reverse=True)

    (tmp / "bad_scenario.toml").write_text("[scenario]\nT = -3.0\n")
    run("detect", "--scenario", "bad_scenario.toml", "--predictions", "run_a/compounds.csv", "--out", "x.csv",
        cwd=tmp, expect=2)

    run("diag", "--corpus", "corpus.jsonl", "--split", "split.csv", "--out", "diag.json", cwd=tmp)
    d = json.loads((tmp / "diag.json").read_text())
    assert d["split"]["identity_overlap"] == 0

    run("train", "--config", "run.toml", "--corpus", "corpus.jsonl", "--split", "split.csv", "--seeds", "1,2",
        "--out", "multi", cwd=tmp)
    summary = json.loads((tmp / "multi" / "summary.json").read_text())
    assert summary["vp_test_mse"]["n"] == 2
    assert summary["std_denominator"] == "n-1"

    # an edited split is refused
    text = (tmp / "split.csv").read_text().replace(",test", ",train", 1)
    (tmp / "edited.csv").write_text(text)
    p = run("train", "--config", "run.toml", "--corpus", "corpus.jsonl", "--split", "edited.csv", "--out", "r",
            cwd=tmp, expect=1)
    assert "ChecksumMismatch" in p.stderr


def main():
    with tempfile.TemporaryDirectory() as d:
        tmp = Path(d)
        for test in [test_help, test_usage_errors, test_pipeline]:
            test(tmp)
            print(f"ok {test.__name__}")


if __name__ == "__main__":
    main()
