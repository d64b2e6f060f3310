import sys

import pytest

from scripts import run_ablation
from src.config import AggregationMode, OptimizerConfig
from src.data.generators import build_fitb_questions
from src.data.synth import SynthSpec, synth_corpus
from src.errors import UsageError

# Same-color sets against random-color sets, occasions mixed in negatives:
# no single item tells the two apart, only pairs do.
RELATIONAL_SPEC = SynthSpec(dim=8, train_sets=200, test_sets=100, style_mix={"same": 1.0})
OPT = OptimizerConfig(lr=0.005, epochs=40, batch_size=16)


@pytest.mark.parametrize("seed", [1, 2])
def test_hierarchical_beats_node_only(seed):
    corpus = synth_corpus(RELATIONAL_SPEC, seed)
    questions = build_fitb_questions(corpus, "test", seed)
    results = {
        mode: run_ablation.run_mode(corpus, questions, mode, OPT, seed, threads=1)
        for mode in (AggregationMode.HIERARCHICAL, AggregationMode.NODE)
    }
    assert results[AggregationMode.HIERARCHICAL]["auc"] > results[AggregationMode.NODE]["auc"]
    assert len(results[AggregationMode.NODE]["curve"]) == OPT.epochs


@pytest.mark.usefixtures("restore_logging")
def test_repeated_runs_write_identical_reports(tmp_path, monkeypatch):
    reports = []
    for run in range(2):
        out = tmp_path / f"ablation{run}.json"
        monkeypatch.setattr(sys, "argv", [
            "run_ablation.py", "--out", str(out), "--epochs", "2",
            "--train-sets", "30", "--test-sets", "10", "--modes", "hierarchical,node",
            "--curves-dir", str(tmp_path / f"curves{run}"),
        ])
        run_ablation.main()
        reports.append(out.read_bytes())
    assert reports[0] == reports[1]
    assert b'"node"' in reports[0] and b'"hierarchical"' in reports[0]
    assert (tmp_path / "curves0" / "node.csv").read_bytes() == (tmp_path / "curves1" / "node.csv").read_bytes()


@pytest.mark.usefixtures("restore_logging")
def test_invalid_epochs_rejected_before_training(tmp_path, monkeypatch, mocker):
    synth = mocker.patch.object(run_ablation, "synth_corpus")
    monkeypatch.setattr(sys, "argv", ["run_ablation.py", "--out", str(tmp_path / "a.json"), "--epochs", "-1"])
    with pytest.raises(UsageError, match="optimizer.epochs"):
        run_ablation.main()
    synth.assert_not_called()
    assert not (tmp_path / "a.json").exists()
