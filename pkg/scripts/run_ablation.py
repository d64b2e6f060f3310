"""Aggregation-mode ablation on a fixed synthetic benchmark.

Synthesizes the seed-1 corpus (5000 train / 1000 test compatible sets plus
one incompatible set each), trains every aggregation mode with the same
seed, and writes one JSON report with test AUC and FITB per mode. Two runs
with the same arguments write identical reports.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

from src.config import AggregationMode, NetworkConfig, OptimizerConfig, ensure_valid
from src.data.generators import build_fitb_questions
from src.data.synth import SynthSpec, synth_corpus
from src.evaluation import evaluate
from src.graphfilter.network import init_params
from src.graphfilter.training import train_graph
from src.history import save_curves
from src.scorers import GraphScorer
from src.utils.logger import setup_logging

BENCHMARK_SEED = 1
BENCHMARK_SPEC = SynthSpec(train_sets=5000, test_sets=1000, extra_items_per_category=10)


def run_mode(corpus, questions, mode: AggregationMode, opt: OptimizerConfig, seed: int, threads: int) -> dict:
    network = NetworkConfig.preset("compact", input_dim=corpus.dim, mode=mode)
    result = train_graph(corpus, init_params(network, seed), opt, seed=seed, split="train")
    report = evaluate(corpus, GraphScorer(result.params, threads=threads), questions, breakdowns=("style",), split="test")
    return {"auc": report.auc, "fitb": report.fitb, "final_loss": result.curve[-1]["loss"] if result.curve else None,
            "curve": result.curve}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="Ablation report JSON")
    parser.add_argument("--curves-dir", dest="curves_dir", help="Write one curve CSV per mode here")
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=BENCHMARK_SEED)
    parser.add_argument("--train-sets", dest="train_sets", type=int, default=BENCHMARK_SPEC.train_sets)
    parser.add_argument("--test-sets", dest="test_sets", type=int, default=BENCHMARK_SPEC.test_sets)
    parser.add_argument("--modes", default=",".join(m.value for m in AggregationMode))
    args = parser.parse_args()

    logger = setup_logging()
    threads = int(os.environ.get("NGF_THREADS", "1") or 1)
    opt = OptimizerConfig(epochs=args.epochs)
    ensure_valid(opt)
    spec = replace(BENCHMARK_SPEC, train_sets=args.train_sets, test_sets=args.test_sets)
    corpus = synth_corpus(spec, args.seed)
    questions = build_fitb_questions(corpus, "test", args.seed)

    results = {}
    for name in args.modes.split(","):
        mode = AggregationMode.parse(name)
        logger.info("Training %s mode for %d epoch(s)", mode.value, args.epochs)
        outcome = run_mode(corpus, questions, mode, opt, args.seed, threads)
        if args.curves_dir:
            save_curves(outcome["curve"], os.path.join(args.curves_dir, f"{mode.value}.csv"))
        del outcome["curve"]
        results[mode.value] = outcome
        logger.info("%s: AUC=%s FITB=%s", mode.value, outcome["auc"], outcome["fitb"])

    with open(args.out, "w") as f:
        json.dump({"seed": args.seed, "epochs": args.epochs, "modes": results}, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("Ablation report written to %s", args.out)


if __name__ == "__main__":
    main()
