import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from typing import Optional

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

from src.collocate import CollocationRequest, generate_diverse
from src.config import RunConfig, load_config
from src.data.corpus import Corpus, load_corpus, save_corpus
from src.data.generators import add_negatives, build_fitb_questions, oversample_balance
from src.data.synth import SynthSpec, synth_corpus
from src.errors import DataError, GraphFilterError, NumericError, UsageError
from src.evaluation import BREAKDOWN_KEYS, evaluate, fitb_outcomes
from src.formatter import format_collocation, format_eval_report, format_gradcheck, format_style_counts
from src.graphfilter.network import init_params, load_network, save_network
from src.graphfilter.training import train_graph
from src.graphfilter.verification import CHECK_CONFIG, check_network_gradients
from src.history import save_curves
from src.metriclearn import EmbeddingModel, build_triplets, margin_accuracy, train_embedding
from src.scorers import BaseScorer, DistanceScorer, GraphScorer
from src.styles import StyleLabel, apply_style_labels, split_corpus_by_style
from src.utils.logger import setup_logging

GRADCHECK_TOLERANCE = 1e-4


def _write_json(path: str, data: dict) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _csv_list(text: Optional[str]) -> list[str]:
    return [part.strip() for part in (text or "").split(",") if part.strip()]


def _parse_styles(text: str) -> list[StyleLabel]:
    try:
        styles = [StyleLabel.parse(s) for s in _csv_list(text)]
    except DataError as e:
        raise UsageError(str(e))
    if not styles:
        raise UsageError("--styles needs at least one style")
    return styles


def _load_inputs(args, logger) -> Corpus:
    corpus = load_corpus(args.corpus)
    if getattr(args, "embedding", None):
        model = EmbeddingModel.load(args.embedding)
        corpus = model.transform_corpus(corpus)
        logger.info("Projected item features through embedding %s", args.embedding)
    return corpus


def _scorer(args, config: RunConfig) -> BaseScorer:
    if args.scorer == "distance":
        return DistanceScorer()
    if not args.checkpoint:
        raise UsageError("--checkpoint is required with --scorer graph")
    params, _ = load_network(args.checkpoint)
    return GraphScorer(params, threads=config.threads)


# ------------------------------------------------------------------ commands


def cmd_synth(args, config: RunConfig, logger) -> None:
    spec = SynthSpec.load(args.spec) if args.spec else SynthSpec()
    corpus = synth_corpus(spec, config.seed)
    save_corpus(corpus, args.out)


def cmd_label(args, config: RunConfig, logger) -> None:
    corpus = load_corpus(args.corpus)
    split = split_corpus_by_style(corpus, config.styles)
    logger.info("Style counts:\n%s", format_style_counts(split))
    if args.report:
        _write_json(args.report, split.to_dict())
    if args.out:
        save_corpus(apply_style_labels(corpus, config.styles), args.out)


def cmd_train_embed(args, config: RunConfig, logger) -> None:
    corpus = load_corpus(args.corpus)
    result = train_embedding(corpus, config.triplet, config.embedding_optimizer, seed=config.seed, split="train")
    if corpus.compatible("test"):
        held_out = build_triplets(corpus, config.triplet, config.seed, split="test")
        logger.info(
            "Held-out margin accuracy: %.4f over %d triplet(s)",
            margin_accuracy(result.model, held_out, corpus, config.triplet), len(held_out),
        )
    result.model.save(args.out, {"seed": config.seed, "triplet": asdict(config.triplet)})
    if args.curves:
        save_curves(result.curve, args.curves)


def cmd_train_graph(args, config: RunConfig, logger) -> None:
    corpus = _load_inputs(args, logger)
    if not [o for o in corpus.outfits_in("train") if o.label == 0]:
        corpus = add_negatives(corpus, config.seed, config.negatives)
    if config.oversample:
        corpus = oversample_balance(corpus, config.seed, split="train")

    network = replace(config.network, input_dim=corpus.dim)
    params = init_params(network, config.seed)
    result = train_graph(corpus, params, config.graph_optimizer, seed=config.seed, split="train")
    save_network(args.out, result.params, {"seed": config.seed, "optimizer": asdict(config.graph_optimizer)})
    if args.curves:
        save_curves(result.curve, args.curves)


def cmd_eval(args, config: RunConfig, logger) -> None:
    corpus = _load_inputs(args, logger)
    breakdowns = _csv_list(args.breakdown)
    unknown = sorted(set(breakdowns) - set(BREAKDOWN_KEYS))
    if unknown:
        raise UsageError(f"Unknown breakdown key(s): {', '.join(unknown)}")
    scorer = _scorer(args, config)
    questions = build_fitb_questions(corpus, args.split, config.seed)
    report = evaluate(corpus, scorer, questions, breakdowns, split=args.split)
    logger.info("Report:\n%s", format_eval_report(report))
    if args.out:
        _write_json(args.out, report.to_dict())


def cmd_fitb(args, config: RunConfig, logger) -> None:
    corpus = _load_inputs(args, logger)
    scorer = _scorer(args, config)
    questions = build_fitb_questions(corpus, args.split, config.seed)
    if not questions:
        raise DataError(f"No FITB questions could be built from split {args.split!r}")
    outcomes = fitb_outcomes(questions, scorer, corpus)
    accuracy = sum(o.correct for o in outcomes) / len(outcomes)
    logger.info("FITB accuracy: %.4f over %d question(s)", accuracy, len(outcomes))
    if args.out:
        _write_json(args.out, {
            "accuracy": accuracy,
            "questions": [
                {
                    "id": o.question_id,
                    "answer_index": o.answer_index,
                    "chosen_index": o.chosen_index,
                    "scores": list(o.scores),
                }
                for o in outcomes
            ],
        })


def cmd_generate(args, config: RunConfig, logger) -> None:
    corpus = _load_inputs(args, logger)
    scorer = _scorer(args, config)
    request = CollocationRequest.from_corpus(
        corpus,
        args.query,
        _parse_styles(args.styles),
        type_order=_csv_list(args.types) or None,
        threshold=config.collocation.threshold,
    )
    results = generate_diverse(
        request, scorer, corpus, accept_ties=config.collocation.accept_ties, threads=config.threads
    )
    logger.info("Outfits:\n%s", format_collocation(results))
    if args.out:
        _write_json(args.out, {
            "query": args.query,
            "threshold": request.threshold,
            "outfits": [r.to_dict() for r in results.values()],
        })


def cmd_gradcheck(args, config: RunConfig, logger) -> None:
    network = replace(CHECK_CONFIG, mode=config.network.mode, gamma=config.network.gamma)
    report = check_network_gradients(config.seed, network, max_coords=args.max_coords)
    logger.info("Report:\n%s", format_gradcheck(report, config.seed))
    if args.out:
        _write_json(args.out, {"seed": config.seed, **report.to_dict()})
    if not report.passed or report.max_rel_error >= GRADCHECK_TOLERANCE:
        raise NumericError(
            f"Gradient check failed: max relative error {report.max_rel_error:.3e}, "
            f"{len(report.failures)} failing coordinate(s)"
        )


COMMANDS = {
    "synth-data": cmd_synth,
    "label-styles": cmd_label,
    "train-embed": cmd_train_embed,
    "train-graph": cmd_train_graph,
    "eval": cmd_eval,
    "fitb": cmd_fitb,
    "generate": cmd_generate,
    "gradcheck": cmd_gradcheck,
}


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m src.main", description="Neural graph filtering for outfit compatibility")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Seed for every random draw of this run")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", parents=[common], help="Write a synthetic corpus")
    p.add_argument("--spec", help="Synth spec JSON (defaults when omitted)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("label-styles", parents=[common], help="Label compatible sets by color style")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="Write the corpus with style labels filled in")
    p.add_argument("--report", help="Write per-set labels and counts as JSON")

    p = sub.add_parser("train-embed", parents=[common], help="Train the triplet embedding")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--curves", help="Per-epoch loss CSV")

    p = sub.add_parser("train-graph", parents=[common], help="Train the graph network")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embedding", help="Embedding checkpoint applied to item features first")
    p.add_argument("--preset", choices=["full", "compact"])
    p.add_argument("--mode", help="hierarchical, edge-max, edge-avg or node")
    p.add_argument("--gamma", type=float)
    p.add_argument("--style-head", dest="style_head", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--negatives", choices=["all", "one"])
    p.add_argument("--oversample", action="store_true", default=None)
    p.add_argument("--curves", help="Per-epoch loss CSV")

    for name, help_text in (
        ("eval", "AUC and FITB report"),
        ("fitb", "Fill-in-the-blank accuracy"),
        ("generate", "Generate outfits of the requested styles"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--corpus", required=True)
        p.add_argument("--checkpoint", help="Graph network checkpoint")
        p.add_argument("--scorer", choices=["graph", "distance"], default="graph")
        p.add_argument("--embedding", help="Embedding checkpoint applied to item features first")
        p.add_argument("--out")
        if name == "generate":
            p.add_argument("--query", required=True)
            p.add_argument("--styles", required=True, help="Comma-separated style names")
            p.add_argument("--types", help="Comma-separated category order (default: all others, sorted)")
            p.add_argument("--threshold", type=float)
        else:
            p.add_argument("--split", default="test")
        if name == "eval":
            p.add_argument("--breakdown", default="style,length")

    p = sub.add_parser("gradcheck", parents=[common], help="Finite-difference check of the network gradients")
    p.add_argument("--mode", help="hierarchical, edge-max, edge-avg or node")
    p.add_argument("--gamma", type=float)
    p.add_argument("--max-coords", dest="max_coords", type=int, help="Coordinates sampled per parameter")
    p.add_argument("--out")
    return parser


def _overrides(args) -> dict:
    """CLI flags as a config fragment; unset flags are None and ignored."""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    optimizer = {"lr": get("lr"), "epochs": get("epochs"), "batch_size": get("batch_size")}
    overrides: dict = {
        "seed": get("seed"),
        "log_level": get("log_level"),
        "negatives": get("negatives"),
        "oversample": get("oversample"),
        "network": {"mode": get("mode"), "gamma": get("gamma"), "style_head": get("style_head")},
        "collocation": {"threshold": get("threshold")},
    }
    if args.command == "train-embed":
        overrides["triplet"] = {"alpha": get("alpha"), "margin": get("margin")}
        overrides["embedding_optimizer"] = optimizer
    elif args.command == "train-graph":
        overrides["graph_optimizer"] = optimizer
        if get("preset"):
            overrides["network"]["preset"] = get("preset")
    return overrides


def _prune(data: dict) -> dict:
    out = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = _prune(value)
            if value:
                out[key] = value
        elif value is not None:
            out[key] = value
    return out


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logger = setup_logging(args.log_level or os.environ.get("NGF_LOG_LEVEL", "INFO"))

    try:
        config = load_config(args.config, _prune(_overrides(args)))
        logger = setup_logging(config.log_level)
        logger.info("Running %s with seed %d", args.command, config.seed)
        logger.info("Resolved config: %s", json.dumps(config.to_dict(), sort_keys=True))
        COMMANDS[args.command](args, config, logger)
    except GraphFilterError as e:
        logger.error("%s failed: %s", args.command, e)
        print(
            json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": e.exit_code}),
            file=sys.stderr,
        )
        sys.exit(e.exit_code)

    logger.info("%s finished", args.command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
