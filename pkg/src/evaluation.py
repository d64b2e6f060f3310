"""Compatibility AUC and fill-in-the-blank accuracy, with group breakdowns."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.data.corpus import Corpus, FITBQuestion
from src.errors import ContractError, GraphFilterError, ScoringError, UndefinedMetricError
from src.scorers.base import BaseScorer
from src.styles import StyleLabel

logger = logging.getLogger(__name__)

BREAKDOWN_KEYS = ("style", "length")
UNLABELED = "unlabeled"


@dataclass(frozen=True)
class ScoredSet:
    set_id: str
    score: float
    label: int
    style: Optional[StyleLabel] = None
    length: int = 0

    def __post_init__(self):
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ContractError(f"Set {self.set_id}: score must be finite and in [0, 1], got {self.score}")
        if self.label not in (0, 1):
            raise ContractError(f"Set {self.set_id}: label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class FITBOutcome:
    question_id: str
    chosen_index: int
    answer_index: int
    scores: tuple[float, ...]
    style: Optional[StyleLabel] = None
    length: int = 0

    @property
    def correct(self) -> bool:
        return self.chosen_index == self.answer_index


def auc(scored: Sequence[ScoredSet]) -> float:
    """Mann-Whitney AUC with half credit for ties, from exact integer counts."""
    scores = np.array([s.score for s in scored], dtype=np.float64)
    labels = np.array([s.label for s in scored], dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(f"AUC needs both classes, got {n_pos} positive / {n_neg} negative")

    _, group = np.unique(scores, return_inverse=True)
    pos = np.bincount(group[labels == 1], minlength=group.max() + 1).astype(np.int64)
    neg = np.bincount(group[labels == 0], minlength=group.max() + 1).astype(np.int64)
    neg_below = np.concatenate([[0], np.cumsum(neg)[:-1]])
    numerator = 2 * int(np.dot(pos, neg_below)) + int(np.dot(pos, neg))
    return numerator / (2 * n_pos * n_neg)


def score_corpus(corpus: Corpus, scorer: BaseScorer, split: Optional[str] = None) -> list[ScoredSet]:
    outfits = corpus.outfits_in(split)
    outputs = scorer.score_sets(corpus, [o.item_ids for o in outfits])
    return [
        ScoredSet(o.id, out.compatibility, o.label, o.style, o.length)
        for o, out in zip(outfits, outputs)
    ]


def fitb_outcomes(questions: Sequence[FITBQuestion], scorer: BaseScorer, corpus: Corpus) -> list[FITBOutcome]:
    """Score each question's four completed sets; argmax wins, ties to the lowest index."""
    outcomes = []
    for q in questions:
        try:
            outputs = scorer.score_sets(corpus, [q.given_items + (c,) for c in q.candidates])
        except GraphFilterError as e:
            raise ScoringError(f"Scoring failed for question {q.id}: {e}") from e
        scores = tuple(out.compatibility for out in outputs)
        outcomes.append(FITBOutcome(
            question_id=q.id,
            chosen_index=int(np.argmax(scores)),
            answer_index=q.answer_index,
            scores=scores,
            style=q.style,
            length=q.length,
        ))
    return outcomes


def fitb_accuracy(questions: Sequence[FITBQuestion], scorer: BaseScorer, corpus: Corpus) -> float:
    if not questions:
        raise UndefinedMetricError("FITB accuracy needs at least one question")
    outcomes = fitb_outcomes(questions, scorer, corpus)
    return sum(o.correct for o in outcomes) / len(outcomes)


def weighted_average(values: Sequence[float], weights: Sequence[float]) -> Optional[float]:
    pairs = [(v, w) for v, w in zip(values, weights) if v is not None and not pd.isna(v) and w > 0]
    if not pairs:
        return None
    total = sum(w for _, w in pairs)
    return sum(v * w for v, w in pairs) / total


def _group_key(style: Optional[StyleLabel], length: int, by: str) -> str:
    if by == "style":
        return UNLABELED if style is None else style.value
    return str(length)


@dataclass
class Breakdown:
    by: str
    table: pd.DataFrame
    weighted_auc: Optional[float]
    weighted_fitb: Optional[float]

    def to_dict(self) -> dict:
        rows = self.table.astype(object).where(self.table.notna(), None).to_dict(orient="records")
        return {
            "by": self.by,
            "groups": rows,
            "weighted_auc": self.weighted_auc,
            "weighted_fitb": self.weighted_fitb,
        }


def breakdown(scored: Sequence[ScoredSet], outcomes: Sequence[FITBOutcome], by: str) -> Breakdown:
    """Per-group AUC / FITB plus their group-size weighted averages."""
    if by not in BREAKDOWN_KEYS:
        raise ContractError(f"breakdown key must be one of {BREAKDOWN_KEYS}, got {by!r}")

    sets = pd.DataFrame(
        [{"group": _group_key(s.style, s.length, by), "index": k} for k, s in enumerate(scored)],
        columns=["group", "index"],
    )
    answers = pd.DataFrame(
        [{"group": _group_key(o.style, o.length, by), "correct": o.correct} for o in outcomes],
        columns=["group", "correct"],
    )
    groups = sorted(set(sets["group"]) | set(answers["group"]), key=_sort_key)

    rows = []
    for group in groups:
        members = [scored[int(k)] for k in sets.loc[sets["group"] == group, "index"]]
        group_auc = None
        if members:
            try:
                group_auc = auc(members)
            except UndefinedMetricError:
                logger.warning("Skipping AUC for %s=%s: only one class present", by, group)
        correct = answers.loc[answers["group"] == group, "correct"]
        rows.append({
            "group": group,
            "sets": len(members),
            "auc": group_auc,
            "questions": int(correct.size),
            "fitb": float(correct.mean()) if correct.size else None,
        })

    table = pd.DataFrame(rows, columns=["group", "sets", "auc", "questions", "fitb"])
    return Breakdown(
        by=by,
        table=table,
        weighted_auc=weighted_average(table["auc"].tolist(), table["sets"].tolist()),
        weighted_fitb=weighted_average(table["fitb"].tolist(), table["questions"].tolist()),
    )


def _sort_key(group: str):
    if group.isdigit():
        return (0, int(group), group)
    order = [label.value for label in StyleLabel] + [UNLABELED]
    return (1, order.index(group) if group in order else len(order), group)


@dataclass
class EvalReport:
    scorer: str
    split: Optional[str]
    sets: int
    questions: int
    auc: Optional[float]
    fitb: Optional[float]
    breakdowns: dict[str, Breakdown] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scorer": self.scorer,
            "split": self.split,
            "sets": self.sets,
            "questions": self.questions,
            "auc": self.auc,
            "fitb": self.fitb,
            "breakdowns": {k: v.to_dict() for k, v in self.breakdowns.items()},
        }


def evaluate(
    corpus: Corpus,
    scorer: BaseScorer,
    questions: Sequence[FITBQuestion],
    breakdowns: Sequence[str] = BREAKDOWN_KEYS,
    split: Optional[str] = "test",
) -> EvalReport:
    scored = score_corpus(corpus, scorer, split)
    try:
        overall_auc = auc(scored)
    except UndefinedMetricError as e:
        logger.warning("AUC undefined on split %s: %s", split, e)
        overall_auc = None
    outcomes = fitb_outcomes(questions, scorer, corpus)
    overall_fitb = sum(o.correct for o in outcomes) / len(outcomes) if outcomes else None
    report = EvalReport(
        scorer=scorer.name,
        split=split,
        sets=len(scored),
        questions=len(outcomes),
        auc=overall_auc,
        fitb=overall_fitb,
        breakdowns={by: breakdown(scored, outcomes, by) for by in breakdowns},
    )
    logger.info("Evaluated %d set(s), %d question(s): AUC=%s FITB=%s",
                report.sets, report.questions, report.auc, report.fitb)
    return report
