from dataclasses import replace

import numpy as np
import pytest

from src.collocate import CollocationRequest, best_candidate, generate_diverse, generate_outfit
from src.errors import CollocationError, ContractError
from src.graphfilter.network import NetworkOutput
from src.scorers import BaseScorer
from src.styles import StyleLabel

SAME, TRIADIC = StyleLabel.SAME, StyleLabel.TRIADIC


class RuleScorer(BaseScorer):
    """Scores a set with ``fn(item_ids) -> (score, style)``."""

    name = "rule"

    def __init__(self, fn):
        self.fn = fn
        self.scored = 0

    def score_embeddings(self, sets):
        raise NotImplementedError

    def score_sets(self, corpus, item_lists):
        outputs = []
        for ids in item_lists:
            score, style = self.fn(tuple(ids))
            outputs.append(NetworkOutput(score, np.eye(6)[style.index]))
        self.scored += len(item_lists)
        return outputs


def _style_of(item_id):
    return SAME if item_id[-1] in "12" else TRIADIC


def growing(ids):
    """Bigger sets score higher; the style follows the last item."""
    return min(0.99, 0.6 + 0.1 * len(ids)), _style_of(ids[-1])


def shrinking(ids):
    return 1.0 - 0.1 * len(ids), SAME


@pytest.fixture
def request_top1(category_corpus):
    return CollocationRequest.from_corpus(category_corpus, "top1", [SAME, TRIADIC])


def test_request_from_corpus(request_top1):
    assert request_top1.type_order == ("bottom", "shoes")
    assert request_top1.pool(SAME, "bottom") == ("bottom1", "bottom2", "bottom3", "bottom4")
    assert request_top1.threshold == 0.5


def test_request_validation(category_corpus):
    with pytest.raises(ContractError):
        CollocationRequest.from_corpus(category_corpus, "top1", [SAME], type_order=["top", "shoes"])
    with pytest.raises(ContractError):
        CollocationRequest.from_corpus(category_corpus, "ghost", [SAME])
    with pytest.raises(ContractError):
        CollocationRequest.from_corpus(category_corpus, "top1", [])


def test_monotone_scorer_fills_every_category(request_top1, category_corpus):
    result = generate_outfit(request_top1, SAME, RuleScorer(growing), category_corpus)
    # bottom1 and bottom2 tie; the lower id wins.
    assert result.outfit.item_ids == ("top1", "bottom1", "shoes1")
    assert result.outfit.id == "top1-same"
    scores = [a["score"] for a in result.acceptances]
    assert scores == sorted(scores)
    assert result.evaluations == 8


def test_dropping_scorer_keeps_first_item_only(request_top1, category_corpus):
    result = generate_outfit(request_top1, SAME, RuleScorer(shrinking), category_corpus)
    assert result.outfit.item_ids == ("top1", "bottom1")
    assert [a["category"] for a in result.acceptances] == ["bottom"]


def test_ties_with_current_score_accepted_by_default(request_top1, category_corpus):
    flat = RuleScorer(lambda ids: (0.8, SAME))
    assert len(generate_outfit(request_top1, SAME, flat, category_corpus).outfit.item_ids) == 3
    strict = generate_outfit(request_top1, SAME, flat, category_corpus, accept_ties=False)
    assert len(strict.outfit.item_ids) == 2


def test_threshold_and_style_filters(request_top1, category_corpus):
    low = RuleScorer(lambda ids: (0.5, SAME))
    assert generate_outfit(request_top1, SAME, low, category_corpus).outfit.item_ids == ("top1",)
    wrong_style = RuleScorer(lambda ids: (0.9, TRIADIC))
    assert generate_outfit(request_top1, SAME, wrong_style, category_corpus).outfit.item_ids == ("top1",)


@pytest.mark.parametrize("threshold,size", [(0.85, 1), (0.75, 3)])
def test_request_threshold_governs_selection(request_top1, category_corpus, threshold, size):
    flat = RuleScorer(lambda ids: (0.8, SAME))
    req = replace(request_top1, threshold=threshold)
    assert len(generate_outfit(req, SAME, flat, category_corpus).outfit.item_ids) == size
    assert len(generate_diverse(req, flat, category_corpus)[SAME].outfit.item_ids) == size


def test_empty_pool_skips_category(category_corpus):
    req = CollocationRequest(
        query=category_corpus.items["top1"],
        styles=(SAME,),
        type_order=("bottom", "shoes"),
        pools={(None, "bottom"): (), (None, "shoes"): ("shoes2", "shoes1")},
    )
    result = generate_outfit(req, SAME, RuleScorer(growing), category_corpus)
    assert result.outfit.item_ids == ("top1", "shoes1")
    assert result.evaluations == 2


def test_style_specific_pool_and_category_filter(category_corpus):
    req = CollocationRequest(
        query=category_corpus.items["top1"],
        styles=(SAME,),
        type_order=("bottom",),
        pools={(None, "bottom"): ("bottom1",), (SAME, "bottom"): ("shoes2", "bottom2")},
    )
    assert req.pool(SAME, "bottom") == ("shoes2", "bottom2")
    assert req.pool(TRIADIC, "bottom") == ("bottom1",)
    result = generate_outfit(req, SAME, RuleScorer(growing), category_corpus)
    assert result.outfit.item_ids == ("top1", "bottom2")


def test_work_bound(request_top1, category_corpus):
    scorer = RuleScorer(growing)
    result = generate_outfit(request_top1, TRIADIC, scorer, category_corpus)
    pool_total = sum(len(request_top1.pool(TRIADIC, c)) for c in request_top1.type_order)
    assert scorer.scored == result.evaluations <= pool_total


def test_best_candidate(category_corpus):
    scorer = RuleScorer(growing)
    assert best_candidate(["top1"], ["bottom4", "bottom3"], scorer, category_corpus, TRIADIC, 0.5) == (
        "bottom3", pytest.approx(0.8),
    )
    assert best_candidate(["top1"], ["top1"], scorer, category_corpus, SAME, 0.5) is None
    with pytest.raises(ContractError):
        best_candidate([], ["bottom1"], scorer, category_corpus, SAME, 0.5)


@pytest.mark.parametrize("threads", [1, 2])
def test_diverse_outfits(request_top1, category_corpus, threads):
    results = generate_diverse(request_top1, RuleScorer(growing), category_corpus, threads=threads)
    assert results[SAME].outfit.item_ids == ("top1", "bottom1", "shoes1")
    assert results[TRIADIC].outfit.item_ids == ("top1", "bottom3", "shoes3")
    assert set(results[SAME].outfit.item_ids[1:]).isdisjoint(results[TRIADIC].outfit.item_ids[1:])


def test_diverse_reports_failures_with_partial_results(category_corpus):
    def fragile(ids):
        if "shoes3" in ids:
            raise ContractError("cannot score shoes3")
        return growing(ids)

    req = CollocationRequest(
        query=category_corpus.items["top1"],
        styles=(SAME, TRIADIC),
        type_order=("shoes",),
        pools={(None, "shoes"): ("shoes1", "shoes2"), (TRIADIC, "shoes"): ("shoes3",)},
    )
    with pytest.raises(CollocationError) as exc:
        generate_diverse(req, RuleScorer(fragile), category_corpus)
    assert set(exc.value.failures) == {TRIADIC}
    assert exc.value.partial[SAME].outfit.item_ids == ("top1", "shoes1")
