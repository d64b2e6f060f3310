"""Style-conditioned outfit generation by greedy item selection.

Starting from a query item, each category in ``type_order`` is visited
once. The best candidate is the pool item whose tentative set scores above
the threshold, is classified as the target style, and scores highest (ties
to the lowest item id). It is kept when its score does not drop below the
current set score; otherwise the category is skipped for good.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from src.data.corpus import Corpus, ItemRecord, Outfit
from src.errors import CollocationError, ContractError, GraphFilterError
from src.scorers.base import BaseScorer
from src.styles import StyleLabel

logger = logging.getLogger(__name__)

PoolKey = tuple[Optional[StyleLabel], str]


@dataclass(frozen=True)
class CollocationRequest:
    query: ItemRecord
    styles: tuple[StyleLabel, ...]
    type_order: tuple[str, ...]
    pools: dict[PoolKey, tuple[str, ...]]
    threshold: float = 0.5

    def __post_init__(self):
        if self.query.category in self.type_order:
            raise ContractError(f"type_order must not contain the query's category {self.query.category!r}")
        if len(set(self.type_order)) != len(self.type_order):
            raise ContractError("type_order lists a category twice")
        if not self.styles:
            raise ContractError("A collocation request needs at least one style")

    def pool(self, style: StyleLabel, category: str) -> tuple[str, ...]:
        """Style-specific pool if one was given, else the shared one."""
        if (style, category) in self.pools:
            return self.pools[(style, category)]
        return self.pools.get((None, category), ())

    @classmethod
    def from_corpus(
        cls,
        corpus: Corpus,
        query_id: str,
        styles: Sequence[StyleLabel],
        type_order: Optional[Sequence[str]] = None,
        threshold: float = 0.5,
    ) -> "CollocationRequest":
        """Request whose shared pools hold every corpus item of each category."""
        if query_id not in corpus.items:
            raise ContractError(f"Unknown query item: {query_id}")
        query = corpus.items[query_id]
        if type_order is None:
            type_order = [c for c in sorted(corpus.items_by_category) if c != query.category]
        pools = {
            (None, category): tuple(i.id for i in corpus.items_by_category.get(category, []))
            for category in type_order
        }
        return cls(query, tuple(styles), tuple(type_order), pools, threshold)


@dataclass
class SelectionState:
    items: list[str]
    set_score: float = 0.0
    acceptances: list[dict] = field(default_factory=list)
    evaluations: int = 0


@dataclass
class CollocationResult:
    style: StyleLabel
    outfit: Outfit
    acceptances: list[dict]
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "style": self.style.value,
            "items": list(self.outfit.item_ids),
            "acceptances": self.acceptances,
            "evaluations": self.evaluations,
        }


def best_candidate(
    current_set: Sequence[str],
    pool: Sequence[str],
    scorer: BaseScorer,
    corpus: Corpus,
    style: StyleLabel,
    threshold: float,
) -> Optional[tuple[str, float]]:
    if not current_set:
        raise ContractError("best_candidate needs a non-empty current set")
    candidates = [c for c in pool if c not in current_set]
    if not candidates:
        return None
    outputs = scorer.score_sets(corpus, [list(current_set) + [c] for c in candidates])
    passing = [
        (out.compatibility, c)
        for c, out in zip(candidates, outputs)
        if out.compatibility > threshold and out.style is style
    ]
    if not passing:
        return None
    score, item = min(passing, key=lambda p: (-p[0], p[1]))
    return item, score


def generate_outfit(
    req: CollocationRequest,
    style: StyleLabel,
    scorer: BaseScorer,
    corpus: Corpus,
    accept_ties: bool = True,
) -> CollocationResult:
    state = SelectionState(items=[req.query.id])
    for category in req.type_order:
        pool = [c for c in req.pool(style, category) if corpus.items[c].category == category]
        state.evaluations += len([c for c in pool if c not in state.items])
        found = best_candidate(state.items, pool, scorer, corpus, style, req.threshold)
        if found is None:
            logger.debug("%s: no candidate for %s", style.value, category)
            continue
        item, score = found
        keeps = score >= state.set_score if accept_ties else score > state.set_score
        if not keeps:
            logger.debug("%s: %s would drop the score to %.4f, skipping %s", style.value, item, score, category)
            continue
        state.items.append(item)
        state.set_score = score
        state.acceptances.append({"category": category, "item": item, "score": score})

    outfit = Outfit(
        id=f"{req.query.id}-{style.value}",
        item_ids=tuple(state.items),
        label=1,
        style=style,
    )
    logger.info("Generated %s outfit of %d item(s) (score %.4f)", style.value, len(state.items), state.set_score)
    return CollocationResult(style, outfit, state.acceptances, state.evaluations)


def generate_diverse(
    req: CollocationRequest,
    scorer: BaseScorer,
    corpus: Corpus,
    accept_ties: bool = True,
    threads: int = 1,
) -> dict[StyleLabel, CollocationResult]:
    """One outfit per requested style; styles share no state."""

    def run(style: StyleLabel):
        try:
            return style, generate_outfit(req, style, scorer, corpus, accept_ties), None
        except GraphFilterError as e:
            return style, None, e

    if threads > 1 and len(req.styles) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(run, req.styles))
    else:
        runs = [run(style) for style in req.styles]

    results = {style: result for style, result, error in runs if error is None}
    failures = {style: str(error) for style, _, error in runs if error is not None}
    if failures:
        raise CollocationError(
            f"{len(failures)} of {len(req.styles)} style(s) failed: "
            + "; ".join(f"{s.value}: {m}" for s, m in failures.items()),
            failures=failures,
            partial=results,
        )
    return results
