"""Negative sets, fill-in-the-blank questions and the oversampling balancer.

All generators are pure given their seed.
"""

import logging
from collections import defaultdict
from typing import Optional

import numpy as np

from src.data.corpus import Corpus, FITBQuestion, Outfit
from src.errors import ContractError, DataError, SamplingError

logger = logging.getLogger(__name__)

NEGATIVE_MODES = ("all", "one")
FITB_CHOICES = 4


def _seed_stream(seed: int):
    """Independent child seeds drawn from one master generator."""
    master = np.random.default_rng(seed)
    while True:
        yield int(master.integers(0, 2**32))


def _split_pool(corpus: Corpus, split: str) -> Optional[set[str]]:
    """Items allowed for a set in ``split``; None means every item."""
    if not corpus.split_disjoint:
        return None
    blocked = set()
    for outfit in corpus.outfits:
        if outfit.split != split:
            blocked.update(outfit.item_ids)
    return set(corpus.items) - blocked


def _category_pool(corpus: Corpus, category: str, exclude: set[str], allowed: Optional[set[str]]) -> list[str]:
    return [
        item.id
        for item in corpus.items_by_category.get(category, [])
        if item.id not in exclude and (allowed is None or item.id in allowed)
    ]


def generate_negative_outfit(
    positive: Outfit,
    corpus: Corpus,
    seed: int,
    mode: str = "all",
    set_id: Optional[str] = None,
) -> Outfit:
    """Swap items of ``positive`` for same-category items outside it.

    ``mode="all"`` replaces every item, ``mode="one"`` a single uniformly
    chosen one. The result keeps the source's style and split.
    """
    if mode not in NEGATIVE_MODES:
        raise ContractError(f"negative mode must be one of {NEGATIVE_MODES}, got {mode!r}")
    rng = np.random.default_rng(seed)
    members = set(positive.item_ids)
    allowed = _split_pool(corpus, positive.split)

    if mode == "all":
        positions = range(positive.length)
    else:
        positions = [int(rng.integers(positive.length))]

    replaced = list(positive.item_ids)
    for pos in positions:
        category = corpus.items[positive.item_ids[pos]].category
        pool = _category_pool(corpus, category, members, allowed)
        if not pool:
            raise SamplingError(
                f"No replacement for category {category!r} in set {positive.id}",
                pool=f"category:{category}",
            )
        replaced[pos] = pool[int(rng.integers(len(pool)))]

    return Outfit(
        id=set_id or f"{positive.id}-neg",
        item_ids=tuple(replaced),
        label=0,
        style=positive.style,
        split=positive.split,
    )


def add_negatives(corpus: Corpus, seed: int, mode: str = "all") -> Corpus:
    """Append one generated negative per compatible set."""
    seeds = _seed_stream(seed)
    negatives = [
        generate_negative_outfit(outfit, corpus, next(seeds), mode)
        for outfit in corpus.compatible()
    ]
    taken = {o.id for o in corpus.outfits}
    clashes = [n.id for n in negatives if n.id in taken]
    if clashes:
        raise DataError(f"Generated negative id(s) already present: {', '.join(clashes[:5])}")
    logger.info("Generated %d negative set(s) (mode=%s)", len(negatives), mode)
    return corpus.with_outfits(corpus.outfits + negatives)


def generate_fitb(
    outfit: Outfit,
    corpus: Corpus,
    seed: int,
    question_id: Optional[str] = None,
) -> FITBQuestion:
    """Hold out one item and offer it among three same-category distractors."""
    if outfit.label != 1:
        raise ContractError(f"FITB needs a compatible set, {outfit.id} has label {outfit.label}")
    if outfit.length < 3:
        raise ContractError(f"FITB needs a set of at least 3 items, {outfit.id} has {outfit.length}")
    rng = np.random.default_rng(seed)

    blank = int(rng.integers(outfit.length))
    answer = outfit.item_ids[blank]
    category = corpus.items[answer].category
    pool = _category_pool(corpus, category, set(outfit.item_ids), _split_pool(corpus, outfit.split))
    if len(pool) < FITB_CHOICES - 1:
        raise SamplingError(
            f"Set {outfit.id}: category {category!r} has {len(pool)} distractor(s), "
            f"need {FITB_CHOICES - 1}",
            pool=f"category:{category}",
        )
    picks = rng.choice(len(pool), size=FITB_CHOICES - 1, replace=False)
    distractors = [pool[int(i)] for i in picks]

    answer_index = int(rng.integers(FITB_CHOICES))
    candidates = distractors[:answer_index] + [answer] + distractors[answer_index:]
    given = tuple(i for k, i in enumerate(outfit.item_ids) if k != blank)
    return FITBQuestion(
        id=question_id or f"{outfit.id}-fitb",
        outfit_id=outfit.id,
        given_items=given,
        candidates=tuple(candidates),
        answer_index=answer_index,
        style=outfit.style,
    )


def build_fitb_questions(corpus: Corpus, split: Optional[str] = None, seed: int = 0) -> list[FITBQuestion]:
    """One question per eligible compatible set; ineligible sets are skipped."""
    seeds = _seed_stream(seed)
    questions = []
    skipped = 0
    for outfit in corpus.compatible(split):
        child = next(seeds)
        if outfit.length < 3:
            skipped += 1
            continue
        try:
            questions.append(generate_fitb(outfit, corpus, child))
        except SamplingError as e:
            logger.debug("Skipping FITB for %s: %s", outfit.id, e)
            skipped += 1
    if skipped:
        logger.warning("Skipped %d set(s) not eligible for FITB questions", skipped)
    return questions


def oversample_balance(corpus: Corpus, seed: int, split: Optional[str] = None) -> Corpus:
    """Duplicate minority-style compatible sets up to the majority count.

    Copies are drawn without replacement from a shuffled cycle of each
    style's sets, so every source set is copied at most once more than any
    other of its style.
    """
    by_style: dict = defaultdict(list)
    for outfit in corpus.compatible(split):
        if outfit.style is not None:
            by_style[outfit.style].append(outfit)
    if not by_style:
        raise DataError("Oversampling needs compatible sets with style labels")

    target = max(len(v) for v in by_style.values())
    rng = np.random.default_rng(seed)
    copies: list[Outfit] = []
    taken = {o.id for o in corpus.outfits}
    for style in sorted(by_style, key=lambda s: s.index):
        sources = by_style[style]
        need = target - len(sources)
        order = rng.permutation(len(sources))
        for k in range(need):
            source = sources[int(order[k % len(sources)])]
            copy_id = f"{source.id}-dup{k // len(sources) + 1}"
            while copy_id in taken:
                copy_id += "'"
            taken.add(copy_id)
            copies.append(Outfit(copy_id, source.item_ids, 1, source.style, source.split))
    if not copies:
        return corpus
    logger.info("Oversampled %d set(s) to %d per style", len(copies), target)
    return corpus.with_outfits(corpus.outfits + copies)
