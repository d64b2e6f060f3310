from collections import Counter

import pytest

from src.data.corpus import Corpus, Outfit
from src.data.generators import (
    add_negatives,
    build_fitb_questions,
    generate_fitb,
    generate_negative_outfit,
    oversample_balance,
)
from src.errors import ContractError, DataError, SamplingError
from src.styles import StyleLabel
from tests.conftest import make_item


def _two_per_category():
    items = {}
    for category in ("top", "bottom", "shoes"):
        for k in (1, 2):
            item_id = f"{category}{k}"
            items[item_id] = make_item(item_id, category, [float(k), 0.0])
    outfits = [Outfit("a", ("top1", "bottom1", "shoes1"), 1, StyleLabel.SAME)]
    return Corpus(dim=2, items=items, outfits=outfits)


def test_negative_forced_by_singleton_pools():
    corpus = _two_per_category()
    negative = generate_negative_outfit(corpus.outfits[0], corpus, seed=0)
    assert negative.item_ids == ("top2", "bottom2", "shoes2")
    assert negative.label == 0
    assert negative.id == "a-neg"
    assert negative.style is StyleLabel.SAME


@pytest.mark.parametrize("seed", range(25))
def test_negative_never_equals_source(category_corpus, seed):
    positive = category_corpus.outfits[0]
    for mode in ("all", "one"):
        negative = generate_negative_outfit(positive, category_corpus, seed, mode)
        assert negative.item_ids != positive.item_ids
        for old, new in zip(positive.item_ids, negative.item_ids):
            assert category_corpus.items[old].category == category_corpus.items[new].category


def test_negative_modes(category_corpus):
    positive = category_corpus.outfits[0]
    full = generate_negative_outfit(positive, category_corpus, 3, "all")
    assert not set(full.item_ids) & set(positive.item_ids)
    single = generate_negative_outfit(positive, category_corpus, 3, "one")
    assert sum(a != b for a, b in zip(positive.item_ids, single.item_ids)) == 1
    with pytest.raises(ContractError):
        generate_negative_outfit(positive, category_corpus, 3, "some")


def test_negative_deterministic(category_corpus):
    positive = category_corpus.outfits[1]
    assert generate_negative_outfit(positive, category_corpus, 42) == generate_negative_outfit(
        positive, category_corpus, 42
    )


def test_negative_empty_pool():
    corpus = _two_per_category()
    items = {k: v for k, v in corpus.items.items() if k != "shoes2"}
    corpus = Corpus(dim=2, items=items, outfits=corpus.outfits)
    with pytest.raises(SamplingError) as exc:
        generate_negative_outfit(corpus.outfits[0], corpus, 0)
    assert exc.value.pool == "category:shoes"


def test_add_negatives(category_corpus):
    out = add_negatives(category_corpus, seed=1)
    assert len(out.outfits) == 4
    assert [o.id for o in out.outfits[2:]] == ["a-neg", "b-neg"]
    assert add_negatives(category_corpus, seed=1).outfits == out.outfits


def test_fitb_forced_distractors(category_corpus):
    outfit = category_corpus.outfits[0]
    question = generate_fitb(outfit, category_corpus, seed=5)
    category = category_corpus.items[question.answer].category
    assert question.answer in outfit.item_ids
    assert set(question.candidates) == {f"{category}{k}" for k in range(1, 5)}
    assert len(question.given_items) == 2
    assert question.answer not in question.given_items
    assert question.length == 3
    assert question.id == "a-fitb"


def test_fitb_answer_always_present(category_corpus):
    outfit = category_corpus.outfits[1]
    for seed in range(50):
        q = generate_fitb(outfit, category_corpus, seed)
        assert q.candidates[q.answer_index] == q.answer
        assert q.answer in outfit.item_ids
        assert len(set(q.candidates)) == 4


def test_fitb_answer_position_roughly_uniform(category_corpus):
    outfit = category_corpus.outfits[0]
    counts = Counter(generate_fitb(outfit, category_corpus, seed).answer_index for seed in range(2000))
    expected = 500
    chi2 = sum((counts[k] - expected) ** 2 / expected for k in range(4))
    # 3 degrees of freedom; 16.27 is the 0.1% critical value.
    assert chi2 < 16.27


def test_fitb_preconditions(category_corpus):
    with pytest.raises(ContractError):
        generate_fitb(Outfit("x", ("top1", "bottom1", "shoes1"), 0), category_corpus, 0)
    with pytest.raises(ContractError):
        generate_fitb(Outfit("x", ("top1", "bottom1"), 1), category_corpus, 0)
    with pytest.raises(SamplingError):
        generate_fitb(_two_per_category().outfits[0], _two_per_category(), 0)


def test_build_fitb_questions_skips_ineligible(tiny_corpus, category_corpus):
    assert [q.outfit_id for q in build_fitb_questions(tiny_corpus, "test", seed=0)] == ["o4", "o5"]
    corpus = category_corpus.with_outfits(
        category_corpus.outfits + [Outfit("short", ("top3", "bottom3"), 1)]
    )
    assert len(build_fitb_questions(corpus, seed=0)) == 2


def _styled(counts):
    items = {f"t{k}": make_item(f"t{k}", "top", [0.0]) for k in range(2)}
    items.update({f"b{k}": make_item(f"b{k}", "bottom", [1.0]) for k in range(2)})
    outfits = []
    for style, n in counts.items():
        for k in range(n):
            outfits.append(Outfit(f"{style.value}{k}", ("t0", "b0"), 1, style))
    outfits.append(Outfit("neg", ("t1", "b1"), 0))
    return Corpus(dim=1, items=items, outfits=outfits)


def test_oversample_duplicates_minority():
    corpus = _styled({StyleLabel.SAME: 4, StyleLabel.TRIADIC: 1})
    balanced = oversample_balance(corpus, seed=0)
    counts = Counter(o.style for o in balanced.compatible())
    assert counts == {StyleLabel.SAME: 4, StyleLabel.TRIADIC: 4}
    assert {o.id for o in balanced.outfits} >= {"triadic0-dup1", "triadic0-dup2", "triadic0-dup3"}
    assert sum(o.label == 0 for o in balanced.outfits) == 1


def test_oversample_count_identity():
    corpus = _styled({StyleLabel.SAME: 7, StyleLabel.ANALOGOUS: 3, StyleLabel.OTHER: 2})
    balanced = oversample_balance(corpus, seed=4)
    assert len(balanced.compatible()) == 7 * 3


def test_oversample_already_balanced():
    corpus = _styled({StyleLabel.SAME: 2, StyleLabel.TRIADIC: 2})
    assert oversample_balance(corpus, seed=0) is corpus


def test_oversample_needs_labels(category_corpus):
    with pytest.raises(DataError):
        oversample_balance(category_corpus, seed=0)


def test_split_disjoint_pools_respected(category_corpus):
    outfits = [
        Outfit("a", ("top1", "bottom1", "shoes1"), 1, split="train"),
        Outfit("t", ("top2", "bottom2", "shoes2"), 1, split="test"),
    ]
    corpus = Corpus(dim=3, items=category_corpus.items, outfits=outfits, split_disjoint=True)
    for seed in range(20):
        negative = generate_negative_outfit(outfits[0], corpus, seed)
        assert not set(negative.item_ids) & {"top2", "bottom2", "shoes2"}
    assert negative.split == "train"
