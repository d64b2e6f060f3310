import json

import numpy as np
import pytest

from src.data.corpus import validate_corpus
from src.data.synth import SynthSpec, sample_colors, synth_corpus
from src.errors import UsageError
from src.styles import STYLE_ORDER, StyleLabel, label_style, split_corpus_by_style

SMALL = SynthSpec(dim=8, train_sets=20, test_sets=6)


def test_same_mix_labels_same():
    spec = SynthSpec(dim=8, train_sets=10, test_sets=0, style_mix={"same": 1.0})
    corpus = synth_corpus(spec, seed=3)
    positives = corpus.compatible()
    assert len(positives) == 10
    split = split_corpus_by_style(corpus)
    assert split.counts[StyleLabel.SAME] == 10
    assert all(o.style is StyleLabel.SAME for o in positives)


def test_recorded_styles_match_labeler():
    corpus = synth_corpus(SMALL, seed=0)
    split = split_corpus_by_style(corpus)
    for outfit in corpus.compatible():
        assert split.labels[outfit.id] is outfit.style


def test_negatives_violate_harmony():
    corpus = synth_corpus(SMALL, seed=1)
    negatives = [o for o in corpus.outfits if o.label == 0]
    assert len(negatives) == 26
    for outfit in negatives:
        colors = [corpus.items[i].color for i in outfit.item_ids]
        assert label_style(colors) is StyleLabel.OTHER
        assert outfit.id.endswith("-n0")


def test_corpus_is_valid_and_disjoint():
    corpus = synth_corpus(SMALL, seed=2)
    assert corpus.split_disjoint
    assert validate_corpus(corpus) == []
    assert len(corpus.compatible("test")) == 6
    for outfit in corpus.outfits:
        assert SMALL.min_items <= outfit.length <= SMALL.max_items


def test_deterministic():
    a = synth_corpus(SMALL, seed=7)
    b = synth_corpus(SMALL, seed=7)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert synth_corpus(SMALL, seed=8).to_dict() != a.to_dict()


def test_zero_sets_gives_empty_corpus():
    corpus = synth_corpus(SynthSpec(dim=4, train_sets=0, test_sets=0), seed=0)
    assert corpus.outfits == []
    assert corpus.items == {}


def test_extra_items_per_category():
    spec = SynthSpec(dim=4, train_sets=0, test_sets=0, extra_items_per_category=2)
    corpus = synth_corpus(spec, seed=0)
    assert {c: len(v) for c, v in corpus.items_by_category.items()} == {c: 2 for c in spec.categories}


@pytest.mark.parametrize("data", [
    {"min_items": 7},
    {"style_mix": {"punk": 1.0}},
    {"style_mix": {"same": 0.0}},
    {"style_mix": {}},
    {"categories": ["top"]},
    {"style_mix": {"triadic": 1.0}, "min_items": 2, "max_items": 2},
])
def test_infeasible_spec(data):
    with pytest.raises(UsageError, match="Infeasible"):
        SynthSpec.from_dict(data)


def test_unknown_key():
    with pytest.raises(UsageError, match="Unknown"):
        SynthSpec.from_dict({"sets": 3})


def test_load_spec(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"dim": 6, "train_sets": 2, "categories": ["top", "bottom", "shoes"]}))
    spec = SynthSpec.load(path)
    assert spec.categories == ("top", "bottom", "shoes")
    assert (spec.min_items, spec.max_items) == (3, 3)
    assert len(synth_corpus(spec, seed=0).compatible("train")) == 2
    with pytest.raises(UsageError):
        SynthSpec.load(tmp_path / "missing.json")


def test_explicit_set_size_is_not_clamped():
    with pytest.raises(UsageError, match="max_items"):
        SynthSpec.from_dict({"categories": ["top", "bottom", "shoes"], "max_items": 5})


@pytest.mark.parametrize("style", STYLE_ORDER)
def test_sample_colors_hits_target(style):
    rng = np.random.default_rng(0)
    for n in (3, 4):
        assert label_style(sample_colors(rng, style, n)) is style
