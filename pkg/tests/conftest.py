import logging
import os

import numpy as np
import pytest

from src.config import NetworkConfig
from src.data.corpus import Corpus, ItemRecord, Outfit, load_corpus
from src.graphfilter.network import init_params
from src.styles import ColorDescriptor

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
TINY_CORPUS = os.path.join(FIXTURES, "tiny_corpus.json")


@pytest.fixture
def tiny_corpus_path():
    return TINY_CORPUS


@pytest.fixture
def tiny_corpus():
    return load_corpus(TINY_CORPUS)


@pytest.fixture
def tiny_network_config():
    return NetworkConfig(
        input_dim=4,
        h_widths=((5, 5), (6, 6)),
        g_widths=((5, 5), (6, 6)),
        node_width=7,
        head_widths=(6, 5),
    )


@pytest.fixture
def tiny_params(tiny_network_config):
    return init_params(tiny_network_config, seed=3)


def make_item(item_id, category, embedding, hue=0.0, sat=0.9, val=0.7):
    return ItemRecord(item_id, category, np.asarray(embedding, dtype=float), ColorDescriptor(hue, sat, val))


@pytest.fixture
def category_corpus():
    """Three categories with four items each and two compatible sets."""
    rng = np.random.default_rng(11)
    items = {}
    for category in ("top", "bottom", "shoes"):
        for k in range(1, 5):
            item_id = f"{category}{k}"
            items[item_id] = make_item(item_id, category, rng.normal(size=3))
    outfits = [
        Outfit("a", ("top1", "bottom1", "shoes1"), 1),
        Outfit("b", ("top2", "bottom2", "shoes2"), 1),
    ]
    return Corpus(dim=3, items=items, outfits=outfits)


@pytest.fixture
def restore_logging():
    """Entry points reconfigure the root logger onto the captured stdout."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
