"""Synthetic corpora with known compatibility structure.

Two latent factors make a set compatible: color harmony (each compatible set
is drawn to satisfy one style rule) and a shared occasion. An item's
embedding is its category prototype plus its occasion prototype plus a fixed
projection of its color, plus noise. Incompatible sets mix occasions and
carry colors the labeler files under Other. Items are created per set, so
train and test never share an item.
"""

import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.config import StyleRuleConfig
from src.data.corpus import Corpus, ItemRecord, Outfit
from src.errors import DataError, UsageError
from src.styles import STYLE_ORDER, ColorDescriptor, StyleLabel, label_style

logger = logging.getLogger(__name__)

DEFAULT_CATEGORIES = ("top", "bottom", "shoes", "bag", "outerwear", "accessory")
# Draws per set before a style target is declared unreachable.
MAX_COLOR_ATTEMPTS = 200


@dataclass(frozen=True)
class SynthSpec:
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    dim: int = 32
    train_sets: int = 200
    test_sets: int = 50
    negatives_per_set: int = 1
    min_items: int = 3
    max_items: int = 5
    occasions: int = 4
    extra_items_per_category: int = 0
    noise: float = 0.1
    style_mix: dict = field(default_factory=lambda: {label.value: 1.0 for label in STYLE_ORDER})

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"Unknown key(s) in synth spec: {', '.join(unknown)}")
        kwargs = dict(data)
        if "categories" in kwargs:
            kwargs["categories"] = tuple(str(c) for c in kwargs["categories"])
            # Unset set sizes shrink to fit a shorter category list.
            for key in ("min_items", "max_items"):
                if key not in data:
                    kwargs[key] = min(getattr(cls, key), len(kwargs["categories"]))
        spec = cls(**kwargs)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SynthSpec":
        try:
            with open(path, "r") as f:
                return cls.from_dict(json.load(f))
        except FileNotFoundError:
            raise UsageError(f"Synth spec not found: {path}")
        except json.JSONDecodeError as e:
            raise UsageError(f"Synth spec {path} is not valid JSON: {e}")

    def weights(self) -> dict[StyleLabel, float]:
        return {StyleLabel.parse(k): float(v) for k, v in self.style_mix.items()}

    def validate(self) -> None:
        problems = []
        if len(set(self.categories)) != len(self.categories) or len(self.categories) < 2:
            problems.append("categories must be at least 2 distinct names")
        if self.dim < 1:
            problems.append(f"dim must be >= 1, got {self.dim}")
        if min(self.train_sets, self.test_sets, self.negatives_per_set, self.extra_items_per_category) < 0:
            problems.append("set and item counts must be >= 0")
        if not 2 <= self.min_items <= self.max_items <= len(self.categories):
            problems.append(
                f"need 2 <= min_items <= max_items <= {len(self.categories)}, "
                f"got {self.min_items}..{self.max_items}"
            )
        if self.occasions < 1:
            problems.append(f"occasions must be >= 1, got {self.occasions}")
        if self.noise < 0:
            problems.append(f"noise must be >= 0, got {self.noise}")
        try:
            weights = self.weights()
        except DataError as e:
            problems.append(str(e))
            weights = {}
        if weights:
            if any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
                problems.append("style_mix weights must be >= 0 with a positive total")
            if weights.get(StyleLabel.TRIADIC, 0) > 0 and self.max_items < 3:
                problems.append("triadic sets need max_items >= 3")
        elif not problems:
            problems.append("style_mix is empty")
        if problems:
            raise UsageError("Infeasible synth spec: " + "; ".join(problems))


def _clip(x: float) -> float:
    return min(1.0, max(0.0, x))


def _chromatic(rng: np.random.Generator, h: float) -> ColorDescriptor:
    return ColorDescriptor(h, rng.uniform(0.5, 0.95), rng.uniform(0.4, 0.95))


def _clustered(rng: np.random.Generator, n: int, clusters: int) -> list[ColorDescriptor]:
    """Hues tightly grouped around ``clusters`` evenly spaced centers, each used."""
    base = rng.uniform(0, 360)
    assignment = list(range(clusters)) + [int(c) for c in rng.integers(clusters, size=n - clusters)]
    rng.shuffle(assignment)
    spacing = 360.0 / clusters
    return [_chromatic(rng, base + spacing * c + rng.uniform(-4, 4)) for c in assignment]


def _draw_colors(rng: np.random.Generator, style: StyleLabel, n: int) -> list[ColorDescriptor]:
    if style is StyleLabel.SAME:
        h, s, v = rng.uniform(0, 360), rng.uniform(0.4, 0.9), rng.uniform(0.3, 0.9)
        return [
            ColorDescriptor(
                h + rng.uniform(-2, 2),
                _clip(s + rng.uniform(-0.04, 0.04)),
                _clip(v + rng.uniform(-0.04, 0.04)),
            )
            for _ in range(n)
        ]
    if style is StyleLabel.MONOCHROMATIC:
        return [ColorDescriptor(rng.uniform(0, 360), rng.uniform(0, 0.12), rng.uniform(0.05, 0.95)) for _ in range(n)]
    if style is StyleLabel.ANALOGOUS:
        base = rng.uniform(0, 360)
        return [_chromatic(rng, base + rng.uniform(0, 50)) for _ in range(n)]
    if style is StyleLabel.COMPLEMENTARY:
        return _clustered(rng, n, 2)
    if style is StyleLabel.TRIADIC:
        return _clustered(rng, n, 3)
    return [_chromatic(rng, rng.uniform(0, 360)) for _ in range(n)]


def sample_colors(
    rng: np.random.Generator,
    style: StyleLabel,
    n: int,
    cfg: Optional[StyleRuleConfig] = None,
) -> list[ColorDescriptor]:
    """Draw ``n`` colors the labeler files under ``style``."""
    for _ in range(MAX_COLOR_ATTEMPTS):
        colors = _draw_colors(rng, style, n)
        if label_style(colors, cfg) is style:
            return colors
    raise UsageError(f"Could not draw {n} colors labeled {style.value} in {MAX_COLOR_ATTEMPTS} attempts")


def _color_features(color: ColorDescriptor) -> np.ndarray:
    h = math.radians(color.h)
    s = color.s
    return np.array([
        s * math.cos(h), s * math.sin(h),
        s * math.cos(2 * h), s * math.sin(2 * h),
        s * math.cos(3 * h), s * math.sin(3 * h),
        s, color.v,
    ])


class _ItemFactory:
    def __init__(self, spec: SynthSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.category_protos = {c: rng.normal(size=spec.dim) for c in spec.categories}
        self.occasion_protos = rng.normal(size=(spec.occasions, spec.dim))
        self.color_map = rng.normal(size=(spec.dim, 8))
        self.items: dict[str, ItemRecord] = {}

    def make(self, category: str, occasion: int, color: ColorDescriptor) -> str:
        item_id = f"i{len(self.items):06d}"
        embedding = (
            self.category_protos[category]
            + self.occasion_protos[occasion]
            + self.color_map @ _color_features(color)
            + self.spec.noise * self.rng.normal(size=self.spec.dim)
        )
        self.items[item_id] = ItemRecord(item_id, category, embedding, color)
        return item_id


def synth_corpus(spec: SynthSpec, seed: int) -> Corpus:
    spec.validate()
    rng = np.random.default_rng(seed)
    factory = _ItemFactory(spec, rng)
    weights = spec.weights()
    styles = [s for s in STYLE_ORDER if weights.get(s, 0) > 0]
    probs = np.array([weights[s] for s in styles])
    probs = probs / probs.sum()

    outfits: list[Outfit] = []
    splits = ["train"] * spec.train_sets + ["test"] * spec.test_sets
    for index, split in enumerate(splits):
        style = styles[int(rng.choice(len(styles), p=probs))]
        low = max(spec.min_items, 3) if style is StyleLabel.TRIADIC else spec.min_items
        size = int(rng.integers(low, spec.max_items + 1))
        categories = [spec.categories[int(i)] for i in np.sort(rng.choice(len(spec.categories), size, replace=False))]

        occasion = int(rng.integers(spec.occasions))
        colors = sample_colors(rng, style, size)
        item_ids = tuple(factory.make(c, occasion, col) for c, col in zip(categories, colors))
        set_id = f"s{index:06d}"
        outfits.append(Outfit(set_id, item_ids, 1, style, split))

        for k in range(spec.negatives_per_set):
            bad_colors = sample_colors(rng, StyleLabel.OTHER, size)
            neg_ids = tuple(
                factory.make(c, int(rng.integers(spec.occasions)), col)
                for c, col in zip(categories, bad_colors)
            )
            outfits.append(Outfit(f"{set_id}-n{k}", neg_ids, 0, style, split))

    for category in spec.categories:
        for _ in range(spec.extra_items_per_category):
            factory.make(category, int(rng.integers(spec.occasions)), _chromatic(rng, rng.uniform(0, 360)))

    corpus = Corpus(dim=spec.dim, items=factory.items, outfits=outfits, split_disjoint=True)
    logger.info(
        "Synthesized %d item(s) and %d set(s) (%d train / %d test compatible)",
        len(corpus.items), len(outfits), spec.train_sets, spec.test_sets,
    )
    return corpus
