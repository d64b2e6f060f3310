"""Color-theory style labeler.

Rules are tried in a fixed order and the first match wins:
Same -> Monochromatic -> Analogous -> Complementary -> Triadic -> Other.
Reordering them changes labels, so the order is part of the contract.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import TYPE_CHECKING, Optional, Sequence

from src.config import StyleRuleConfig
from src.errors import ContractError, DataError

if TYPE_CHECKING:
    from src.data.corpus import Corpus

logger = logging.getLogger(__name__)


class StyleLabel(str, Enum):
    ANALOGOUS = "analogous"
    COMPLEMENTARY = "complementary"
    TRIADIC = "triadic"
    SAME = "same"
    MONOCHROMATIC = "monochromatic"
    OTHER = "other"

    @classmethod
    def parse(cls, text: str) -> "StyleLabel":
        key = text.strip().lower()
        for label in cls:
            if label.value == key:
                return label
        raise DataError(f"Unknown style label: {text!r}")

    @property
    def index(self) -> int:
        return STYLE_ORDER.index(self)


# Class index order of the style head.
STYLE_ORDER: tuple[StyleLabel, ...] = tuple(StyleLabel)


@dataclass(frozen=True)
class ColorDescriptor:
    h: float
    s: float
    v: float

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0 or not 0.0 <= self.v <= 1.0:
            raise DataError(f"saturation/value must lie in [0, 1], got s={self.s}, v={self.v}")
        object.__setattr__(self, "h", float(self.h) % 360.0)

    def to_dict(self) -> dict:
        return {"h": self.h, "s": self.s, "v": self.v}


def hue_distance(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def _circular_gaps(hues: list[float]) -> list[float]:
    """Gaps between consecutive sorted hues, the last one wrapping around."""
    ordered = sorted(hues)
    gaps = [b - a for a, b in zip(ordered, ordered[1:])]
    gaps.append(ordered[0] + 360.0 - ordered[-1])
    return gaps


def covering_arc(hues: list[float]) -> float:
    """Width of the smallest arc holding every hue."""
    if len(hues) < 2:
        return 0.0
    return 360.0 - max(_circular_gaps(hues))


def hue_clusters(hues: list[float], tolerance: float) -> list[float]:
    """Circular single-linkage clustering; returns cluster centers.

    Consecutive hues closer than ``tolerance`` share a cluster. A circle with
    no gap above tolerance is one cluster.
    """
    ordered = sorted(hues)
    n = len(ordered)
    gaps = _circular_gaps(ordered)
    breaks = [i for i, gap in enumerate(gaps) if gap > tolerance]
    if not breaks:
        return [_arc_center(ordered)]
    centers = []
    # Each break i separates ordered[i] from ordered[(i + 1) % n].
    for k, brk in enumerate(breaks):
        start = (brk + 1) % n
        stop = breaks[(k + 1) % len(breaks)]
        members = []
        i = start
        while True:
            members.append(ordered[i])
            if i == stop:
                break
            i = (i + 1) % n
        centers.append(_arc_center(members))
    return centers


def _arc_center(members: list[float]) -> float:
    start = members[0]
    offsets = [(h - start) % 360.0 for h in members]
    return (start + sum(offsets) / len(offsets)) % 360.0


def _is_same(colors: Sequence[ColorDescriptor], cfg: StyleRuleConfig) -> bool:
    for a, b in combinations(colors, 2):
        if hue_distance(a.h, b.h) > cfg.same_hue:
            return False
        if abs(a.s - b.s) > cfg.same_sv or abs(a.v - b.v) > cfg.same_sv:
            return False
    return True


def _centers_spaced(centers: list[float], spacing: float, tolerance: float) -> bool:
    return all(
        abs(hue_distance(a, b) - spacing) <= tolerance for a, b in combinations(centers, 2)
    )


def label_style(colors: Sequence[ColorDescriptor], cfg: Optional[StyleRuleConfig] = None) -> StyleLabel:
    cfg = cfg or StyleRuleConfig()
    if len(colors) < 2:
        raise ContractError(f"label_style needs at least 2 colors, got {len(colors)}")

    if _is_same(colors, cfg):
        return StyleLabel.SAME
    if all(c.s <= cfg.mono_saturation for c in colors):
        return StyleLabel.MONOCHROMATIC

    chromatic = [c.h for c in colors if c.s > cfg.mono_saturation]
    if covering_arc(chromatic) <= cfg.analogous_arc:
        return StyleLabel.ANALOGOUS

    centers = hue_clusters(chromatic, cfg.cluster_tolerance)
    if len(centers) == 2 and _centers_spaced(centers, 180.0, cfg.cluster_tolerance):
        return StyleLabel.COMPLEMENTARY
    if len(centers) == 3 and _centers_spaced(centers, 120.0, cfg.cluster_tolerance):
        return StyleLabel.TRIADIC
    return StyleLabel.OTHER


@dataclass
class StyleSplit:
    counts: dict[StyleLabel, int]
    labels: dict[str, StyleLabel]

    def to_dict(self) -> dict:
        return {
            "counts": {label.value: self.counts[label] for label in STYLE_ORDER},
            "labels": {set_id: label.value for set_id, label in self.labels.items()},
        }


def split_corpus_by_style(corpus: "Corpus", cfg: Optional[StyleRuleConfig] = None) -> StyleSplit:
    """Label every compatible set and count sets per style."""
    cfg = cfg or StyleRuleConfig()
    counts = {label: 0 for label in STYLE_ORDER}
    labels: dict[str, StyleLabel] = {}
    for outfit in corpus.outfits:
        if outfit.label != 1:
            continue
        colors = []
        for item_id in outfit.item_ids:
            color = corpus.items[item_id].color
            if color is None:
                raise DataError(f"Item {item_id} in set {outfit.id} has no color")
            colors.append(color)
        label = label_style(colors, cfg)
        labels[outfit.id] = label
        counts[label] += 1
    logger.info(
        "Labeled %d compatible set(s): %s",
        len(labels), ", ".join(f"{k.value}={v}" for k, v in counts.items()),
    )
    return StyleSplit(counts=counts, labels=labels)


def apply_style_labels(corpus: "Corpus", cfg: Optional[StyleRuleConfig] = None) -> "Corpus":
    """Return a corpus whose compatible sets carry their labeled style."""
    split = split_corpus_by_style(corpus, cfg)
    outfits = [
        o.with_style(split.labels[o.id]) if o.id in split.labels else o
        for o in corpus.outfits
    ]
    return corpus.with_outfits(outfits)
