"""Corpus model and its JSON schema.

Schema: {"dim": int, "items": [{"id", "category", "embedding", "color"}],
"outfits": [{"id", "items", "label", "style", "split"?}], "split_disjoint": bool}.
"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from src.errors import DataError
from src.styles import ColorDescriptor, StyleLabel

logger = logging.getLogger(__name__)

SPLITS = ("train", "test")


@dataclass(eq=False)
class ItemRecord:
    id: str
    category: str
    embedding: np.ndarray
    color: Optional[ColorDescriptor] = None

    def __post_init__(self):
        self.embedding = np.array(self.embedding, dtype=np.float64)
        self.embedding.flags.writeable = False

    def __eq__(self, other) -> bool:
        if not isinstance(other, ItemRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.category == other.category
            and self.color == other.color
            and np.array_equal(self.embedding, other.embedding)
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "embedding": self.embedding.tolist(),
            "color": None if self.color is None else self.color.to_dict(),
        }


@dataclass(frozen=True)
class Outfit:
    id: str
    item_ids: tuple[str, ...]
    label: int
    style: Optional[StyleLabel] = None
    split: str = "train"

    @property
    def length(self) -> int:
        return len(self.item_ids)

    def with_style(self, style: Optional[StyleLabel]) -> "Outfit":
        return replace(self, style=style)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "items": list(self.item_ids),
            "label": self.label,
            "style": None if self.style is None else self.style.value,
            "split": self.split,
        }


@dataclass(frozen=True)
class FITBQuestion:
    id: str
    outfit_id: str
    given_items: tuple[str, ...]
    candidates: tuple[str, ...]
    answer_index: int
    style: Optional[StyleLabel] = None

    @property
    def answer(self) -> str:
        return self.candidates[self.answer_index]

    @property
    def length(self) -> int:
        return len(self.given_items) + 1


@dataclass(frozen=True)
class Corpus:
    dim: int
    items: dict[str, ItemRecord]
    outfits: list[Outfit]
    split_disjoint: bool = False

    @cached_property
    def items_by_category(self) -> dict[str, list[ItemRecord]]:
        """Items per category, sorted by id."""
        grouped: dict[str, list[ItemRecord]] = defaultdict(list)
        for item_id in sorted(self.items):
            item = self.items[item_id]
            grouped[item.category].append(item)
        return dict(grouped)

    @cached_property
    def cooccurrence(self) -> dict[str, frozenset[str]]:
        """For each item, the items it shares at least one compatible set with."""
        partners: dict[str, set[str]] = defaultdict(set)
        for outfit in self.outfits:
            if outfit.label != 1:
                continue
            for item_id in outfit.item_ids:
                partners[item_id].update(outfit.item_ids)
        return {k: frozenset(v - {k}) for k, v in partners.items()}

    def outfits_in(self, split: Optional[str] = None) -> list[Outfit]:
        return [o for o in self.outfits if split is None or o.split == split]

    def compatible(self, split: Optional[str] = None) -> list[Outfit]:
        return [o for o in self.outfits_in(split) if o.label == 1]

    def embeddings(self, item_ids: Sequence[str]) -> np.ndarray:
        return np.stack([self.items[i].embedding for i in item_ids])

    def with_outfits(self, outfits: Iterable[Outfit]) -> "Corpus":
        return Corpus(self.dim, self.items, list(outfits), self.split_disjoint)

    def with_items(self, items: dict[str, ItemRecord], dim: Optional[int] = None) -> "Corpus":
        return Corpus(self.dim if dim is None else dim, items, self.outfits, self.split_disjoint)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "items": [self.items[k].to_dict() for k in self.items],
            "outfits": [o.to_dict() for o in self.outfits],
            "split_disjoint": self.split_disjoint,
        }


def validate_corpus(corpus: Corpus) -> list[str]:
    """Every invariant violation in the corpus, each naming its set/item ids."""
    problems: list[str] = []
    for item_id, item in corpus.items.items():
        if item.embedding.shape != (corpus.dim,):
            problems.append(f"item {item_id}: embedding has shape {item.embedding.shape}, expected ({corpus.dim},)")
        elif not np.all(np.isfinite(item.embedding)):
            problems.append(f"item {item_id}: embedding is not finite")

    seen_ids: set[str] = set()
    split_items: dict[str, set[str]] = {s: set() for s in SPLITS}
    for outfit in corpus.outfits:
        where = f"set {outfit.id}"
        if outfit.id in seen_ids:
            problems.append(f"{where}: duplicate set id")
        seen_ids.add(outfit.id)
        if outfit.label not in (0, 1):
            problems.append(f"{where}: label must be 0 or 1, got {outfit.label}")
        if outfit.split not in SPLITS:
            problems.append(f"{where}: split must be one of {SPLITS}, got {outfit.split!r}")
        if len(outfit.item_ids) < 2:
            problems.append(f"{where}: needs at least 2 items")
        if len(set(outfit.item_ids)) != len(outfit.item_ids):
            problems.append(f"{where}: repeated item ids")
        missing = [i for i in outfit.item_ids if i not in corpus.items]
        for item_id in missing:
            problems.append(f"{where}: unknown item id {item_id}")
        if missing:
            continue
        split_items.setdefault(outfit.split, set()).update(outfit.item_ids)
        if outfit.label == 1:
            categories = [corpus.items[i].category for i in outfit.item_ids]
            repeated = sorted({c for c in categories if categories.count(c) > 1})
            if repeated:
                problems.append(f"{where}: compatible set repeats category {', '.join(repeated)}")

    if corpus.split_disjoint:
        shared = split_items["train"] & split_items["test"]
        if shared:
            problems.append(
                f"split_disjoint is set but {len(shared)} item(s) appear in both splits, "
                f"e.g. {sorted(shared)[0]}"
            )
    return problems


def _parse_item(raw: dict, problems: list[str]) -> Optional[ItemRecord]:
    try:
        color = raw.get("color")
        return ItemRecord(
            id=str(raw["id"]),
            category=str(raw["category"]),
            embedding=[float(x) for x in raw["embedding"]],
            color=None if color is None else ColorDescriptor(
                float(color["h"]), float(color["s"]), float(color["v"])
            ),
        )
    except (KeyError, TypeError, ValueError, DataError) as e:
        problems.append(f"item {raw.get('id', '?') if isinstance(raw, dict) else '?'}: malformed ({e})")
        return None


def _parse_outfit(raw: dict, problems: list[str]) -> Optional[Outfit]:
    try:
        style = raw.get("style")
        return Outfit(
            id=str(raw["id"]),
            item_ids=tuple(str(i) for i in raw["items"]),
            label=int(raw["label"]),
            style=None if style is None else StyleLabel.parse(style),
            split=str(raw.get("split", "train")),
        )
    except (KeyError, TypeError, ValueError, DataError) as e:
        problems.append(f"set {raw.get('id', '?') if isinstance(raw, dict) else '?'}: malformed ({e})")
        return None


def corpus_from_dict(data: dict, source: str = "<memory>") -> Corpus:
    problems: list[str] = []
    if not isinstance(data, dict) or "dim" not in data:
        raise DataError(f"{source}: expected an object with 'dim', 'items' and 'outfits'")
    items: dict[str, ItemRecord] = {}
    for raw in data.get("items", []):
        item = _parse_item(raw, problems)
        if item is None:
            continue
        if item.id in items:
            problems.append(f"item {item.id}: duplicate item id")
        items[item.id] = item
    outfits = [o for o in (_parse_outfit(raw, problems) for raw in data.get("outfits", [])) if o]

    corpus = Corpus(
        dim=int(data["dim"]),
        items=items,
        outfits=outfits,
        split_disjoint=bool(data.get("split_disjoint", False)),
    )
    problems.extend(validate_corpus(corpus))
    if problems:
        raise DataError(f"{source}: {len(problems)} problem(s): " + "; ".join(problems))
    return corpus


def load_corpus(path: Union[str, Path]) -> Corpus:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise DataError(f"Corpus file not found: {path}")
    except json.JSONDecodeError as e:
        raise DataError(f"Corpus file {path} is not valid JSON: {e}")
    corpus = corpus_from_dict(data, source=str(path))
    logger.info("Loaded corpus %s: %d item(s), %d set(s)", path, len(corpus.items), len(corpus.outfits))
    return corpus


def save_corpus(corpus: Corpus, path: Union[str, Path]) -> None:
    with open(path, "w") as f:
        json.dump(corpus.to_dict(), f, indent=1)
    logger.info("Wrote corpus with %d set(s) to %s", len(corpus.outfits), path)
