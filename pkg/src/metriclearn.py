"""Triplet metric learning over item features.

A triplet pairs an anchor with a positive from the same compatible set and
two negatives: an absolute one (another item of the anchor's category) and
a relative one (an item of the positive's category that never shares a
compatible set with the anchor). The negative distance is their convex
combination and the loss is a margin hinge on it.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.autodiff import tensor as T
from src.autodiff.checkpoint import load_model, save_model
from src.autodiff.optim import Adam
from src.autodiff.tensor import Tensor
from src.config import OptimizerConfig, TripletConfig
from src.data.corpus import Corpus, ItemRecord
from src.errors import ContractError, DataError, SamplingError

logger = logging.getLogger(__name__)

# Items are the feature carriers; the corpus record already holds id, category and embedding.
ItemFeature = ItemRecord

MODEL_KIND = "embedding"
PARAM_NAMES = ("embed.W1", "embed.b1", "embed.W2", "embed.b2")


@dataclass(frozen=True)
class TripletDistances:
    d_pos: float
    d_abs_neg: float
    d_re_neg: float

    def __post_init__(self):
        for name in ("d_pos", "d_abs_neg", "d_re_neg"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ContractError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class Triplet:
    anchor: str
    positive: str
    abs_negative: str
    rel_negative: str


def pair_distance(a: ItemFeature, b: ItemFeature, cfg: Optional[TripletConfig] = None) -> float:
    if a.embedding.shape != b.embedding.shape:
        raise ContractError(
            f"Embedding dims differ: {a.id} has {a.embedding.shape}, {b.id} has {b.embedding.shape}"
        )
    return float(np.linalg.norm(a.embedding - b.embedding))


def combined_negative(d: TripletDistances, cfg: TripletConfig) -> float:
    if cfg.alpha == 1.0:
        return d.d_abs_neg
    if cfg.alpha == 0.0:
        return d.d_re_neg
    return cfg.alpha * d.d_abs_neg + (1.0 - cfg.alpha) * d.d_re_neg


def triplet_loss(d: TripletDistances, cfg: TripletConfig) -> float:
    return max(0.0, d.d_pos - combined_negative(d, cfg) + cfg.margin)


def _as_rng(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_negatives(
    anchor: ItemFeature,
    positive: ItemFeature,
    corpus: Corpus,
    rng_seed: Union[int, np.random.Generator],
    allowed: Optional[set[str]] = None,
) -> tuple[ItemFeature, ItemFeature]:
    """Draw (absolute, relative) negatives uniformly from their pools.

    The relative pool excludes every item sharing any compatible set with
    the anchor. ``allowed`` restricts both pools (e.g. to one split).
    """
    rng = _as_rng(rng_seed)
    partners = corpus.cooccurrence.get(anchor.id, frozenset())

    def ok(item: ItemRecord) -> bool:
        return allowed is None or item.id in allowed

    abs_pool = [i for i in corpus.items_by_category.get(anchor.category, []) if i.id != anchor.id and ok(i)]
    if not abs_pool:
        raise SamplingError(
            f"No absolute negative for {anchor.id}: category {anchor.category!r} has no other item",
            pool="absolute",
        )
    rel_pool = [
        i for i in corpus.items_by_category.get(positive.category, [])
        if i.id not in partners and i.id != anchor.id and ok(i)
    ]
    if not rel_pool:
        raise SamplingError(
            f"No relative negative for {anchor.id}: every {positive.category!r} item co-occurs with it",
            pool="relative",
        )
    abs_neg = abs_pool[int(rng.integers(len(abs_pool)))]
    rel_neg = rel_pool[int(rng.integers(len(rel_pool)))]
    return abs_neg, rel_neg


def _split_items(corpus: Corpus, split: Optional[str]) -> Optional[set[str]]:
    if split is None or not corpus.split_disjoint:
        return None
    return {i for o in corpus.outfits_in(split) for i in o.item_ids}


def build_triplets(
    corpus: Corpus,
    cfg: TripletConfig,
    seed: int,
    split: Optional[str] = None,
) -> list[Triplet]:
    """One triplet per ordered (anchor, positive) pair inside compatible sets.

    Pairs beyond ``cfg.max_triplets`` are dropped by a seeded uniform draw.
    Negatives are sampled once, so a fixed seed replays identical triplets.
    """
    pairs = [
        (a, p)
        for outfit in corpus.compatible(split)
        for a in outfit.item_ids
        for p in outfit.item_ids
        if a != p
    ]
    if not pairs:
        raise DataError("No triplets: the corpus has no compatible set with 2 or more items")

    rng = np.random.default_rng(seed)
    if len(pairs) > cfg.max_triplets:
        keep = np.sort(rng.choice(len(pairs), size=cfg.max_triplets, replace=False))
        pairs = [pairs[int(k)] for k in keep]

    allowed = _split_items(corpus, split)
    triplets = []
    skipped = 0
    for a, p in pairs:
        try:
            abs_neg, rel_neg = sample_negatives(corpus.items[a], corpus.items[p], corpus, rng, allowed)
        except SamplingError as e:
            logger.debug("Skipping pair (%s, %s): %s", a, p, e)
            skipped += 1
            continue
        triplets.append(Triplet(a, p, abs_neg.id, rel_neg.id))
    if not triplets:
        raise DataError(f"No valid triplets could be sampled from {len(pairs)} pair(s)")
    if skipped:
        logger.warning("Skipped %d pair(s) with an empty negative pool", skipped)
    return triplets


class EmbeddingModel:
    """Two-layer projection D -> D -> D (ReLU between) applied to raw features."""

    def __init__(self, params: dict[str, Tensor]):
        self.params = params

    @classmethod
    def init(cls, dim: int, seed: int) -> "EmbeddingModel":
        rng = np.random.default_rng(seed)
        scale = math.sqrt(2.0 / dim)
        return cls({
            "embed.W1": Tensor(rng.normal(0.0, scale, size=(dim, dim)), requires_grad=True),
            "embed.b1": Tensor(np.zeros(dim), requires_grad=True),
            "embed.W2": Tensor(rng.normal(0.0, scale, size=(dim, dim)), requires_grad=True),
            "embed.b2": Tensor(np.zeros(dim), requires_grad=True),
        })

    @property
    def dim(self) -> int:
        return self.params["embed.W1"].shape[0]

    def forward(self, x: Tensor, params: Optional[dict[str, Tensor]] = None) -> Tensor:
        p = self.params if params is None else params
        hidden = T.relu(T.affine(x, p["embed.W1"], p["embed.b1"]))
        return T.affine(hidden, p["embed.W2"], p["embed.b2"])

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.dim:
            raise ContractError(f"Expected features of dim {self.dim}, got {features.shape[1]}")
        return self.forward(Tensor(features)).numpy()

    def transform_corpus(self, corpus: Corpus) -> Corpus:
        """Corpus whose item embeddings are replaced by their projections."""
        ids = list(corpus.items)
        if not ids:
            return corpus
        projected = self.transform(corpus.embeddings(ids))
        items = {
            item_id: ItemRecord(item_id, corpus.items[item_id].category, row, corpus.items[item_id].color)
            for item_id, row in zip(ids, projected)
        }
        return corpus.with_items(items)

    def save(self, path: Union[str, Path], metadata: Optional[dict] = None) -> None:
        save_model(path, self.params, {"kind": MODEL_KIND, "dim": self.dim, **(metadata or {})})

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EmbeddingModel":
        tensors, metadata = load_model(path)
        if metadata.get("kind") != MODEL_KIND or set(tensors) != set(PARAM_NAMES):
            raise DataError(f"{path} is not an embedding checkpoint")
        return cls(tensors)


def _distances(a: Tensor, b: Tensor) -> Tensor:
    diff = T.sub(a, b)
    # Offset keeps sqrt differentiable when two projections coincide.
    return T.sqrt(T.add(T.total(T.mul(diff, diff), axis=1), 1e-12))


def batch_triplet_loss(
    model: EmbeddingModel,
    features: dict[str, np.ndarray],
    batch: Sequence[Triplet],
    cfg: TripletConfig,
    params: Optional[dict[str, Tensor]] = None,
) -> Tensor:
    def embed(ids):
        return model.forward(Tensor(np.stack([features[i] for i in ids])), params)

    anchor = embed([t.anchor for t in batch])
    d_pos = _distances(anchor, embed([t.positive for t in batch]))
    d_abs = _distances(anchor, embed([t.abs_negative for t in batch]))
    d_re = _distances(anchor, embed([t.rel_negative for t in batch]))
    d_neg = T.add(T.mul(d_abs, cfg.alpha), T.mul(d_re, 1.0 - cfg.alpha))
    return T.mean(T.relu(T.add(T.sub(d_pos, d_neg), cfg.margin)))


@dataclass
class EmbeddingResult:
    model: EmbeddingModel
    triplets: list[Triplet]
    curve: list[dict]


def train_embedding(
    corpus: Corpus,
    cfg: TripletConfig,
    opt: OptimizerConfig,
    seed: int = 0,
    split: Optional[str] = "train",
    triplets: Optional[list[Triplet]] = None,
    model: Optional[EmbeddingModel] = None,
) -> EmbeddingResult:
    """Minimize mean triplet loss with Adam; returns the per-epoch loss curve."""
    if triplets is None:
        triplets = build_triplets(corpus, cfg, seed, split)
    if not triplets:
        raise DataError("No triplets to train on")
    model = model or EmbeddingModel.init(corpus.dim, seed)
    features = {i: corpus.items[i].embedding for t in triplets for i in (
        t.anchor, t.positive, t.abs_negative, t.rel_negative)}
    optimizer = Adam(model.params, opt)
    rng = np.random.default_rng(seed + 1)

    curve = []
    for epoch in range(1, opt.epochs + 1):
        order = rng.permutation(len(triplets))
        total_loss = 0.0
        for start in range(0, len(order), opt.batch_size):
            batch = [triplets[int(k)] for k in order[start:start + opt.batch_size]]
            optimizer.zero_grad()
            loss = batch_triplet_loss(model, features, batch, cfg)
            T.backward(loss)
            optimizer.step()
            total_loss += loss.item() * len(batch)
        epoch_loss = total_loss / len(triplets)
        curve.append({"epoch": epoch, "loss": epoch_loss, "triplet_loss": epoch_loss})
        logger.info("Embedding epoch %d/%d: triplet loss %.6f", epoch, opt.epochs, epoch_loss)
    return EmbeddingResult(model=model, triplets=triplets, curve=curve)


def margin_accuracy(
    model: Optional[EmbeddingModel],
    triplets: Sequence[Triplet],
    corpus: Corpus,
    cfg: TripletConfig,
) -> float:
    """Fraction of triplets with d_pos + margin <= d_neg in the projected space."""
    if not triplets:
        raise DataError("margin_accuracy needs at least one triplet")
    ids = sorted({i for t in triplets for i in (t.anchor, t.positive, t.abs_negative, t.rel_negative)})
    raw = corpus.embeddings(ids)
    projected = raw if model is None else model.transform(raw)
    row = {item_id: k for k, item_id in enumerate(ids)}

    satisfied = 0
    for t in triplets:
        a = projected[row[t.anchor]]
        d = TripletDistances(
            d_pos=float(np.linalg.norm(a - projected[row[t.positive]])),
            d_abs_neg=float(np.linalg.norm(a - projected[row[t.abs_negative]])),
            d_re_neg=float(np.linalg.norm(a - projected[row[t.rel_negative]])),
        )
        if d.d_pos + cfg.margin <= combined_negative(d, cfg):
            satisfied += 1
    return satisfied / len(triplets)
