import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.autodiff import tensor as T
from src.autodiff.optim import Adam
from src.config import AggregationMode, OptimizerConfig
from src.data.corpus import Corpus
from src.errors import DataError
from src.graphfilter.losses import compatibility_loss, focal_loss
from src.graphfilter.network import STYLE_GROUP, NetworkParams, build_graph, forward_tensors

logger = logging.getLogger(__name__)


@dataclass
class GraphTrainingResult:
    params: NetworkParams
    curve: list[dict]


def _style_targets(corpus: Corpus, outfits, num_styles: int) -> tuple[np.ndarray, np.ndarray]:
    """One-hot style targets and a mask of sets supervising the style head."""
    targets = np.zeros((len(outfits), num_styles))
    mask = np.zeros(len(outfits), dtype=bool)
    for k, outfit in enumerate(outfits):
        if outfit.label == 1 and outfit.style is not None:
            targets[k, outfit.style.index] = 1.0
            mask[k] = True
    return targets, mask


def train_graph(
    corpus: Corpus,
    params_init: NetworkParams,
    opt: OptimizerConfig,
    mode: Optional[AggregationMode] = None,
    style_head: Optional[bool] = None,
    seed: int = 0,
    split: Optional[str] = "train",
) -> GraphTrainingResult:
    """Fit compatibility on every set and style on compatible sets only.

    With the style head off, the ``head.style`` group is left out of the
    optimizer and the focal term is dropped, so those weights come back
    bitwise unchanged.
    """
    config = params_init.config
    mode = mode or config.mode
    style_head = config.style_head if style_head is None else style_head
    params_init.validate(mode)

    outfits = corpus.outfits_in(split)
    if not outfits:
        raise DataError(f"No sets to train on in split {split!r}")
    labels = np.array([o.label for o in outfits], dtype=np.float64)
    if labels.min() == labels.max():
        logger.warning("All %d training set(s) carry label %d; AUC is undefined downstream", len(outfits), int(labels[0]))
    graphs = [build_graph(corpus.embeddings(o.item_ids)) for o in outfits]
    targets, style_mask = _style_targets(corpus, outfits, config.num_styles)

    params = params_init.copy()
    trainable = params.names(exclude_groups=() if style_head else (STYLE_GROUP,))
    optimizer = Adam(params.tensors, opt, names=trainable)
    rng = np.random.default_rng(seed)

    curve = []
    for epoch in range(1, opt.epochs + 1):
        order = rng.permutation(len(outfits))
        sums = {"compatibility_loss": 0.0, "focal_loss": 0.0}
        styled = 0
        for start in range(0, len(order), opt.batch_size):
            batch = order[start:start + opt.batch_size]
            optimizer.zero_grad()
            compat, style = forward_tensors([graphs[k] for k in batch], params.tensors, config, mode)
            comp_loss = compatibility_loss(compat, labels[batch])
            loss = comp_loss
            sums["compatibility_loss"] += comp_loss.item() * len(batch)

            rows = np.flatnonzero(style_mask[batch])
            if style_head and rows.size:
                focal = focal_loss(T.gather(style, rows), targets[batch][rows], config.gamma)
                loss = T.add(loss, T.mul(focal, config.focal_weight))
                sums["focal_loss"] += focal.item() * rows.size
                styled += rows.size

            T.backward(loss)
            optimizer.step()
            logger.debug("epoch %d batch@%d loss %.6f", epoch, start, loss.item())

        # Epoch means over sets and styled sets, independent of batching.
        comp_mean = sums["compatibility_loss"] / len(outfits)
        focal_mean = sums["focal_loss"] / styled if styled else 0.0
        record = {
            "epoch": epoch,
            "loss": comp_mean + config.focal_weight * focal_mean,
            "compatibility_loss": comp_mean,
            "focal_loss": focal_mean,
        }
        curve.append(record)
        logger.info(
            "Graph epoch %d/%d (%s): loss %.6f, bce %.6f, focal %.6f",
            epoch, opt.epochs, mode.value, record["loss"], record["compatibility_loss"], record["focal_loss"],
        )

    return GraphTrainingResult(params=NetworkParams(config, dict(params.tensors)), curve=curve)
