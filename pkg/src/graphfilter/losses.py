from typing import Union

import numpy as np

from src.autodiff import tensor as T
from src.autodiff.tensor import Tensor
from src.graphfilter.network import NetworkOutput

CLAMP = 1e-12

ScoreLike = Union[Tensor, NetworkOutput, float, np.ndarray]


def _scores(out: ScoreLike) -> Tensor:
    if isinstance(out, NetworkOutput):
        return Tensor([[out.compatibility]])
    return out if isinstance(out, Tensor) else Tensor(np.reshape(out, (-1, 1)))


def _distributions(probs: Union[Tensor, NetworkOutput, np.ndarray]) -> Tensor:
    if isinstance(probs, NetworkOutput):
        return Tensor(probs.style_distribution[None, :])
    if isinstance(probs, Tensor):
        return probs
    return Tensor(np.atleast_2d(probs))


def compatibility_loss(out: ScoreLike, label) -> Tensor:
    """Mean binary cross-entropy of compatibility scores against 0/1 labels."""
    s = T.clamp(_scores(out), CLAMP, 1.0 - CLAMP)
    y = np.reshape(np.asarray(label, dtype=np.float64), (-1, 1))
    per_set = T.add(T.mul(y, T.log(s)), T.mul(1.0 - y, T.log(T.sub(1.0, s))))
    return T.mul(T.mean(per_set), -1.0)


def focal_loss(style_probs, target, gamma: float) -> Tensor:
    """Mean of -sum_i y_i (1 - p_i)^gamma log p_i over the batch.

    At gamma = 0 this is exactly the cross-entropy.
    """
    p = T.clamp(_distributions(style_probs), CLAMP, 1.0 - CLAMP)
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    modulated = T.mul(T.power(T.sub(1.0, p), gamma), T.log(p))
    return T.mul(T.mean(T.total(T.mul(y, modulated), axis=1)), -1.0)


def cross_entropy(probs, target) -> Tensor:
    p = T.clamp(_distributions(probs), CLAMP, 1.0)
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    return T.mul(T.mean(T.total(T.mul(y, T.log(p)), axis=1)), -1.0)
